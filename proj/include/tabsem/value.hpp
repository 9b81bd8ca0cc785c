#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "tabsem/common.hpp"

namespace tabsem {

enum class ColType : uint8_t { String, Number, Date };

const char* col_type_name(ColType t);
std::optional<ColType> col_type_from_name(std::string_view s);

// month/day may be 0 = unknown; year is never 0.
struct Date {
    int year = 0;
    int month = 0;
    int day = 0;

    bool operator==(const Date&) const = default;
    // unknown components sort earliest
    auto operator<=>(const Date&) const = default;
};

// A table cell or denotation value: text, finite number, or date.
class CellValue {
public:
    CellValue() : v_(std::string()) {}
    static CellValue text(std::string s) { return CellValue(std::move(s)); }
    static CellValue number(double x);
    static CellValue date(Date d);

    bool is_text() const { return std::holds_alternative<std::string>(v_); }
    bool is_number() const { return std::holds_alternative<double>(v_); }
    bool is_date() const { return std::holds_alternative<Date>(v_); }
    ColType type() const;

    const std::string& as_text() const { return std::get<std::string>(v_); }
    double as_number() const { return std::get<double>(v_); }
    const Date& as_date() const { return std::get<Date>(v_); }

private:
    explicit CellValue(std::string s) : v_(std::move(s)) {}
    explicit CellValue(double x) : v_(x) {}
    explicit CellValue(Date d) : v_(d) {}

    std::variant<std::string, double, Date> v_;
};

// Equality used by denotation comparison: numbers within abs tolerance 1e-6,
// strings case-insensitive, dates fieldwise. Different variants never equal.
bool value_equal(const CellValue& a, const CellValue& b, double num_tol = 1e-6);

// Total order used for canonical sorting (exact, not tolerance-based):
// variant rank first (text < number < date), then natural order within.
bool value_less(const CellValue& a, const CellValue& b);

// Natural order for numbers and dates; nullopt for strings or mismatched
// variants. String conditions are equality-only and handled by the caller.
std::optional<int> value_compare(const CellValue& cell, const CellValue& ref);

// Tagged cell syntax used in corpus files and program text:
//   s:<text>   n:<decimal>   d:<YYYY[-MM[-DD]]>
std::string print_cell(const CellValue& v);
CellValue parse_cell(std::string_view s);

std::string print_date(const Date& d);
// Accepts YYYY, YYYY-MM, YYYY-MM-DD (4-digit year).
std::optional<Date> parse_date(std::string_view s);

}  // namespace tabsem
