#include "tabsem/value.hpp"

#include <cmath>

namespace tabsem {

const char* col_type_name(ColType t) {
    switch (t) {
        case ColType::String: return "string";
        case ColType::Number: return "number";
        case ColType::Date: return "date";
    }
    return "?";
}

std::optional<ColType> col_type_from_name(std::string_view s) {
    if (s == "string" || s == "str" || s == "s") return ColType::String;
    if (s == "number" || s == "num" || s == "n") return ColType::Number;
    if (s == "date" || s == "d") return ColType::Date;
    return std::nullopt;
}

CellValue CellValue::number(double x) {
    if (!std::isfinite(x)) fail_parse("number cell must be finite");
    return CellValue(x);
}

CellValue CellValue::date(Date d) {
    if (d.year == 0) fail_parse("date cell must have a nonzero year");
    if (d.month < 0 || d.month > 12 || d.day < 0 || d.day > 31)
        fail_parse("date cell out of range: %d-%d-%d", d.year, d.month, d.day);
    return CellValue(d);
}

ColType CellValue::type() const {
    if (is_text()) return ColType::String;
    if (is_number()) return ColType::Number;
    return ColType::Date;
}

bool value_equal(const CellValue& a, const CellValue& b, double num_tol) {
    if (a.is_text() && b.is_text()) return iequals(a.as_text(), b.as_text());
    if (a.is_number() && b.is_number())
        return std::fabs(a.as_number() - b.as_number()) <= num_tol;
    if (a.is_date() && b.is_date()) return a.as_date() == b.as_date();
    return false;
}

static int variant_rank(const CellValue& v) {
    if (v.is_text()) return 0;
    if (v.is_number()) return 1;
    return 2;
}

bool value_less(const CellValue& a, const CellValue& b) {
    int ra = variant_rank(a), rb = variant_rank(b);
    if (ra != rb) return ra < rb;
    if (a.is_text()) return to_lower(a.as_text()) < to_lower(b.as_text());
    if (a.is_number()) return a.as_number() < b.as_number();
    return a.as_date() < b.as_date();
}

std::optional<int> value_compare(const CellValue& cell, const CellValue& ref) {
    if (cell.is_number() && ref.is_number()) {
        double a = cell.as_number(), b = ref.as_number();
        return a < b ? -1 : (a > b ? 1 : 0);
    }
    if (cell.is_date() && ref.is_date()) {
        const Date &a = cell.as_date(), &b = ref.as_date();
        return a < b ? -1 : (a == b ? 0 : 1);
    }
    return std::nullopt;
}

std::string print_date(const Date& d) {
    if (d.month == 0) return format("%d", d.year);
    if (d.day == 0) return format("%d-%02d", d.year, d.month);
    return format("%d-%02d-%02d", d.year, d.month, d.day);
}

std::optional<Date> parse_date(std::string_view s) {
    auto parts = split(s, '-');
    if (parts.empty() || parts.size() > 3) return std::nullopt;
    auto digits = [](const std::string& p) {
        if (p.empty()) return false;
        for (char c : p)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (parts[0].size() != 4 || !digits(parts[0])) return std::nullopt;
    Date d;
    d.year = std::stoi(parts[0]);
    if (d.year == 0) return std::nullopt;
    if (parts.size() >= 2) {
        if (parts[1].size() != 2 || !digits(parts[1])) return std::nullopt;
        d.month = std::stoi(parts[1]);
        if (d.month < 1 || d.month > 12) return std::nullopt;
    }
    if (parts.size() == 3) {
        if (parts[2].size() != 2 || !digits(parts[2])) return std::nullopt;
        d.day = std::stoi(parts[2]);
        if (d.day < 1 || d.day > 31) return std::nullopt;
    }
    return d;
}

std::string print_cell(const CellValue& v) {
    if (v.is_text()) return "s:" + v.as_text();
    if (v.is_number()) return "n:" + format_number(v.as_number());
    return "d:" + print_date(v.as_date());
}

CellValue parse_cell(std::string_view s) {
    if (s.size() < 2 || s[1] != ':')
        fail_parse("cell must start with s:/n:/d: tag, got '%.*s'", (int)s.size(), s.data());
    std::string_view body = s.substr(2);
    switch (s[0]) {
        case 's': return CellValue::text(std::string(body));
        case 'n': {
            double x;
            if (!parse_number(body, x))
                fail_parse("bad number cell '%.*s'", (int)s.size(), s.data());
            return CellValue::number(x);
        }
        case 'd': {
            auto d = parse_date(body);
            if (!d) fail_parse("bad date cell '%.*s'", (int)s.size(), s.data());
            return CellValue::date(*d);
        }
        default: fail_parse("unknown cell tag '%c'", s[0]);
    }
}

}  // namespace tabsem
