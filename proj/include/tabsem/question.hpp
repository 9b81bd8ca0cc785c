#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabsem/table.hpp"

namespace tabsem {

// Reserved token appended to every annotated question; a row slot aligned to
// it is expected to be instantiated with the all_rows candidate.
inline constexpr const char* kSentinelToken = "ALL_ROW";

struct Token {
    std::string text;  // lowercase, non-empty
    std::optional<std::string> pos;
    bool in_table = false;
};

// Inclusive token span [start, end] over the question, sentinel excluded.
struct EntityMention {
    int start = 0;
    int end = 0;
    CellValue value;
    std::optional<int> source_column;
};

struct Question {
    std::vector<Token> tokens;  // last token is the sentinel
    std::vector<EntityMention> entities;

    int n() const { return static_cast<int>(tokens.size()); }
    int sentinel_index() const { return n() - 1; }
    bool token_in_entity(int i) const;
};

struct Denotation {
    std::vector<CellValue> values;  // order-insensitive multiset
};

// Multiset equality: numbers within abs tolerance 1e-6, strings
// case-insensitive, dates fieldwise.
bool denotation_equal(const Denotation& a, const Denotation& b);

std::string print_denotation(const Denotation& d);  // tab-separated cells

}  // namespace tabsem
