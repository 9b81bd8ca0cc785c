#pragma once

#include <string>
#include <vector>

#include "tabsem/value.hpp"

namespace tabsem {

struct Column {
    std::vector<std::string> name_tokens;  // lowercase, non-empty
    ColType ctype = ColType::String;
    std::vector<CellValue> cells;  // one per row, variant matches ctype

    std::string name() const { return join(name_tokens, "_"); }
};

struct Table {
    std::string id;
    std::vector<Column> columns;
    size_t n_rows = 0;

    // Throws ParseError naming the offending column/row on invariant breaks.
    void validate() const;

    int column_index(std::string_view name) const;  // -1 if absent
    bool has_type(ColType t) const;
};

}  // namespace tabsem
