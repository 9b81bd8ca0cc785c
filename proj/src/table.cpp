#include "tabsem/table.hpp"

#include <set>

namespace tabsem {

void Table::validate() const {
    if (n_rows < 1) fail_parse("table %s: must have at least one row", id.c_str());
    if (columns.empty()) fail_parse("table %s: no columns", id.c_str());
    std::set<std::string> names;
    for (size_t c = 0; c < columns.size(); ++c) {
        const Column& col = columns[c];
        if (col.name_tokens.empty())
            fail_parse("table %s: column %zu has empty name", id.c_str(), c);
        for (const auto& t : col.name_tokens)
            if (t.empty())
                fail_parse("table %s: column %zu has an empty name token", id.c_str(), c);
        if (!names.insert(col.name()).second)
            fail_parse("table %s: duplicate column name '%s'", id.c_str(), col.name().c_str());
        if (col.cells.size() != n_rows)
            fail_parse("table %s: column '%s' has %zu cells, expected %zu rows",
                       id.c_str(), col.name().c_str(), col.cells.size(), n_rows);
        for (size_t r = 0; r < col.cells.size(); ++r) {
            if (col.cells[r].type() != col.ctype)
                fail_parse("table %s: column '%s' row %zu: cell type %s does not match "
                           "declared type %s",
                           id.c_str(), col.name().c_str(), r,
                           col_type_name(col.cells[r].type()), col_type_name(col.ctype));
        }
    }
}

int Table::column_index(std::string_view name) const {
    for (size_t c = 0; c < columns.size(); ++c)
        if (columns[c].name() == name) return static_cast<int>(c);
    return -1;
}

bool Table::has_type(ColType t) const {
    for (const auto& c : columns)
        if (c.ctype == t) return true;
    return false;
}

}  // namespace tabsem
