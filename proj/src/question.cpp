#include "tabsem/question.hpp"

#include <algorithm>

namespace tabsem {

bool Question::token_in_entity(int i) const {
    for (const auto& e : entities)
        if (e.start <= i && i <= e.end) return true;
    return false;
}

bool denotation_equal(const Denotation& a, const Denotation& b) {
    if (a.values.size() != b.values.size()) return false;
    std::vector<CellValue> sa = a.values, sb = b.values;
    std::sort(sa.begin(), sa.end(), value_less);
    std::sort(sb.begin(), sb.end(), value_less);
    for (size_t i = 0; i < sa.size(); ++i)
        if (!value_equal(sa[i], sb[i])) return false;
    return true;
}

std::string print_denotation(const Denotation& d) {
    std::vector<std::string> parts;
    parts.reserve(d.values.size());
    for (const auto& v : d.values) parts.push_back(print_cell(v));
    return join(parts, "\t");
}

}  // namespace tabsem
