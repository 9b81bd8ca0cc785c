#include "tabsem/entities.hpp"

#include <set>
#include <tuple>

namespace tabsem {

bool normalize_number_token(std::string_view tok, double& out) {
    if (tok.empty()) return false;
    std::string s;
    size_t start = 0;
    if (tok[0] == '$' || tok[0] == '#') start = 1;
    // UTF-8 currency symbols we bother to strip
    for (const char* cur : {"\xE2\x82\xAC", "\xC2\xA3"}) {  // euro, pound
        size_t len = std::strlen(cur);
        if (tok.size() > len && tok.substr(0, len) == cur) start = len;
    }
    for (size_t i = start; i < tok.size(); ++i) {
        if (tok[i] == ',') continue;
        s.push_back(tok[i]);
    }
    if (s.empty()) return false;
    return parse_number(s, out);
}

std::vector<EntityMention> extract_entities(const std::vector<std::string>& raw_tokens,
                                            const Table& table) {
    std::vector<EntityMention> out;
    const int n = static_cast<int>(raw_tokens.size());

    // longest string cell in tokens bounds the span length worth trying
    size_t max_cell_tokens = 1;
    for (const auto& col : table.columns) {
        if (col.ctype != ColType::String) continue;
        for (const auto& cell : col.cells) {
            size_t words = split(cell.as_text(), ' ').size();
            max_cell_tokens = std::max(max_cell_tokens, words);
        }
    }

    std::set<std::tuple<int, int, int>> seen;  // (start, end, column)
    for (int i = 0; i < n; ++i) {
        std::string span_text;
        for (int j = i; j < n && j - i < static_cast<int>(max_cell_tokens); ++j) {
            if (j > i) span_text += ' ';
            span_text += raw_tokens[j];
            for (size_t c = 0; c < table.columns.size(); ++c) {
                const Column& col = table.columns[c];
                if (col.ctype != ColType::String) continue;
                bool match = false;
                for (const auto& cell : col.cells) {
                    if (iequals(cell.as_text(), span_text)) {
                        match = true;
                        break;
                    }
                }
                if (match && seen.insert({i, j, (int)c}).second) {
                    EntityMention m;
                    m.start = i;
                    m.end = j;
                    m.value = CellValue::text(span_text);
                    m.source_column = static_cast<int>(c);
                    out.push_back(std::move(m));
                }
            }
        }
    }

    bool table_has_date = table.has_type(ColType::Date);
    for (int i = 0; i < n; ++i) {
        const std::string& tok = raw_tokens[i];
        double num;
        if (normalize_number_token(tok, num)) {
            CellValue v = CellValue::number(num);
            bool sourced = false;
            for (size_t c = 0; c < table.columns.size(); ++c) {
                if (table.columns[c].ctype != ColType::Number) continue;
                for (const auto& cell : table.columns[c].cells) {
                    if (value_equal(cell, v)) {
                        EntityMention m{i, i, v, static_cast<int>(c)};
                        out.push_back(m);
                        sourced = true;
                        break;
                    }
                }
            }
            if (!sourced) out.push_back(EntityMention{i, i, v, std::nullopt});
        }
        if (table_has_date) {
            if (auto d = parse_date(tok)) {
                CellValue v = CellValue::date(*d);
                bool sourced = false;
                for (size_t c = 0; c < table.columns.size(); ++c) {
                    if (table.columns[c].ctype != ColType::Date) continue;
                    for (const auto& cell : table.columns[c].cells) {
                        if (value_equal(cell, v)) {
                            EntityMention m{i, i, v, static_cast<int>(c)};
                            out.push_back(m);
                            sourced = true;
                            break;
                        }
                    }
                }
                if (!sourced) out.push_back(EntityMention{i, i, v, std::nullopt});
            }
        }
    }
    return out;
}

Question annotate(const std::vector<std::string>& raw_tokens,
                  const std::vector<std::optional<std::string>>& pos_tags,
                  std::vector<EntityMention> entities, const Table& table) {
    // vocabulary of table words for the in_table indicator
    std::set<std::string> table_words;
    for (const auto& col : table.columns) {
        for (const auto& t : col.name_tokens) table_words.insert(to_lower(t));
        if (col.ctype != ColType::String) continue;
        for (const auto& cell : col.cells)
            for (const auto& w : split(to_lower(cell.as_text()), ' '))
                if (!w.empty()) table_words.insert(w);
    }

    Question q;
    q.tokens.reserve(raw_tokens.size() + 1);
    for (size_t i = 0; i < raw_tokens.size(); ++i) {
        Token t;
        t.text = to_lower(raw_tokens[i]);
        if (t.text.empty()) fail_parse("empty question token at position %zu", i);
        if (i < pos_tags.size()) t.pos = pos_tags[i];
        t.in_table = table_words.count(t.text) > 0;
        q.tokens.push_back(std::move(t));
    }
    Token sentinel;
    sentinel.text = kSentinelToken;
    sentinel.in_table = false;
    q.tokens.push_back(std::move(sentinel));
    q.entities = std::move(entities);
    for (const auto& e : q.entities) {
        if (e.start < 0 || e.end < e.start || e.end >= q.sentinel_index())
            fail_parse("entity span (%d,%d) out of range for question of length %d",
                       e.start, e.end, q.n());
    }
    return q;
}

std::vector<bool> column_indicator(const Table& table, const Question& q) {
    std::vector<bool> flags(table.columns.size(), false);
    for (const auto& e : q.entities)
        if (e.source_column && *e.source_column >= 0 &&
            *e.source_column < static_cast<int>(flags.size()))
            flags[*e.source_column] = true;
    return flags;
}

}  // namespace tabsem
