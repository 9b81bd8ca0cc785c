#include "tabsem/corpus.hpp"

#include <algorithm>

#include "tabsem/entities.hpp"

namespace tabsem {

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        case Split::Test: return "test";
    }
    return "?";
}

std::optional<Split> split_from_name(std::string_view s) {
    if (s == "train") return Split::Train;
    if (s == "dev") return Split::Dev;
    if (s == "test") return Split::Test;
    return std::nullopt;
}

const Table& Corpus::table_of(const Example& e) const {
    auto it = tables.find(e.table_id);
    if (it == tables.end()) fail("example %s references unknown table %s",
                                 e.id.c_str(), e.table_id.c_str());
    return it->second;
}

std::vector<const Example*> Corpus::of_split(Split s) const {
    std::vector<const Example*> out;
    for (const auto& e : examples)
        if (e.split == s) out.push_back(&e);
    return out;
}

const Example* Corpus::find(std::string_view id) const {
    for (const auto& e : examples)
        if (e.id == id) return &e;
    return nullptr;
}

bool Corpus::any_pos() const {
    for (const auto& e : examples)
        for (const auto& t : e.question.tokens)
            if (t.pos) return true;
    return false;
}

namespace {

struct QLine {
    size_t lineno;
    std::vector<std::string> fields;
};

[[noreturn]] void line_fail(const std::string& origin, size_t lineno, const std::string& msg) {
    fail_parse("%s:%zu: %s", origin.c_str(), lineno, msg.c_str());
}

}  // namespace

Corpus parse_corpus(std::string_view content, const std::string& origin) {
    Corpus corpus;
    std::vector<QLine> q_lines;

    size_t lineno = 0;
    size_t start = 0;
    while (start <= content.size()) {
        size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = content.substr(start, end - start);
        start = end + 1;
        ++lineno;
        if (line.empty()) {
            if (start > content.size()) break;
            continue;
        }
        std::vector<std::string> fields = split(line, '\t');
        const std::string& tag = fields[0];
        if (tag == "T") {
            if (fields.size() < 3) line_fail(origin, lineno, "T record needs id and columns");
            Table t;
            t.id = fields[1];
            if (corpus.tables.count(t.id))
                line_fail(origin, lineno, format("duplicate table id '%s'", t.id.c_str()));
            for (size_t i = 2; i < fields.size(); ++i) {
                size_t colon = fields[i].rfind(':');
                if (colon == std::string::npos)
                    line_fail(origin, lineno,
                              format("column declaration '%s' lacks a :type suffix",
                                     fields[i].c_str()));
                std::string name = fields[i].substr(0, colon);
                auto ctype = col_type_from_name(fields[i].substr(colon + 1));
                if (!ctype)
                    line_fail(origin, lineno,
                              format("unknown column type in '%s'", fields[i].c_str()));
                Column col;
                for (const auto& tok : split(to_lower(name), '_'))
                    if (!tok.empty()) col.name_tokens.push_back(tok);
                if (col.name_tokens.empty())
                    line_fail(origin, lineno, "empty column name");
                col.ctype = *ctype;
                t.columns.push_back(std::move(col));
            }
            corpus.tables.emplace(t.id, std::move(t));
        } else if (tag == "R") {
            if (fields.size() < 3) line_fail(origin, lineno, "R record needs id and cells");
            auto it = corpus.tables.find(fields[1]);
            if (it == corpus.tables.end())
                line_fail(origin, lineno,
                          format("row for undeclared table '%s'", fields[1].c_str()));
            Table& t = it->second;
            if (fields.size() - 2 != t.columns.size())
                line_fail(origin, lineno,
                          format("row has %zu cells, table '%s' has %zu columns",
                                 fields.size() - 2, t.id.c_str(), t.columns.size()));
            for (size_t c = 0; c < t.columns.size(); ++c) {
                CellValue v;
                try {
                    v = parse_cell(fields[c + 2]);
                } catch (const ParseError& e) {
                    line_fail(origin, lineno, e.what());
                }
                if (v.type() != t.columns[c].ctype)
                    line_fail(origin, lineno,
                              format("type mismatch in column '%s' row %zu: cell is %s, "
                                     "column is %s",
                                     t.columns[c].name().c_str(), t.n_rows,
                                     col_type_name(v.type()),
                                     col_type_name(t.columns[c].ctype)));
                t.columns[c].cells.push_back(std::move(v));
            }
            t.n_rows += 1;
        } else if (tag == "Q") {
            q_lines.push_back(QLine{lineno, std::move(fields)});
        } else {
            line_fail(origin, lineno, format("unknown record tag '%s'", tag.c_str()));
        }
    }

    for (auto& [id, t] : corpus.tables) {
        try {
            t.validate();
        } catch (const ParseError& e) {
            fail_parse("%s: %s", origin.c_str(), e.what());
        }
    }

    size_t q_index = 0;
    for (const auto& ql : q_lines) {
        const auto& f = ql.fields;
        if (f.size() < 4) line_fail(origin, ql.lineno, "Q record too short");
        auto tit = corpus.tables.find(f[1]);
        if (tit == corpus.tables.end())
            line_fail(origin, ql.lineno, format("question references undeclared table '%s'",
                                                f[1].c_str()));
        const Table& table = tit->second;
        auto split_opt = split_from_name(f[2]);
        if (!split_opt)
            line_fail(origin, ql.lineno, format("unknown split '%s'", f[2].c_str()));

        // fields: tokens until '#', then denotation cells until optional '#',
        // then gold program texts
        std::vector<std::string> tokens;
        std::vector<std::optional<std::string>> pos_tags;
        size_t i = 3;
        for (; i < f.size() && f[i] != "#"; ++i) {
            size_t slash = f[i].rfind('/');
            if (slash != std::string::npos && slash > 0 && slash + 1 < f[i].size()) {
                tokens.push_back(to_lower(f[i].substr(0, slash)));
                pos_tags.emplace_back(f[i].substr(slash + 1));
            } else {
                tokens.push_back(to_lower(f[i]));
                pos_tags.emplace_back(std::nullopt);
            }
        }
        if (i >= f.size()) line_fail(origin, ql.lineno, "Q record lacks the '#' separator");
        ++i;
        Denotation den;
        for (; i < f.size() && f[i] != "#"; ++i) {
            try {
                den.values.push_back(parse_cell(f[i]));
            } catch (const ParseError& e) {
                line_fail(origin, ql.lineno, e.what());
            }
        }
        if (den.values.empty())
            line_fail(origin, ql.lineno, "gold denotation must be non-empty");

        Example ex;
        ex.id = format("q%06zu", q_index++);
        ex.table_id = f[1];
        ex.split = *split_opt;
        ex.denotation = std::move(den);
        if (i < f.size() && f[i] == "#") {
            for (++i; i < f.size(); ++i) {
                if (f[i].empty()) continue;
                try {
                    ex.gold_programs.push_back(parse_program(f[i], table));
                } catch (const ParseError& e) {
                    line_fail(origin, ql.lineno, e.what());
                }
            }
        }
        try {
            auto entities = extract_entities(tokens, table);
            ex.question = annotate(tokens, pos_tags, std::move(entities), table);
        } catch (const ParseError& e) {
            line_fail(origin, ql.lineno, e.what());
        }
        corpus.examples.push_back(std::move(ex));
    }
    return corpus;
}

Corpus load_corpus(const std::string& path) {
    return parse_corpus(read_file(path), path);
}

std::string serialize_corpus(const Corpus& c) {
    std::string out;
    for (const auto& [id, t] : c.tables) {  // std::map: sorted by id
        out += "T\t" + id;
        for (const auto& col : t.columns)
            out += format("\t%s:%s", col.name().c_str(), col_type_name(col.ctype));
        out += '\n';
        for (size_t r = 0; r < t.n_rows; ++r) {
            out += "R\t" + id;
            for (const auto& col : t.columns) out += '\t' + print_cell(col.cells[r]);
            out += '\n';
        }
    }
    for (const auto& e : c.examples) {
        out += format("Q\t%s\t%s", e.table_id.c_str(), split_name(e.split));
        const int n_real = e.question.sentinel_index();
        for (int i = 0; i < n_real; ++i) {
            const Token& tok = e.question.tokens[static_cast<size_t>(i)];
            out += '\t' + tok.text;
            if (tok.pos) out += '/' + *tok.pos;
        }
        out += "\t#";
        for (const auto& v : e.denotation.values) out += '\t' + print_cell(v);
        if (!e.gold_programs.empty()) {
            out += "\t#";
            for (const auto& g : e.gold_programs) out += '\t' + g.print();
        }
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& c, const std::string& path) {
    write_file(path, serialize_corpus(c));
}

}  // namespace tabsem
