#pragma once

#include <map>

#include "tabsem/executor.hpp"
#include "tabsem/question.hpp"

namespace tabsem {

enum class Split : uint8_t { Train, Dev, Test };
const char* split_name(Split s);
std::optional<Split> split_from_name(std::string_view s);

struct Example {
    std::string id;  // derived from file order: q000000, q000001, ...
    Question question;
    std::string table_id;
    Denotation denotation;
    std::vector<Program> gold_programs;  // synthetic corpora only
    Split split = Split::Train;
};

struct Corpus {
    std::map<std::string, Table> tables;
    std::vector<Example> examples;

    const Table& table_of(const Example& e) const;
    std::vector<const Example*> of_split(Split s) const;
    const Example* find(std::string_view id) const;
    bool any_pos() const;
};

// Line-delimited UTF-8 format, tab-separated fields:
//   T <id> <col:type>...                       column declaration
//   R <id> <cell>...                           one row, cells in column order
//   Q <table_id> <split> <tok[/POS]>... # <cell>... [# <program>...]
// Cells use the s:/n:/d: tagged syntax. Tables may appear in any order
// relative to questions; a table's rows must all share its T declaration.
Corpus load_corpus(const std::string& path);
Corpus parse_corpus(std::string_view content, const std::string& origin);

std::string serialize_corpus(const Corpus& c);  // canonical form
void save_corpus(const Corpus& c, const std::string& path);

}  // namespace tabsem
