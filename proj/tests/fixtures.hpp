#pragma once

// Hand-authored tables shared across test suites.

#include "tabsem/entities.hpp"
#include "tabsem/table.hpp"

namespace fixtures {

using namespace tabsem;

inline Column str_col(std::string name, std::vector<std::string> cells) {
    Column c;
    c.name_tokens = split(name, ' ');
    c.ctype = ColType::String;
    for (auto& s : cells) c.cells.push_back(CellValue::text(std::move(s)));
    return c;
}

inline Column num_col(std::string name, std::vector<double> cells) {
    Column c;
    c.name_tokens = split(name, ' ');
    c.ctype = ColType::Number;
    for (double x : cells) c.cells.push_back(CellValue::number(x));
    return c;
}

inline Column date_col(std::string name, std::vector<Date> cells) {
    Column c;
    c.name_tokens = split(name, ' ');
    c.ctype = ColType::Date;
    for (const Date& d : cells) c.cells.push_back(CellValue::date(d));
    return c;
}

// the medal table: rows (turkey,1,0), (norway,0,5)
inline Table medals() {
    Table t;
    t.id = "t1";
    t.columns = {str_col("nation", {"turkey", "norway"}), num_col("gold", {1, 0}),
                 num_col("silver", {0, 5})};
    t.n_rows = 2;
    t.validate();
    return t;
}

// duplicate extrema for tie semantics; a date column for date ordering
inline Table races() {
    Table t;
    t.id = "t2";
    t.columns = {str_col("driver", {"hunt", "lauda", "watson", "mass"}),
                 num_col("laps", {70, 70, 52, 68}),
                 num_col("points", {9, 6, 4, 0}),
                 date_col("race day", {Date{1976, 8, 1}, Date{1976, 8, 1},
                                       Date{1977, 5, 8}, Date{1976, 10, 24}})};
    t.n_rows = 4;
    t.validate();
    return t;
}

// strings only, duplicated cells across columns
inline Table cities() {
    Table t;
    t.id = "t3";
    t.columns = {str_col("city", {"oslo", "bergen", "oslo"}),
                 str_col("club", {"viking", "brann", "lyn"}),
                 num_col("titles", {3, 1, 3})};
    t.n_rows = 3;
    t.validate();
    return t;
}

inline Question ask(const Table& t, std::vector<std::string> tokens) {
    auto ents = extract_entities(tokens, t);
    return annotate(tokens, {}, std::move(ents), t);
}

}  // namespace fixtures
