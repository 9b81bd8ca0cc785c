#include "doctest.h"
#include "fixtures.hpp"
#include "golden_programs.hpp"
#include "tabsem/executor.hpp"

using namespace tabsem;
using namespace fixtures;

static const Table& table_by_name(const char* name) {
    static Table m = medals(), r = races(), c = cities();
    if (std::string_view(name) == "medals") return m;
    if (std::string_view(name) == "races") return r;
    return c;
}

TEST_CASE("golden execution suite") {
    for (const auto& g : golden_cases()) {
        CAPTURE(g.program);
        const Table& t = table_by_name(g.table);
        Program z = parse_program(g.program, t);
        ExecResult r = execute(z, t);
        if (g.error) {
            REQUIRE_FALSE(exec_ok(r));
            CHECK(exec_error(r).kind == *g.error);
        } else {
            REQUIRE(exec_ok(r));
            Denotation want;
            for (const char* cell : g.denotation) want.values.push_back(parse_cell(cell));
            CHECK(denotation_equal(exec_denotation(r), want));
        }
    }
}

TEST_CASE("execution is pure: inputs never change") {
    Table t = medals();
    std::string before = t.columns[2].cells[1].is_number()
                             ? format_number(t.columns[2].cells[1].as_number())
                             : "";
    Program z = parse_program("select(argmax(all_rows, col:silver), col:nation)", t);
    std::string zp = z.print();
    (void)execute(z, t);
    (void)execute(z, t);
    CHECK(format_number(t.columns[2].cells[1].as_number()) == before);
    CHECK(z.print() == zp);
}

TEST_CASE("program text: parse and print are inverses on canonical text") {
    Table t = races();
    for (const auto& g : golden_cases()) {
        if (std::string_view(g.table) != "races") continue;
        Program z = parse_program(g.program, t);
        CHECK(z.print() == g.program);
        Program z2 = parse_program(z.print(), t);
        CHECK(z2.print() == z.print());
    }
}

TEST_CASE("program parse errors carry an offset") {
    Table t = medals();
    // arity problems are caught by typecheck, not the parser
    CHECK_FALSE(typecheck(parse_program("select(all_rows)", t), t).ok);
    CHECK_THROWS_AS(parse_program("frobnicate(all_rows)", t), ParseError);
    CHECK_THROWS_AS(parse_program("select(all_rows, col:unknown)", t), ParseError);
    CHECK_THROWS_AS(parse_program("count(all_rows) junk", t), ParseError);
    CHECK_THROWS_AS(parse_program("filter(all_rows, and(gt(s:x, col:nation)))", t),
                    ParseError);  // string column with ordered op
}

TEST_CASE("filter_rows") {
    Table t = medals();
    SUBCASE("single condition") {
        Condition c{2, "silver", CmpOp::Gt, CellValue::number(0)};
        auto rows = filter_rows(t, Candidate::row_filter({c}, Connective::None));
        CHECK(rows == std::vector<int>{1});
    }
    SUBCASE("all_rows") {
        auto rows = filter_rows(t, Candidate::all_rows());
        CHECK(rows == std::vector<int>{0, 1});
    }
    SUBCASE("or of two conditions") {
        Condition a{1, "gold", CmpOp::Eq, CellValue::number(1)};
        Condition b{2, "silver", CmpOp::Eq, CellValue::number(5)};
        auto rows = filter_rows(t, Candidate::row_filter({a, b}, Connective::Or));
        CHECK(rows == std::vector<int>{0, 1});
    }
    SUBCASE("and of two conditions") {
        Condition a{1, "gold", CmpOp::Eq, CellValue::number(1)};
        Condition b{2, "silver", CmpOp::Eq, CellValue::number(5)};
        auto rows = filter_rows(t, Candidate::row_filter({a, b}, Connective::And));
        CHECK(rows.empty());
    }
    SUBCASE("mismatched value type is false, not an error") {
        Condition c{0, "nation", CmpOp::Eq, CellValue::number(7)};
        auto rows = filter_rows(t, Candidate::row_filter({c}, Connective::None));
        CHECK(rows.empty());
    }
}

TEST_CASE("typecheck") {
    Table t = medals();
    SUBCASE("sum over a string column is rejected with a diagnostic") {
        Program z = Program::call(
            Func::Sum, {Program::row_leaf(Candidate::all_rows()),
                        Program::column_leaf(0, "nation", ColType::String)});
        auto r = typecheck(z, t);
        CHECK_FALSE(r.ok);
        CHECK(r.diagnostic.find("sum") != std::string::npos);
    }
    SUBCASE("column index out of range") {
        Program z = Program::call(
            Func::Count, {Program::row_leaf(Candidate::all_rows())});
        z = Program::call(Func::Select, {Program::row_leaf(Candidate::all_rows()),
                                         Program::column_leaf(9, "gold", ColType::Number)});
        CHECK_FALSE(typecheck(z, t).ok);
    }
    SUBCASE("golden programs all typecheck") {
        for (const auto& g : golden_cases()) {
            const Table& tb = table_by_name(g.table);
            Program z = parse_program(g.program, tb);
            CAPTURE(g.program);
            CHECK(typecheck(z, tb).ok);
        }
    }
}

TEST_CASE("determinism: repeated execution is identical") {
    Table t = races();
    Program z = parse_program("average(all_rows, col:points)", t);
    ExecResult a = execute(z, t);
    ExecResult b = execute(z, t);
    REQUIRE(exec_ok(a));
    REQUIRE(exec_ok(b));
    CHECK(exec_denotation(a).values[0].as_number() ==
          exec_denotation(b).values[0].as_number());
}
