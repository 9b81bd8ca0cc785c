#include "doctest.h"
#include "fixtures.hpp"
#include "tabsem/corpus.hpp"

using namespace tabsem;
using namespace fixtures;

TEST_CASE("cell values: parse/print round trip") {
    for (const char* s : {"s:turkey", "s:new york", "n:2000", "n:-3.5", "n:0.125",
                          "d:1976", "d:1976-08", "d:1976-08-01"}) {
        CellValue v = parse_cell(s);
        CHECK(print_cell(v) == s);
    }
    CHECK_THROWS_AS(parse_cell("n:abc"), ParseError);
    CHECK_THROWS_AS(parse_cell("d:199"), ParseError);
    CHECK_THROWS_AS(parse_cell("x:foo"), ParseError);
    CHECK_THROWS_AS(parse_cell("d:0000"), ParseError);      // year 0 invalid
    CHECK_THROWS_AS(parse_cell("d:1976-13"), ParseError);
}

TEST_CASE("number formatting is canonical") {
    CHECK(format_number(2000.0) == "2000");
    CHECK(format_number(-7.0) == "-7");
    CHECK(format_number(2.5) == "2.5");
    double x;
    CHECK(parse_number(format_number(1.0 / 3.0), x));
    CHECK(x == 1.0 / 3.0);
}

TEST_CASE("date ordering: unknown components sort earliest") {
    CHECK(Date{1976, 0, 0} < Date{1976, 8, 0});
    CHECK(Date{1976, 8, 0} < Date{1976, 8, 1});
    CHECK(Date{1975, 12, 31} < Date{1976, 0, 0});
}

TEST_CASE("denotation_equal: tolerance, multiset, multiplicity") {
    auto den = [](std::vector<CellValue> v) { return Denotation{std::move(v)}; };
    CHECK(denotation_equal(den({CellValue::number(2.0)}),
                           den({CellValue::number(2.0000000001)})));
    CHECK(denotation_equal(den({CellValue::text("a"), CellValue::text("b")}),
                           den({CellValue::text("B"), CellValue::text("a")})));
    CHECK_FALSE(denotation_equal(den({CellValue::number(1)}),
                                 den({CellValue::number(1), CellValue::number(1)})));
    CHECK_FALSE(denotation_equal(den({CellValue::number(1)}), den({CellValue::text("1")})));
}

TEST_CASE("denotation_equal is an equivalence relation on separated values") {
    // numbers separated by more than 2e-6: reflexive/symmetric/transitive
    SplitMix64 rng(7);
    std::vector<Denotation> ds;
    for (int i = 0; i < 20; ++i) {
        Denotation d;
        size_t n = 1 + rng.next_below(3);
        for (size_t j = 0; j < n; ++j)
            d.values.push_back(CellValue::number(
                std::floor(rng.next_double() * 8) + rng.next_double() * 1e-7));
        ds.push_back(std::move(d));
    }
    for (const auto& a : ds) CHECK(denotation_equal(a, a));
    for (const auto& a : ds)
        for (const auto& b : ds) CHECK(denotation_equal(a, b) == denotation_equal(b, a));
    for (const auto& a : ds)
        for (const auto& b : ds)
            for (const auto& c : ds)
                if (denotation_equal(a, b) && denotation_equal(b, c))
                    CHECK(denotation_equal(a, c));
}

TEST_CASE("extract_entities: string spans, numbers, no-match") {
    Table t = medals();
    SUBCASE("string cell matched as a span") {
        auto ents = extract_entities({"nation", "of", "turkey"}, t);
        REQUIRE(ents.size() >= 1);
        bool found = false;
        for (const auto& e : ents)
            if (e.start == 2 && e.end == 2 && e.value.is_text() &&
                e.value.as_text() == "turkey" && e.source_column == 0)
                found = true;
        CHECK(found);
    }
    SUBCASE("no matches yields an empty list") {
        CHECK(extract_entities({"how", "many"}, t).empty());
    }
    SUBCASE("comma-separated number is normalized") {
        auto ents = extract_entities({"over", "2,000", "points"}, t);
        REQUIRE(ents.size() == 1);
        CHECK(ents[0].start == 1);
        CHECK(ents[0].end == 1);
        CHECK(ents[0].value.as_number() == 2000.0);
        CHECK_FALSE(ents[0].source_column.has_value());
    }
    SUBCASE("number matching a cell is sourced to the column") {
        auto ents = extract_entities({"got", "5", "medals"}, t);
        REQUIRE(ents.size() == 1);
        CHECK(ents[0].source_column == 2);
    }
}

TEST_CASE("entity soundness: span text equals the mention value") {
    Table t = cities();
    auto toks = std::vector<std::string>{"did", "oslo", "beat", "viking"};
    for (const auto& e : extract_entities(toks, t)) {
        if (!e.value.is_text()) continue;
        std::string joined;
        for (int i = e.start; i <= e.end; ++i) {
            if (i > e.start) joined += ' ';
            joined += toks[static_cast<size_t>(i)];
        }
        CHECK(joined == e.value.as_text());
    }
}

TEST_CASE("annotate: in_table flags and the sentinel") {
    Table t = medals();
    SUBCASE("column-name word flips in_table") {
        Question q = ask(t, {"silver", "medals"});
        REQUIRE(q.n() == 3);
        CHECK(q.tokens[0].in_table);
        CHECK_FALSE(q.tokens[1].in_table);
    }
    SUBCASE("empty token list yields sentinel-only question") {
        Question q = annotate({}, {}, {}, t);
        REQUIRE(q.n() == 1);
        CHECK(q.tokens[0].text == kSentinelToken);
    }
    SUBCASE("sentinel is always last, never in_table, never covered by entities") {
        Question q = ask(t, {"nation", "of", "turkey"});
        CHECK(q.tokens.back().text == kSentinelToken);
        CHECK_FALSE(q.tokens.back().in_table);
        for (const auto& e : q.entities) CHECK(e.end < q.sentinel_index());
    }
}

TEST_CASE("column_indicator") {
    Table t = medals();
    SUBCASE("sourced mention flips exactly its column") {
        Question q = ask(t, {"nation", "of", "turkey"});
        auto flags = column_indicator(t, q);
        CHECK(flags == std::vector<bool>{true, false, false});
    }
    SUBCASE("no entities: all false") {
        Question q = ask(t, {"how", "many"});
        auto flags = column_indicator(t, q);
        CHECK(flags == std::vector<bool>{false, false, false});
    }
    SUBCASE("two mentions of one column are idempotent") {
        Question q = ask(t, {"turkey", "and", "turkey"});
        auto flags = column_indicator(t, q);
        CHECK(flags == std::vector<bool>{true, false, false});
    }
}

static const char* kMiniCorpus =
    "T\tt1\tnation:string\tgold:number\tsilver:number\n"
    "R\tt1\ts:turkey\tn:1\tn:0\n"
    "R\tt1\ts:norway\tn:0\tn:5\n"
    "Q\tt1\ttrain\thow\tmany\tsilver\tmedals\tdid\tturkey\tget\t#\tn:0\t#\t"
    "select(filter(all_rows, and(eq(s:turkey, col:nation))), col:silver)\n";

TEST_CASE("load_corpus: minimal file") {
    Corpus c = parse_corpus(kMiniCorpus, "<mini>");
    REQUIRE(c.tables.size() == 1);
    REQUIRE(c.examples.size() == 1);
    const Example& e = c.examples[0];
    CHECK(e.id == "q000000");
    CHECK(e.split == Split::Train);
    CHECK(e.table_id == "t1");
    CHECK(e.question.tokens.back().text == kSentinelToken);
    CHECK(e.question.n() == 8);  // 7 tokens + sentinel
    REQUIRE(e.gold_programs.size() == 1);
    CHECK(e.gold_programs[0].print() ==
          "select(filter(all_rows, and(eq(s:turkey, col:nation))), col:silver)");
    REQUIRE(e.denotation.values.size() == 1);
    CHECK(e.denotation.values[0].as_number() == 0.0);
}

TEST_CASE("load_corpus: type mismatch names column and row") {
    std::string bad =
        "T\tt1\tnation:string\tgold:number\n"
        "R\tt1\ts:turkey\tn:1\n"
        "R\tt1\ts:norway\ts:abc\n";
    try {
        parse_corpus(bad, "<bad>");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        std::string msg = e.what();
        CHECK(msg.find("gold") != std::string::npos);
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("<bad>:3") != std::string::npos);
    }
}

TEST_CASE("load_corpus: error cases") {
    CHECK_THROWS_AS(parse_corpus("X\tfoo\n", "<x>"), ParseError);
    CHECK_THROWS_AS(parse_corpus("R\tt9\ts:a\n", "<x>"), ParseError);  // undeclared table
    CHECK_THROWS_AS(parse_corpus("T\tt1\ta:string\nR\tt1\ts:x\nQ\tt1\ttrain\thi\t#\n", "<x>"),
                    ParseError);  // empty denotation
    CHECK_THROWS_AS(parse_corpus("T\tt1\ta:wat\n", "<x>"), ParseError);
}

TEST_CASE("corpus round trip: canonical serialization is a fixpoint") {
    Corpus c1 = parse_corpus(kMiniCorpus, "<mini>");
    std::string s1 = serialize_corpus(c1);
    Corpus c2 = parse_corpus(s1, "<round>");
    std::string s2 = serialize_corpus(c2);
    CHECK(s1 == s2);
}

TEST_CASE("POS tags survive a round trip") {
    std::string src =
        "T\tt1\ta:string\n"
        "R\tt1\ts:x\n"
        "Q\tt1\tdev\twhich/WDT\tx/NN\t#\ts:x\n";
    Corpus c = parse_corpus(src, "<pos>");
    REQUIRE(c.examples.size() == 1);
    CHECK(c.any_pos());
    CHECK(c.examples[0].question.tokens[0].pos == "WDT");
    CHECK(serialize_corpus(c) == src);
}
