#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabsem/search.hpp"

using namespace tabsem;
using namespace fixtures;

namespace {

// Independent single-stage enumerator: builds executable programs directly by
// recursing over demanded kinds, one candidate universe, no shared search
// machinery. Used as the exhaustiveness oracle.
using K = BasicType::Kind;

struct NaiveEnum {
    const Table& table;
    const std::vector<Candidate>& row_cands;
    const GrammarConfig& cfg;

    struct Item {
        Program z;
        int rules = 0;
    };

    std::vector<Item> col_leaves(ColType ct) const {
        std::vector<Item> out;
        for (size_t c = 0; c < table.columns.size(); ++c)
            if (table.columns[c].ctype == ct)
                out.push_back({Program::column_leaf(static_cast<int>(c),
                                                    table.columns[c].name(), ct),
                               1});
        return out;
    }

    std::vector<Item> enumerate(K demanded, int budget) const {
        std::vector<Item> out;
        if (budget < 1) return out;
        if (demanded == K::ListRow) {
            for (const auto& c : row_cands) out.push_back({Program::row_leaf(c), 1});
        }
        if (demanded == K::ColString) return col_leaves(ColType::String);
        if (demanded == K::ColNumber) return col_leaves(ColType::Number);
        if (demanded == K::ColDate) return col_leaves(ColType::Date);

        struct Sig {
            Func f;
            K ret;
            std::vector<K> args;
        };
        static const std::vector<Sig> sigs = {
            {Func::Select, K::String, {K::ListRow, K::ColString}},
            {Func::Select, K::Number, {K::ListRow, K::ColNumber}},
            {Func::Select, K::Date, {K::ListRow, K::ColDate}},
            {Func::ArgMax, K::ListRow, {K::ListRow, K::ColNumber}},
            {Func::ArgMax, K::ListRow, {K::ListRow, K::ColDate}},
            {Func::ArgMin, K::ListRow, {K::ListRow, K::ColNumber}},
            {Func::ArgMin, K::ListRow, {K::ListRow, K::ColDate}},
            {Func::First, K::Row, {K::ListRow}},
            {Func::Last, K::Row, {K::ListRow}},
            {Func::Previous, K::Row, {K::ListRow}},
            {Func::Next, K::Row, {K::ListRow}},
            {Func::Count, K::Number, {K::ListRow}},
            {Func::Max, K::Number, {K::ListRow, K::ColNumber}},
            {Func::Min, K::Number, {K::ListRow, K::ColNumber}},
            {Func::Sum, K::Number, {K::ListRow, K::ColNumber}},
            {Func::Average, K::Number, {K::ListRow, K::ColNumber}},
            {Func::Diff, K::Number, {K::Number, K::Number}},
        };
        auto accepts = [](K want, K got) {
            return want == got || (want == K::ListRow && got == K::Row);
        };
        for (const auto& sig : sigs) {
            if (!accepts(demanded, sig.ret)) continue;
            if (sig.args.size() == 1) {
                for (const auto& a : enumerate(sig.args[0], budget - 1))
                    out.push_back({Program::call(sig.f, {a.z}), a.rules + 1});
            } else {
                for (const auto& a : enumerate(sig.args[0], budget - 2)) {
                    for (const auto& b : enumerate(sig.args[1], budget - 1 - a.rules)) {
                        if (1 + a.rules + b.rules > budget) continue;
                        out.push_back({Program::call(sig.f, {a.z, b.z}),
                                       1 + a.rules + b.rules});
                    }
                }
            }
        }
        return out;
    }

    // all consistent program texts within the rule cap (cap counts the root
    // type rule as well)
    std::set<std::string> consistent(const Denotation& gold, int max_rules) const {
        std::set<std::string> out;
        for (K root : {K::String, K::Number, K::Date}) {
            for (const auto& item : enumerate(root, max_rules - 1)) {
                ExecResult r = execute(item.z, table);
                if (exec_ok(r) && denotation_equal(exec_denotation(r), gold))
                    out.insert(item.z.print());
            }
        }
        return out;
    }
};

Example make_example(const Table& t, std::vector<std::string> tokens, Denotation gold) {
    Example ex;
    ex.id = "qx";
    ex.table_id = t.id;
    ex.denotation = std::move(gold);
    ex.question = ask(t, std::move(tokens));
    return ex;
}

Table random_table(SplitMix64& rng) {
    static const std::vector<std::string> names = {"ada", "bo", "cy", "dag"};
    Table t;
    t.id = "rt";
    size_t rows = 2 + rng.next_below(3);
    Column sc;
    sc.name_tokens = {"name"};
    sc.ctype = ColType::String;
    for (size_t r = 0; r < rows; ++r)
        sc.cells.push_back(CellValue::text(names[r % names.size()]));
    t.columns.push_back(std::move(sc));
    size_t ncols = 1 + rng.next_below(2);
    for (size_t c = 0; c < ncols; ++c) {
        Column nc;
        nc.name_tokens = {std::string(1, static_cast<char>('x' + c))};
        nc.ctype = ColType::Number;
        for (size_t r = 0; r < rows; ++r)
            nc.cells.push_back(CellValue::number(static_cast<double>(rng.next_below(4))));
        t.columns.push_back(std::move(nc));
    }
    t.n_rows = rows;
    t.validate();
    return t;
}

}  // namespace

TEST_CASE("find_consistent matches the spec's correct/spurious pair") {
    Table t = medals();
    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 7;
    Example ex = make_example(t, {"how", "many", "silver", "medals", "did", "turkey", "get"},
                              Denotation{{CellValue::number(0)}});
    ConsistentSet set = find_consistent(ex, t, inv, cfg);
    auto texts = set.program_texts(inv);
    std::set<std::string> text_set(texts.begin(), texts.end());
    CHECK(text_set.count(
        "select(filter(all_rows, and(eq(s:turkey, col:nation))), col:silver)"));
    CHECK(text_set.count("select(previous(argmax(all_rows, col:silver)), col:silver)"));
    CHECK(set.total_count >= 2);
    CHECK(set.total_count == texts.size());
}

TEST_CASE("soundness: every found program re-executes to gold") {
    Table t = races();
    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 6;
    Example ex = make_example(t, {"how", "many", "laps", "did", "hunt", "finish"},
                              Denotation{{CellValue::number(70)}});
    ConsistentSet set = find_consistent(ex, t, inv, cfg);
    CHECK(set.total_count > 0);
    for (const auto& text : set.program_texts(inv)) {
        Program z = parse_program(text, t);
        ExecResult r = execute(z, t);
        REQUIRE(exec_ok(r));
        CHECK(denotation_equal(exec_denotation(r), ex.denotation));
    }
}

TEST_CASE("uncoverable denotation yields the empty set") {
    Table t = medals();
    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 6;
    Example ex = make_example(t, {"who", "won"}, Denotation{{CellValue::text("sweden")}});
    ConsistentSet set = find_consistent(ex, t, inv, cfg);
    CHECK(set.empty());
    CHECK(set.entries.empty());
}

TEST_CASE("monotonicity: results under cap c are contained in cap c+1") {
    Table t = medals();
    RuleInventory inv;
    Example ex = make_example(t, {"how", "many", "silver", "for", "turkey"},
                              Denotation{{CellValue::number(0)}});
    std::set<std::string> prev;
    for (int cap = 3; cap <= 7; ++cap) {
        SearchConfig cfg;
        cfg.max_rules = cap;
        auto texts = find_consistent(ex, t, inv, cfg).program_texts(inv);
        std::set<std::string> cur(texts.begin(), texts.end());
        for (const auto& s : prev) CHECK(cur.count(s));
        prev = std::move(cur);
    }
}

TEST_CASE("exhaustiveness: equals the naive single-stage enumerator") {
    RuleInventory inv;
    SplitMix64 rng(2024);
    int nontrivial = 0;
    for (int trial = 0; trial < 200; ++trial) {
        Table t = random_table(rng);
        // question mentioning one string cell and one number
        std::vector<std::string> tokens = {"how", "many"};
        if (rng.next_below(2)) {
            size_t r = rng.next_below(t.n_rows);
            tokens.push_back(t.columns[0].cells[r].as_text());
        }
        if (rng.next_below(2))
            tokens.push_back(format_number(static_cast<double>(rng.next_below(4))));

        Example ex = make_example(t, tokens, Denotation{{CellValue::number(
                                      static_cast<double>(rng.next_below(4)))}});
        SearchConfig cfg;
        cfg.max_rules = 4 + static_cast<int>(rng.next_below(2));  // 4..5
        cfg.enable_and = rng.next_below(2) == 0;
        cfg.enable_or = rng.next_below(2) == 0;

        ConsistentSet set = find_consistent(ex, t, inv, cfg);
        auto texts = set.program_texts(inv);
        std::set<std::string> two_stage(texts.begin(), texts.end());

        const Slot row_slot{Slot::Kind::Row, 0, std::nullopt, 0};
        const GrammarConfig gcfg = cfg.grammar();
        auto row_cands = slot_candidates(row_slot, t, ex.question, gcfg);
        NaiveEnum naive{t, row_cands, gcfg};
        std::set<std::string> direct = naive.consistent(ex.denotation, cfg.max_rules);

        CHECK(two_stage == direct);
        if (!direct.empty()) ++nontrivial;
    }
    CHECK(nontrivial > 50);  // the comparison must not be vacuous
}

TEST_CASE("timeout flags the set incomplete") {
    Table t = races();
    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 6;
    cfg.timeout_ms = 0;
    Example ex = make_example(t, {"laps", "over", "52", "and", "68", "points", "hunt"},
                              Denotation{{CellValue::number(70)}});
    ConsistentSet set = find_consistent(ex, t, inv, cfg);
    CHECK(set.incomplete);
}

TEST_CASE("cache: round trip, config keying, corruption tolerance") {
    Table t = medals();
    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 6;
    Example ex = make_example(t, {"silver", "of", "turkey"},
                              Denotation{{CellValue::number(0)}});
    ConsistentSet set = find_consistent(ex, t, inv, cfg);
    REQUIRE(set.total_count > 0);

    std::string path = "test_cache.bin";
    std::remove(path.c_str());
    {
        SearchCache cache(path);
        CHECK_FALSE(cache.get(ex.id, cfg.digest(), inv, t).has_value());  // cold
        cache.put(set, cfg.digest(), inv);
        auto got = cache.get(ex.id, cfg.digest(), inv, t);
        REQUIRE(got.has_value());
        CHECK(got->program_texts(inv) == set.program_texts(inv));
        CHECK(got->total_count == set.total_count);
        CHECK(got->incomplete == set.incomplete);
        // different config digest misses
        SearchConfig other = cfg;
        other.max_rules = 7;
        CHECK_FALSE(cache.get(ex.id, other.digest(), inv, t).has_value());
    }
    {
        // reload from disk
        SearchCache cache(path);
        auto got = cache.get(ex.id, cfg.digest(), inv, t);
        REQUIRE(got.has_value());
        CHECK(got->program_texts(inv) == set.program_texts(inv));
    }
    {
        // appended garbage must not break earlier records
        std::ofstream f(path, std::ios::binary | std::ios::app);
        f.write("garbage", 7);
    }
    {
        SearchCache cache(path);
        auto got = cache.get(ex.id, cfg.digest(), inv, t);
        REQUIRE(got.has_value());
        CHECK(got->program_texts(inv) == set.program_texts(inv));
    }
    std::remove(path.c_str());
}

TEST_CASE("coverage_stats on a tiny corpus") {
    Corpus corpus;
    corpus.tables.emplace("t1", medals());
    Example covered = make_example(medals(), {"silver", "of", "turkey"},
                                   Denotation{{CellValue::number(0)}});
    covered.id = "q000000";
    covered.split = Split::Train;
    Example uncovered = make_example(medals(), {"who", "knows"},
                                     Denotation{{CellValue::text("sweden")}});
    uncovered.id = "q000001";
    uncovered.split = Split::Train;
    corpus.examples = {covered, uncovered};

    RuleInventory inv;
    SearchConfig cfg;
    cfg.max_rules = 6;
    CoverageStats st = coverage_stats(corpus, Split::Train, inv, cfg, nullptr);
    CHECK(st.n_examples == 2);
    CHECK(st.coverage == doctest::Approx(0.5));
    CHECK(st.mean_consistent > 0);
    CHECK(st.distinct_parents > 0);

    // empty split
    CoverageStats empty = coverage_stats(corpus, Split::Dev, inv, cfg, nullptr);
    CHECK(empty.n_examples == 0);
    CHECK(empty.coverage == 0.0);
    CHECK(empty.distinct_parents == 0);
}
