#include <algorithm>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "tabsem/executor.hpp"
#include "tabsem/grammar.hpp"

using namespace tabsem;
using namespace fixtures;

namespace {

std::vector<bool> full_mask(const RuleInventory& inv) {
    return std::vector<bool>(static_cast<size_t>(inv.size()), true);
}

// random complete derivation that respects a rule budget
AbstractProgram random_program(const RuleInventory& inv, const std::vector<bool>& mask,
                               int max_rules, SplitMix64& rng) {
    auto min_rules = min_completion_rules(inv, mask);
    while (true) {
        PartialDerivation pd(inv);
        bool dead = false;
        while (!pd.complete()) {
            std::vector<int> options;
            for (int id : pd.valid_next(&mask)) {
                PartialDerivation probe = pd;
                probe.apply(id);
                if (probe.min_total_rules(min_rules) <= max_rules) options.push_back(id);
            }
            if (options.empty()) {
                dead = true;
                break;
            }
            pd.apply(options[rng.next_below(options.size())]);
        }
        if (!dead) return pd.finish();
    }
}

}  // namespace

TEST_CASE("inventory: fixed, same_as absent, slot rules typed") {
    RuleInventory inv;
    CHECK(inv.size() == 24);
    for (const auto& r : inv.rules()) CHECK(r.print().find("same_as") == std::string::npos);
    CHECK(inv.find("LIST[ROW] -> #row_slot") >= 0);
    CHECK(inv.find("COL[NUMBER] -> #column_slot") >= 0);
    CHECK(inv.find("ROOT -> STRING") >= 0);
    CHECK(inv.find("ROW -> first(LIST[ROW])") >= 0);
}

TEST_CASE("valid_next_rules") {
    RuleInventory inv;
    PartialDerivation pd(inv);
    SUBCASE("empty derivation offers exactly the root rules") {
        auto next = pd.valid_next();
        REQUIRE(next.size() == 3);
        for (int id : next)
            CHECK(inv.rule(id).rhs == ProductionRule::RhsKind::ReturnType);
    }
    SUBCASE("after selecting select, only LIST[ROW]-compatible rules apply") {
        pd.apply(inv.find("ROOT -> STRING"));
        pd.apply(inv.find("STRING -> select(LIST[ROW], COL[STRING])"));
        for (int id : pd.valid_next()) {
            auto lhs = inv.rule(id).lhs.kind;
            // ROW producers are admitted by the row-to-list lifting
            CHECK((lhs == BasicType::Kind::ListRow || lhs == BasicType::Kind::Row));
        }
    }
    SUBCASE("complete derivation offers nothing") {
        pd.apply(inv.find("ROOT -> NUMBER"));
        pd.apply(inv.find("NUMBER -> count(LIST[ROW])"));
        pd.apply(inv.find("LIST[ROW] -> #row_slot"));
        CHECK(pd.complete());
        CHECK(pd.valid_next().empty());
    }
}

TEST_CASE("linearize: the five-rule select-first program") {
    RuleInventory inv;
    std::vector<int> seq = {
        inv.find("ROOT -> STRING"),
        inv.find("STRING -> select(LIST[ROW], COL[STRING])"),
        inv.find("ROW -> first(LIST[ROW])"),
        inv.find("LIST[ROW] -> #row_slot"),
        inv.find("COL[STRING] -> #column_slot"),
    };
    for (int id : seq) REQUIRE(id >= 0);
    Derivation d = parse_rules(inv, seq);
    CHECK(linearize(d) == seq);
    AbstractProgram h = abstract_from_derivation(inv, d);
    CHECK(h.print(inv) == "select(first(#row_slot), #column_slot:string)");
    REQUIRE(h.slots.size() == 2);
    CHECK(h.slots[0].kind == Slot::Kind::Row);
    CHECK(h.slots[1].kind == Slot::Kind::Column);
    CHECK(h.slots[1].expected_coltype == ColType::String);
}

TEST_CASE("parse reports the first offending index") {
    RuleInventory inv;
    std::vector<int> seq = {
        inv.find("ROOT -> STRING"),
        inv.find("STRING -> select(LIST[ROW], COL[STRING])"),
        inv.find("NUMBER -> count(LIST[ROW])"),  // wrong type here
    };
    try {
        parse_rules(inv, seq);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }
}

TEST_CASE("linearize/parse round trip on random derivations") {
    RuleInventory inv;
    auto mask = full_mask(inv);
    SplitMix64 rng(42);
    for (int trial = 0; trial < 200; ++trial) {
        AbstractProgram h = random_program(inv, mask, 9, rng);
        Derivation d = parse_rules(inv, h.rules);
        CHECK(linearize(d) == h.rules);
    }
}

TEST_CASE("abstract_grammar_for_table prunes by column types") {
    RuleInventory inv;
    SUBCASE("string-only table: count survives, aggregation dies") {
        Table t;
        t.id = "s";
        t.columns = {str_col("a", {"x", "y"})};
        t.n_rows = 2;
        auto mask = abstract_grammar_for_table(inv, t);
        CHECK(mask[static_cast<size_t>(inv.find("NUMBER -> count(LIST[ROW])"))]);
        CHECK_FALSE(mask[static_cast<size_t>(inv.find("NUMBER -> sum(LIST[ROW], COL[NUMBER])"))]);
        CHECK_FALSE(mask[static_cast<size_t>(
            inv.find("LIST[ROW] -> argmax(LIST[ROW], COL[NUMBER])"))]);
        CHECK_FALSE(mask[static_cast<size_t>(inv.find("ROOT -> DATE"))]);
        CHECK(mask[static_cast<size_t>(inv.find("ROOT -> NUMBER"))]);  // via count
        CHECK(mask[static_cast<size_t>(inv.find("ROOT -> STRING"))]);
    }
    SUBCASE("number column brings argmax/argmin") {
        auto mask = abstract_grammar_for_table(inv, medals());
        CHECK(mask[static_cast<size_t>(
            inv.find("LIST[ROW] -> argmax(LIST[ROW], COL[NUMBER])"))]);
        CHECK_FALSE(mask[static_cast<size_t>(
            inv.find("LIST[ROW] -> argmax(LIST[ROW], COL[DATE])"))]);
    }
    SUBCASE("H_t is a subset of the inventory") {
        auto mask = abstract_grammar_for_table(inv, races());
        CHECK(mask.size() == static_cast<size_t>(inv.size()));
    }
}

TEST_CASE("enumerate_abstract_programs") {
    RuleInventory inv;
    Table t = medals();
    auto mask = abstract_grammar_for_table(inv, t);
    SUBCASE("cap 4 contains the plain select program") {
        auto programs = enumerate_abstract_programs(inv, mask, 4);
        bool found = false;
        for (const auto& h : programs)
            if (h.print(inv) == "select(#row_slot, #column_slot:string)") found = true;
        CHECK(found);
    }
    SUBCASE("cap 3 holds exactly the count program (hand enumeration)") {
        auto programs = enumerate_abstract_programs(inv, mask, 3);
        REQUIRE(programs.size() == 1);
        CHECK(programs[0].print(inv) == "count(#row_slot)");
        CHECK(enumerate_abstract_programs(inv, mask, 2).empty());
    }
    SUBCASE("output is monotone in the cap and deduplicated") {
        auto small = enumerate_abstract_programs(inv, mask, 5);
        auto large = enumerate_abstract_programs(inv, mask, 6);
        CHECK(small.size() <= large.size());
        std::set<std::vector<int>> small_set, large_set;
        for (const auto& h : small) small_set.insert(h.rules);
        for (const auto& h : large) large_set.insert(h.rules);
        CHECK(small_set.size() == small.size());  // no duplicates
        for (const auto& r : small_set) CHECK(large_set.count(r));
        for (const auto& h : large)
            CHECK(h.rules.size() <= 6);
    }
    SUBCASE("deterministic across calls") {
        auto a = enumerate_abstract_programs(inv, mask, 6);
        auto b = enumerate_abstract_programs(inv, mask, 6);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) CHECK(a[i].rules == b[i].rules);
    }
}

TEST_CASE("slot_candidates") {
    RuleInventory inv;
    GrammarConfig cfg;
    Table t = medals();
    SUBCASE("entity value yields the equality condition") {
        Question q = ask(t, {"nation", "of", "turkey"});
        Slot row{Slot::Kind::Row, 0, std::nullopt, 0};
        auto cands = slot_candidates(row, t, q, cfg);
        bool found = false;
        for (const auto& c : cands)
            if (c.print() == "filter(all_rows, and(eq(s:turkey, col:nation)))") found = true;
        CHECK(found);
        CHECK(cands[0].print() == "all_rows");
    }
    SUBCASE("no entities: row candidates are exactly all_rows") {
        Question q = ask(t, {"how", "many"});
        Slot row{Slot::Kind::Row, 0, std::nullopt, 0};
        auto cands = slot_candidates(row, t, q, cfg);
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].kind == Candidate::Kind::AllRows);
    }
    SUBCASE("enable_and=false drops AND pairs") {
        GrammarConfig no_and = cfg;
        no_and.enable_and = false;
        Question q = ask(t, {"turkey", "or", "norway"});
        Slot row{Slot::Kind::Row, 0, std::nullopt, 0};
        for (const auto& c : slot_candidates(row, t, q, no_and))
            CHECK(c.connective != Connective::And);
        bool has_or = false;
        for (const auto& c : slot_candidates(row, t, q, no_and))
            if (c.connective == Connective::Or) has_or = true;
        CHECK(has_or);
    }
    SUBCASE("column slot candidates honor the expected type") {
        Question q = ask(t, {"gold"});
        Slot col{Slot::Kind::Column, 0, ColType::Number, 0};
        auto cands = slot_candidates(col, t, q, cfg);
        REQUIRE(cands.size() == 2);  // gold, silver
        for (const auto& c : cands) CHECK(c.col_type == ColType::Number);
    }
    SUBCASE("number entity yields all five operators") {
        Question q = ask(t, {"over", "5", "medals"});
        Slot row{Slot::Kind::Row, 0, std::nullopt, 0};
        auto cands = slot_candidates(row, t, q, cfg);
        int singles = 0;
        for (const auto& c : cands)
            if (c.kind == Candidate::Kind::RowFilter && c.conditions.size() == 1) ++singles;
        CHECK(singles == 10);  // 5 ops x 2 number columns
    }
}

TEST_CASE("instantiate and abstract_of are inverses") {
    RuleInventory inv;
    Table t = medals();
    Question q = ask(t, {"how", "many", "silver", "did", "turkey", "get"});
    auto mask = abstract_grammar_for_table(inv, t);
    GrammarConfig cfg;
    SplitMix64 rng(11);
    int done = 0;
    for (int trial = 0; trial < 300 && done < 100; ++trial) {
        AbstractProgram h = random_program(inv, mask, 7, rng);
        std::vector<Candidate> assignment;
        bool ok = true;
        for (const auto& slot : h.slots) {
            auto cands = slot_candidates(slot, t, q, cfg);
            if (cands.empty()) {
                ok = false;
                break;
            }
            assignment.push_back(cands[rng.next_below(cands.size())]);
        }
        if (!ok) continue;
        Program z = instantiate(inv, h, assignment);
        CHECK(typecheck(z, t).ok);
        auto [h2, a2] = abstract_of(inv, z);
        CHECK(h2.rules == h.rules);
        REQUIRE(a2.size() == assignment.size());
        for (size_t i = 0; i < a2.size(); ++i) CHECK(a2[i].print() == assignment[i].print());
        ++done;
    }
    CHECK(done == 100);
}

TEST_CASE("instantiate rejects bad assignments") {
    RuleInventory inv;
    Table t = medals();
    std::vector<int> seq = {
        inv.find("ROOT -> NUMBER"),
        inv.find("NUMBER -> select(LIST[ROW], COL[NUMBER])"),
        inv.find("LIST[ROW] -> #row_slot"),
        inv.find("COL[NUMBER] -> #column_slot"),
    };
    AbstractProgram h = abstract_from_derivation(inv, parse_rules(inv, seq));
    SUBCASE("missing slot") {
        CHECK_THROWS_AS(instantiate(inv, h, {Candidate::all_rows()}), Error);
    }
    SUBCASE("type-incompatible column names the slot") {
        try {
            instantiate(inv, h, {Candidate::all_rows(),
                                 Candidate::column_choice(0, "nation", ColType::String)});
            FAIL("expected Error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("slot 1") != std::string::npos);
        }
    }
}

TEST_CASE("function-type rule mode: two rules per function") {
    GrammarConfig cfg;
    cfg.function_type_rules = true;
    RuleInventory inv(cfg);
    CHECK(inv.size() == 24 + 17);  // each function contributes one extra rule
    CHECK(inv.find("ROW -> <ROW:(LIST[ROW])>") >= 0);
    CHECK(inv.find("<ROW:(LIST[ROW])> -> first") >= 0);

    Table t = medals();
    auto mask = abstract_grammar_for_table(inv, t);
    auto programs = enumerate_abstract_programs(inv, mask, 5);
    // count program now costs 4 rules: root, expansion, name, slot
    bool found = false;
    for (const auto& h : programs)
        if (h.print(inv) == "count(#row_slot)") {
            found = true;
            CHECK(h.rules.size() == 4);
        }
    CHECK(found);

    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        AbstractProgram h = random_program(inv, mask, 11, rng);
        CHECK(linearize(parse_rules(inv, h.rules)) == h.rules);
    }
}
