#pragma once

// Hand-computed program/denotation pairs over the fixture tables. Each entry
// was worked out on paper from the language semantics; tests must not relax
// them.

#include <optional>
#include <string>
#include <vector>

#include "tabsem/executor.hpp"

namespace fixtures {

struct GoldenCase {
    const char* table;    // "medals" | "races" | "cities"
    const char* program;
    std::vector<const char*> denotation;  // tagged cells; empty if error expected
    std::optional<tabsem::ExecError::Kind> error;
};

inline const std::vector<GoldenCase>& golden_cases() {
    using EK = tabsem::ExecError::Kind;
    static const std::vector<GoldenCase> cases = {
        // medals: nation[turkey,norway] gold[1,0] silver[0,5]
        {"medals", "select(filter(all_rows, and(eq(s:turkey, col:nation))), col:silver)",
         {"n:0"}, std::nullopt},
        {"medals", "select(previous(argmax(all_rows, col:silver)), col:silver)",
         {"n:0"}, std::nullopt},
        {"medals", "count(all_rows)", {"n:2"}, std::nullopt},
        {"medals", "previous(first(all_rows))", {}, EK::IndexOutOfRange},
        {"medals", "next(last(all_rows))", {}, EK::IndexOutOfRange},
        {"medals", "select(argmax(all_rows, col:gold), col:nation)", {"s:turkey"},
         std::nullopt},
        {"medals", "select(argmin(all_rows, col:silver), col:nation)", {"s:turkey"},
         std::nullopt},
        {"medals", "sum(all_rows, col:gold)", {"n:1"}, std::nullopt},
        {"medals", "average(all_rows, col:silver)", {"n:2.5"}, std::nullopt},
        {"medals", "max(all_rows, col:silver)", {"n:5"}, std::nullopt},
        {"medals", "min(all_rows, col:silver)", {"n:0"}, std::nullopt},
        {"medals", "diff(max(all_rows, col:silver), min(all_rows, col:silver))", {"n:5"},
         std::nullopt},
        {"medals", "count(filter(all_rows, and(gt(n:0, col:silver))))", {"n:1"},
         std::nullopt},
        {"medals",
         "select(filter(all_rows, or(eq(n:1, col:gold), eq(n:5, col:silver))), col:nation)",
         {"s:turkey", "s:norway"}, std::nullopt},
        {"medals", "select(filter(all_rows, and(eq(s:france, col:nation))), col:gold)", {},
         EK::EmptyDenotation},
        {"medals", "first(filter(all_rows, and(eq(s:france, col:nation))))", {},
         EK::EmptyRows},
        {"medals", "average(filter(all_rows, and(eq(s:france, col:nation))), col:gold)", {},
         EK::EmptyRows},
        // races: driver[hunt,lauda,watson,mass] laps[70,70,52,68]
        //        points[9,6,4,0] race_day[1976-08-01,1976-08-01,1977-05-08,1976-10-24]
        {"races", "select(argmax(all_rows, col:laps), col:driver)", {"s:hunt", "s:lauda"},
         std::nullopt},
        {"races", "count(argmax(all_rows, col:laps))", {"n:2"}, std::nullopt},
        {"races", "select(first(argmax(all_rows, col:laps)), col:driver)", {"s:hunt"},
         std::nullopt},
        {"races", "select(last(argmax(all_rows, col:laps)), col:driver)", {"s:lauda"},
         std::nullopt},
        {"races", "select(argmax(all_rows, col:race_day), col:driver)", {"s:watson"},
         std::nullopt},
        {"races", "select(argmin(all_rows, col:race_day), col:driver)",
         {"s:hunt", "s:lauda"}, std::nullopt},
        {"races", "select(next(argmax(all_rows, col:laps)), col:driver)",
         {"s:lauda", "s:watson"}, std::nullopt},
        {"races", "count(filter(all_rows, and(ge(n:68, col:laps))))", {"n:3"},
         std::nullopt},
        {"races", "select(filter(all_rows, and(gt(d:1976-09, col:race_day))), col:driver)",
         {"s:watson", "s:mass"}, std::nullopt},
        {"races",
         "diff(select(filter(all_rows, and(eq(s:hunt, col:driver))), col:points), "
         "select(filter(all_rows, and(eq(s:lauda, col:driver))), col:points))",
         {"n:3"}, std::nullopt},
        {"races", "min(filter(all_rows, and(lt(n:70, col:laps))), col:points)", {"n:0"},
         std::nullopt},
        // cities: city[oslo,bergen,oslo] club[viking,brann,lyn] titles[3,1,3]
        {"cities", "select(filter(all_rows, and(eq(s:oslo, col:city))), col:club)",
         {"s:viking", "s:lyn"}, std::nullopt},
        {"cities", "count(filter(all_rows, and(eq(s:oslo, col:city))))", {"n:2"},
         std::nullopt},
        {"cities", "select(argmax(all_rows, col:titles), col:city)", {"s:oslo", "s:oslo"},
         std::nullopt},
        {"cities", "select(previous(last(all_rows)), col:club)", {"s:brann"}, std::nullopt},
    };
    return cases;
}

}  // namespace fixtures
