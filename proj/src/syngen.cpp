#include "tabsem/syngen.hpp"

#include <algorithm>

#include "tabsem/entities.hpp"

namespace tabsem {

namespace {

const std::vector<std::string>& entity_pool() {
    static const std::vector<std::string> pool = {
        "turkey",  "norway",  "china",   "brazil",  "kenya",   "france",  "japan",
        "canada",  "spain",   "italy",   "ghana",   "peru",    "chile",   "india",
        "egypt",   "poland",  "sweden",  "austria", "mexico",  "cuba",    "greece",
        "ireland", "serbia",  "latvia",  "tunisia", "qatar",   "panama",  "nepal",
        "laos",    "fiji",    "malta",   "benin",   "togo",    "gabon",   "belize",
        "bhutan",  "samoa",   "tonga",   "palau",   "nauru"};
    return pool;
}

const std::vector<std::string>& string_col_names() {
    static const std::vector<std::string> pool = {"nation", "team", "player",
                                                  "club",   "city", "driver"};
    return pool;
}

const std::vector<std::string>& number_col_names() {
    static const std::vector<std::string> pool = {"gold",   "silver", "bronze", "points",
                                                  "laps",   "wins",   "goals",  "score"};
    return pool;
}

double draw_cell_value(SplitMix64& rng) { return static_cast<double>(rng.next_below(12)); }

std::string num_token(double v) { return format_number(v); }

struct TemplateDraw {
    std::vector<std::string> tokens;
    std::string gold_text;
};

int pick_other(SplitMix64& rng, int n, int avoid) {
    int v = static_cast<int>(rng.next_below(static_cast<uint64_t>(n - 1)));
    return v >= avoid ? v + 1 : v;
}

}  // namespace

std::map<std::string, double> SynConfig::default_template_mix() {
    // two-condition templates sit near a tenth of the mass
    return {
        {"select", 3.0}, {"select_or", 0.7}, {"count_and", 0.5}, {"argmax", 1.5},
        {"argmin", 1.5}, {"count", 1.5},     {"prev", 0.75},     {"next", 0.75},
        {"sum", 1.0},    {"avg", 1.0},
    };
}

const std::vector<std::string>& syngen_template_ids() {
    static const std::vector<std::string> ids = {"select", "select_or", "count_and",
                                                 "argmax", "argmin",    "count",
                                                 "prev",   "next",      "sum",
                                                 "avg"};
    return ids;
}

void SynConfig::validate() const {
    if (rows_min < 2 || rows_min > rows_max || rows_max > 30)
        fail("syngen: rows_per_table must satisfy 2 <= min <= max <= 30");
    double total = 0;
    for (const auto& [id, w] : template_mix) {
        if (w < 0) fail("syngen: negative template weight for '%s'", id.c_str());
        bool known = false;
        for (const auto& known_id : syngen_template_ids()) known = known || known_id == id;
        if (!known) fail("syngen: unknown template id '%s'", id.c_str());
        total += w;
    }
    if (total <= 0) fail("syngen: template weights must sum to a positive value");
    if (spurious_rate < 0 || spurious_rate > 1)
        fail("syngen: spurious_rate must lie in [0,1]");
    if (n_tables == 0) fail("syngen: n_tables must be positive");
}

Table generate_table(SplitMix64& rng, const SynConfig& cfg, const std::string& id) {
    Table t;
    t.id = id;
    const size_t rows =
        static_cast<size_t>(cfg.rows_min) +
        rng.next_below(static_cast<uint64_t>(cfg.rows_max - cfg.rows_min + 1));

    Column names;
    names.name_tokens = {string_col_names()[rng.next_below(string_col_names().size())]};
    names.ctype = ColType::String;
    // sample entities without replacement so filters hit single rows
    std::vector<std::string> pool = entity_pool();
    for (size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[rng.next_below(i)]);
    for (size_t r = 0; r < rows; ++r) names.cells.push_back(CellValue::text(pool[r]));
    t.columns.push_back(std::move(names));

    const size_t n_num = 2 + rng.next_below(2);  // 2..3 number columns
    std::vector<std::string> col_pool = number_col_names();
    for (size_t i = col_pool.size(); i > 1; --i)
        std::swap(col_pool[i - 1], col_pool[rng.next_below(i)]);
    for (size_t c = 0; c < n_num; ++c) {
        Column col;
        col.name_tokens = {col_pool[c]};
        col.ctype = ColType::Number;
        for (size_t r = 0; r < rows; ++r)
            col.cells.push_back(CellValue::number(draw_cell_value(rng)));
        t.columns.push_back(std::move(col));
    }
    t.n_rows = rows;
    t.validate();
    return t;
}

namespace {

std::optional<TemplateDraw> draw_template(SplitMix64& rng, const Table& t,
                                          const std::string& id) {
    const std::string strcol = t.columns[0].name();
    const int n_num = static_cast<int>(t.columns.size()) - 1;
    auto numcol = [&](int i) { return t.columns[static_cast<size_t>(1 + i)].name(); };
    auto num_cell = [&](int col, size_t row) {
        return t.columns[static_cast<size_t>(1 + col)].cells[row].as_number();
    };
    const size_t rows = t.n_rows;

    TemplateDraw d;
    if (id == "select") {
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        size_t r = rng.next_below(rows);
        std::string e = t.columns[0].cells[r].as_text();
        d.tokens = {"how", "many", numcol(c), "did", e, "get"};
        d.gold_text = format("select(filter(all_rows, and(eq(s:%s, col:%s))), col:%s)",
                             e.c_str(), strcol.c_str(), numcol(c).c_str());
    } else if (id == "select_or") {
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        size_t r1 = rng.next_below(rows);
        size_t r2 = static_cast<size_t>(
            pick_other(rng, static_cast<int>(rows), static_cast<int>(r1)));
        std::string e1 = t.columns[0].cells[r1].as_text();
        std::string e2 = t.columns[0].cells[r2].as_text();
        d.tokens = {"how", "many", numcol(c), "did", e1, "or", e2, "get"};
        // conditions print in canonical sorted order
        std::string c1 = format("eq(s:%s, col:%s)", e1.c_str(), strcol.c_str());
        std::string c2 = format("eq(s:%s, col:%s)", e2.c_str(), strcol.c_str());
        if (c2 < c1) std::swap(c1, c2);
        d.gold_text = format("select(filter(all_rows, or(%s, %s)), col:%s)", c1.c_str(),
                             c2.c_str(), numcol(c).c_str());
    } else if (id == "count_and") {
        if (n_num < 2) return std::nullopt;
        int c1 = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        int c2 = pick_other(rng, n_num, c1);
        double v1 = num_cell(c1, rng.next_below(rows));
        double v2 = num_cell(c2, rng.next_below(rows));
        d.tokens = {"how",  "many",       strcol + "s", "got", "over",
                    num_token(v1), numcol(c1),   "and", "over",
                    num_token(v2), numcol(c2)};
        std::string a = format("gt(n:%s, col:%s)", num_token(v1).c_str(),
                               numcol(c1).c_str());
        std::string b = format("gt(n:%s, col:%s)", num_token(v2).c_str(),
                               numcol(c2).c_str());
        if (b < a) std::swap(a, b);
        d.gold_text = format("count(filter(all_rows, and(%s, %s)))", a.c_str(), b.c_str());
    } else if (id == "argmax" || id == "argmin") {
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        const bool most = id == "argmax";
        d.tokens = {"which", strcol, "had", "the", most ? "most" : "least", numcol(c)};
        d.gold_text = format("select(%s(all_rows, col:%s), col:%s)",
                             most ? "argmax" : "argmin", numcol(c).c_str(), strcol.c_str());
    } else if (id == "count") {
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        double v = num_cell(c, rng.next_below(rows));
        d.tokens = {"how", "many", strcol + "s", "got", "over", num_token(v), numcol(c)};
        d.gold_text = format("count(filter(all_rows, and(gt(n:%s, col:%s))))",
                             num_token(v).c_str(), numcol(c).c_str());
    } else if (id == "prev" || id == "next") {
        if (n_num < 2) return std::nullopt;
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        int c2 = pick_other(rng, n_num, c);
        const bool before = id == "prev";
        d.tokens = {"how",  "many",      numcol(c), "did",  "the",
                    strcol, before ? "before" : "after", "the",       "one",  "with",
                    "the",  "most",      numcol(c2)};
        d.gold_text = format("select(%s(argmax(all_rows, col:%s)), col:%s)",
                             before ? "previous" : "next", numcol(c2).c_str(),
                             numcol(c).c_str());
    } else if (id == "sum" || id == "avg") {
        int c = static_cast<int>(rng.next_below(static_cast<uint64_t>(n_num)));
        d.tokens = {"what", "is", "the", id == "sum" ? "total" : "average", numcol(c),
                    "over", "all", strcol + "s"};
        d.gold_text = format("%s(all_rows, col:%s)", id == "sum" ? "sum" : "average",
                             numcol(c).c_str());
    } else {
        fail("unknown syngen template '%s'", id.c_str());
    }
    return d;
}

}  // namespace

std::optional<Example> generate_example(SplitMix64& rng, const Table& table,
                                        const std::string& template_id,
                                        const RuleInventory& inv) {
    (void)inv;
    auto draw = draw_template(rng, table, template_id);
    if (!draw) return std::nullopt;
    Program gold = parse_program(draw->gold_text, table);
    ExecResult r = execute(gold, table);
    if (!exec_ok(r) || exec_denotation(r).values.empty()) return std::nullopt;

    Example ex;
    ex.table_id = table.id;
    ex.denotation = exec_denotation(r);
    ex.gold_programs.push_back(std::move(gold));
    auto ents = extract_entities(draw->tokens, table);
    ex.question = annotate(draw->tokens, {}, std::move(ents), table);
    return ex;
}

std::map<std::string, size_t> inject_spuriousness(Corpus& corpus, const SynConfig& cfg,
                                                  const RuleInventory& inv,
                                                  size_t* gave_up_out) {
    std::map<std::string, size_t> counts;
    size_t gave_up = 0;
    if (cfg.spurious_rate > 0) {
        SplitMix64 rng(SplitMix64(cfg.seed).next_u64() ^ 0x5Bu);
        SearchConfig probe;
        probe.max_rules = 6;  // the spuriousness probe cap
        probe.max_conditions = 2;
        probe.timeout_ms = 10000;

        // choose target examples, then work table by table so every gold
        // denotation on the table is preserved
        std::vector<size_t> targets;
        for (size_t i = 0; i < corpus.examples.size(); ++i)
            if (rng.next_double() < cfg.spurious_rate) targets.push_back(i);

        auto all_golds_hold = [&](const Table& t) {
            for (const auto& ex : corpus.examples) {
                if (ex.table_id != t.id || ex.gold_programs.empty()) continue;
                ExecResult r = execute(ex.gold_programs[0], t);
                if (!exec_ok(r) || !denotation_equal(exec_denotation(r), ex.denotation))
                    return false;
            }
            return true;
        };

        for (size_t idx : targets) {
            Example& ex = corpus.examples[idx];
            Table& table = corpus.tables.at(ex.table_id);
            const size_t floor = 3;
            size_t found =
                find_consistent(ex, table, inv, probe, floor).total_count;
            int attempts = 0;
            while (found < floor && attempts < 50) {
                ++attempts;
                // perturb one number cell; strategies biased toward value
                // duplication, which is what creates coincidences
                size_t col = 1 + rng.next_below(table.columns.size() - 1);
                size_t row = rng.next_below(table.n_rows);
                Column& c = table.columns[col];
                CellValue saved = c.cells[row];
                double new_value = 0;
                switch (rng.next_below(4)) {
                    case 0: {  // copy a gold answer value if numeric
                        const CellValue& v = ex.denotation.values[0];
                        new_value = v.is_number() ? v.as_number() : draw_cell_value(rng);
                        break;
                    }
                    case 1: {  // duplicate another cell of the same table
                        size_t c2 = 1 + rng.next_below(table.columns.size() - 1);
                        size_t r2 = rng.next_below(table.n_rows);
                        new_value = table.columns[c2].cells[r2].as_number();
                        break;
                    }
                    case 2: {  // force a fresh unique maximum
                        double mx = 0;
                        for (const auto& cell : c.cells)
                            mx = std::max(mx, cell.as_number());
                        new_value = mx + 1;
                        break;
                    }
                    default: new_value = 0; break;  // zeros collide often
                }
                c.cells[row] = CellValue::number(new_value);
                if (!all_golds_hold(table)) {
                    c.cells[row] = saved;  // rollback, try again
                    continue;
                }
                found = find_consistent(ex, table, inv, probe, floor).total_count;
            }
            if (found < floor) {
                ++gave_up;
                log_warn("spuriousness injection gave up on %s after 50 attempts",
                         ex.id.c_str());
            }
            counts[ex.id] = found;
        }
    }
    if (gave_up_out) *gave_up_out = gave_up;
    return counts;
}

SynResult generate_corpus(const SynConfig& cfg, const RuleInventory& inv) {
    cfg.validate();
    SynResult result;
    SplitMix64 root(cfg.seed);
    SplitMix64 table_rng = root.split();
    SplitMix64 example_rng = root.split();

    for (size_t i = 0; i < cfg.n_tables; ++i) {
        SplitMix64 rng = table_rng.split();  // per-table stream
        Table t = generate_table(rng, cfg, format("t%04zu", i));
        result.corpus.tables.emplace(t.id, std::move(t));
    }

    // weighted template choice
    std::vector<std::pair<std::string, double>> mix;
    double total = 0;
    for (const auto& id : syngen_template_ids()) {
        auto it = cfg.template_mix.find(id);
        double w = it == cfg.template_mix.end() ? 0.0 : it->second;
        if (w > 0) {
            mix.push_back({id, w});
            total += w;
        }
    }

    for (size_t i = 0; i < cfg.n_examples; ++i) {
        const Table& table = result.corpus.tables.at(format("t%04zu", i % cfg.n_tables));
        SplitMix64 rng = example_rng.split();
        std::optional<Example> ex;
        std::string tid;
        for (int attempt = 0; attempt < 40 && !ex; ++attempt) {
            double pickw = rng.next_double() * total;
            tid = mix.back().first;
            for (const auto& [id, w] : mix) {
                if (pickw < w) {
                    tid = id;
                    break;
                }
                pickw -= w;
            }
            ex = generate_example(rng, table, tid, inv);
            if (!ex && attempt >= 20) ex = generate_example(rng, table, "select", inv);
        }
        if (!ex) fail("syngen: could not generate example %zu after 40 attempts", i);
        ex->id = format("q%06zu", i);
        // deterministic 6:1:2 split by position
        size_t slot = i % 9;
        ex->split = slot < 6 ? Split::Train : (slot == 6 ? Split::Dev : Split::Test);
        result.corpus.examples.push_back(std::move(*ex));
    }

    result.spurious_counts =
        inject_spuriousness(result.corpus, cfg, inv, &result.inject_gave_up);

    // canonical round trip so in-memory annotations match a reload of the
    // file gen writes (injection may have changed number cells)
    result.corpus = parse_corpus(serialize_corpus(result.corpus), "<syngen>");
    return result;
}

}  // namespace tabsem
