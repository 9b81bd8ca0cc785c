#include "tabsem/search.hpp"

#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <thread>

namespace tabsem {

std::string SearchConfig::digest() const {
    std::string key = format("rules=%d;conds=%d;and=%d;or=%d", max_rules, max_conditions,
                             enable_and ? 1 : 0, enable_or ? 1 : 0);
    return format("%016llx", (unsigned long long)fnv1a64(key));
}

std::vector<std::string> ConsistentSet::program_texts(const RuleInventory& inv) const {
    std::vector<std::string> out;
    out.reserve(total_count);
    for (const auto& entry : entries)
        for (const auto& a : entry.assignments)
            out.push_back(instantiate(inv, entry.parent, a).print());
    return out;
}

namespace {

// Hands the executor precomputed row sets for the leaves the search odometer
// mutates in place.
struct LeafRowProvider : RowProvider {
    std::vector<std::pair<const Candidate*, const std::vector<int>*>> bindings;

    const std::vector<int>* rows_for(const Candidate& cand) const override {
        for (const auto& [leaf, rows] : bindings)
            if (leaf == &cand) return rows;
        return nullptr;
    }
};

void collect_slot_leaves(Program& z, std::vector<Program*>& leaves) {
    if (z.kind == Program::Kind::Call) {
        for (auto& a : z.args) collect_slot_leaves(a, leaves);
        return;
    }
    leaves.push_back(&z);
}

}  // namespace

ConsistentSet find_consistent(const Example& ex, const Table& table,
                              const RuleInventory& inv, const SearchConfig& cfg,
                              size_t stop_after) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::milliseconds(cfg.timeout_ms);

    ConsistentSet out;
    out.example_id = ex.id;

    const GrammarConfig gcfg = cfg.grammar();
    const auto mask = abstract_grammar_for_table(inv, table);
    const auto programs = enumerate_abstract_programs(inv, mask, cfg.max_rules);

    // candidate lists depend only on slot kind and expected column type
    const Slot row_slot{Slot::Kind::Row, 0, std::nullopt, 0};
    const std::vector<Candidate> row_cands =
        slot_candidates(row_slot, table, ex.question, gcfg);
    std::map<ColType, std::vector<Candidate>> col_cands;
    for (ColType ct : {ColType::String, ColType::Number, ColType::Date}) {
        Slot s{Slot::Kind::Column, 0, ct, 0};
        col_cands[ct] = slot_candidates(s, table, ex.question, gcfg);
    }
    // row filters evaluated once per candidate
    std::vector<std::vector<int>> row_sets;
    row_sets.reserve(row_cands.size());
    for (const auto& c : row_cands) row_sets.push_back(filter_rows(table, c));

    std::set<std::string> seen_texts;
    size_t exec_budget_check = 0;

    for (const auto& h : programs) {
        if (h.slots.empty()) continue;  // no slot marker means nothing to instantiate
        std::vector<const std::vector<Candidate>*> lists;
        bool feasible = true;
        for (const auto& slot : h.slots) {
            if (slot.kind == Slot::Kind::Row) {
                lists.push_back(&row_cands);
            } else {
                auto& cands = col_cands[slot.expected_coltype.value_or(ColType::String)];
                if (cands.empty()) {
                    feasible = false;
                    break;
                }
                lists.push_back(&cands);
            }
        }
        if (!feasible) continue;

        // template tree; the odometer rewrites the slot leaves in place
        std::vector<Candidate> assignment;
        for (const auto* l : lists) assignment.push_back((*l)[0]);
        Program tree = instantiate(inv, h, assignment);
        std::vector<Program*> leaves;
        collect_slot_leaves(tree, leaves);

        LeafRowProvider provider;
        for (size_t k = 0; k < h.slots.size(); ++k)
            if (h.slots[k].kind == Slot::Kind::Row)
                provider.bindings.push_back({&leaves[k]->leaf, nullptr});

        ConsistentEntry entry;
        entry.parent = h;

        std::vector<size_t> idx(lists.size(), 0);
        bool done = false;
        while (!done) {
            size_t row_binding = 0;
            for (size_t k = 0; k < lists.size(); ++k) {
                leaves[k]->leaf = (*lists[k])[idx[k]];
                if (h.slots[k].kind == Slot::Kind::Row)
                    provider.bindings[row_binding++] = {&leaves[k]->leaf,
                                                        &row_sets[idx[k]]};
            }
            ExecResult r = execute(tree, table, &provider);
            if (exec_ok(r) && denotation_equal(exec_denotation(r), ex.denotation)) {
                std::string text = tree.print();
                if (seen_texts.insert(std::move(text)).second) {
                    std::vector<Candidate> a;
                    a.reserve(lists.size());
                    for (size_t k = 0; k < lists.size(); ++k)
                        a.push_back((*lists[k])[idx[k]]);
                    entry.assignments.push_back(std::move(a));
                }
            }
            if (++exec_budget_check % 1024 == 0 && clock::now() > deadline) {
                out.incomplete = true;
                break;
            }
            // odometer
            done = true;
            for (size_t k = lists.size(); k-- > 0;) {
                if (++idx[k] < lists[k]->size()) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
        }
        if (!entry.assignments.empty()) {
            out.total_count += entry.assignments.size();
            out.entries.push_back(std::move(entry));
        }
        if (out.incomplete || out.total_count >= stop_after) break;
    }
    return out;
}

// --- cache -------------------------------------------------------------------

namespace {

void put_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

bool get_u32(const std::string& buf, size_t& pos, uint32_t& v) {
    if (pos + 4 > buf.size()) return false;
    v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return true;
}

bool get_blob(const std::string& buf, size_t& pos, std::string& out) {
    uint32_t len;
    if (!get_u32(buf, pos, len)) return false;
    if (pos + len > buf.size()) return false;
    out.assign(buf, pos, len);
    pos += len;
    return true;
}

constexpr char kRecordMagic[4] = {'T', 'S', 'C', '1'};

}  // namespace

SearchCache::SearchCache(std::string path) : path_(std::move(path)) { load(); }

void SearchCache::load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // cold cache
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    size_t pos = 0;
    while (pos < buf.size()) {
        if (pos + 4 > buf.size() || std::memcmp(buf.data() + pos, kRecordMagic, 4) != 0) {
            log_warn("search cache %s: corrupt record at offset %zu, ignoring tail",
                     path_.c_str(), pos);
            return;
        }
        pos += 4;
        std::string key;
        uint32_t flags, count;
        if (!get_blob(buf, pos, key) || !get_u32(buf, pos, flags) ||
            !get_u32(buf, pos, count)) {
            log_warn("search cache %s: truncated record, ignoring tail", path_.c_str());
            return;
        }
        Record rec;
        rec.incomplete = (flags & 1) != 0;
        rec.texts.reserve(count);
        for (uint32_t i = 0; i < count; ++i) {
            std::string text;
            if (!get_blob(buf, pos, text)) {
                log_warn("search cache %s: truncated record body, ignoring tail",
                         path_.c_str());
                return;
            }
            rec.texts.push_back(std::move(text));
        }
        records_[key] = std::move(rec);  // later records win
    }
}

bool SearchCache::contains(const std::string& example_id,
                           const std::string& config_digest) const {
    return records_.count(example_id + '\x1f' + config_digest) > 0;
}

std::optional<ConsistentSet> SearchCache::get(const std::string& example_id,
                                              const std::string& config_digest,
                                              const RuleInventory& inv,
                                              const Table& table) const {
    auto it = records_.find(example_id + '\x1f' + config_digest);
    if (it == records_.end()) return std::nullopt;
    return group_programs(example_id, it->second.texts, it->second.incomplete, inv, table);
}

void SearchCache::put(const ConsistentSet& set, const std::string& config_digest,
                      const RuleInventory& inv) {
    std::string key = set.example_id + '\x1f' + config_digest;
    Record rec;
    rec.incomplete = set.incomplete;
    rec.texts = set.program_texts(inv);

    std::string buf;
    buf.append(kRecordMagic, 4);
    put_u32(buf, static_cast<uint32_t>(key.size()));
    buf += key;
    put_u32(buf, rec.incomplete ? 1u : 0u);
    put_u32(buf, static_cast<uint32_t>(rec.texts.size()));
    for (const auto& t : rec.texts) {
        put_u32(buf, static_cast<uint32_t>(t.size()));
        buf += t;
    }
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) fail("cannot open search cache for writing: %s", path_.c_str());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) fail("search cache write failed: %s", path_.c_str());
    records_[key] = std::move(rec);
}

ConsistentSet group_programs(const std::string& example_id,
                             const std::vector<std::string>& texts, bool incomplete,
                             const RuleInventory& inv, const Table& table) {
    ConsistentSet set;
    set.example_id = example_id;
    set.incomplete = incomplete;
    std::map<std::vector<int>, size_t> by_parent;  // rule seq -> entry index
    for (const auto& text : texts) {
        Program z = parse_program(text, table);
        auto [h, assignment] = abstract_of(inv, z);
        auto it = by_parent.find(h.rules);
        if (it == by_parent.end()) {
            it = by_parent.emplace(h.rules, set.entries.size()).first;
            ConsistentEntry entry;
            entry.parent = std::move(h);
            set.entries.push_back(std::move(entry));
        }
        set.entries[it->second].assignments.push_back(std::move(assignment));
        set.total_count += 1;
    }
    return set;
}

// --- split-level search -------------------------------------------------------

std::vector<ConsistentSet> search_split(const Corpus& corpus, Split split,
                                        const RuleInventory& inv, const SearchConfig& cfg,
                                        SearchCache* cache, int workers) {
    auto examples = corpus.of_split(split);
    std::vector<ConsistentSet> out(examples.size());
    std::vector<bool> from_cache(examples.size(), false);
    const std::string digest = cfg.digest();

    if (cache) {
        for (size_t i = 0; i < examples.size(); ++i) {
            if (auto hit = cache->get(examples[i]->id, digest, inv,
                                      corpus.table_of(*examples[i]))) {
                out[i] = std::move(*hit);
                from_cache[i] = true;
            }
        }
    }

    auto run_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            if (from_cache[i]) continue;
            out[i] = find_consistent(*examples[i], corpus.table_of(*examples[i]), inv, cfg);
        }
    };
    if (workers <= 1) {
        run_range(0, examples.size());
    } else {
        std::vector<std::thread> pool;
        size_t n = examples.size();
        size_t per = (n + static_cast<size_t>(workers) - 1) / static_cast<size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            size_t b = static_cast<size_t>(w) * per;
            size_t e = std::min(n, b + per);
            if (b >= e) break;
            pool.emplace_back(run_range, b, e);
        }
        for (auto& th : pool) th.join();
    }

    if (cache) {
        // single writer, deterministic order
        for (size_t i = 0; i < examples.size(); ++i)
            if (!from_cache[i]) cache->put(out[i], digest, inv);
    }
    return out;
}

CoverageStats coverage_stats(const Corpus& corpus, Split split, const RuleInventory& inv,
                             const SearchConfig& cfg, SearchCache* cache, int workers) {
    auto sets = search_split(corpus, split, inv, cfg, cache, workers);
    CoverageStats st;
    std::set<std::vector<int>> parents;
    size_t covered = 0, total_programs = 0, counted = 0;
    for (const auto& s : sets) {
        if (s.incomplete) {
            st.n_timeout += 1;
            continue;
        }
        counted += 1;
        if (!s.empty()) covered += 1;
        total_programs += s.total_count;
        for (const auto& e : s.entries)
            if (!e.assignments.empty()) parents.insert(e.parent.rules);
    }
    st.n_examples = counted;
    st.coverage = counted ? static_cast<double>(covered) / static_cast<double>(counted) : 0.0;
    st.mean_consistent =
        counted ? static_cast<double>(total_programs) / static_cast<double>(counted) : 0.0;
    st.distinct_parents = parents.size();
    return st;
}

}  // namespace tabsem
