#pragma once

#include <map>

#include "tabsem/corpus.hpp"
#include "tabsem/grammar.hpp"

namespace tabsem {

struct SearchConfig {
    int max_rules = 9;  // abstract-program rule cap
    int max_conditions = 2;
    bool enable_and = true;
    bool enable_or = true;
    int timeout_ms = 30000;  // per example; timed-out sets are flagged

    GrammarConfig grammar() const {
        GrammarConfig g;
        g.max_conditions = max_conditions;
        g.enable_and = enable_and;
        g.enable_or = enable_or;
        return g;
    }
    std::string digest() const;  // cache key component
};

struct ConsistentEntry {
    AbstractProgram parent;
    std::vector<std::vector<Candidate>> assignments;  // one candidate per slot
};

// All programs executing to the example's gold denotation, grouped by
// abstract parent, deduplicated by canonical text, in search order.
struct ConsistentSet {
    std::string example_id;
    std::vector<ConsistentEntry> entries;
    size_t total_count = 0;
    bool incomplete = false;  // per-example timeout hit

    bool empty() const { return total_count == 0; }
    std::vector<std::string> program_texts(const RuleInventory& inv) const;
};

// stop_after truncates the search once that many consistent programs are
// found (used by spuriousness probes); the full search passes SIZE_MAX.
ConsistentSet find_consistent(const Example& ex, const Table& table,
                              const RuleInventory& inv, const SearchConfig& cfg,
                              size_t stop_after = SIZE_MAX);

struct CoverageStats {
    double coverage = 0;         // fraction of (non-timed-out) examples with >= 1
    double mean_consistent = 0;  // mean total_count over covered population
    size_t distinct_parents = 0; // abstract parents with >= 1 consistent instantiation
    size_t n_examples = 0;
    size_t n_timeout = 0;
};

// Aggregates over the given examples, consulting/filling the cache when one
// is supplied.
class SearchCache;
CoverageStats coverage_stats(const Corpus& corpus, Split split, const RuleInventory& inv,
                             const SearchConfig& cfg, SearchCache* cache,
                             int workers = 1);

// Append-only record file keyed by (example id, config digest). Each record
// stores the canonical program texts; a corrupt tail is treated as a miss.
class SearchCache {
public:
    explicit SearchCache(std::string path);

    std::optional<ConsistentSet> get(const std::string& example_id,
                                     const std::string& config_digest,
                                     const RuleInventory& inv, const Table& table) const;
    void put(const ConsistentSet& set, const std::string& config_digest,
             const RuleInventory& inv);
    bool contains(const std::string& example_id, const std::string& config_digest) const;

    const std::string& path() const { return path_; }

private:
    struct Record {
        bool incomplete = false;
        std::vector<std::string> texts;
    };
    std::string path_;
    std::map<std::string, Record> records_;  // key = id + '\x1f' + digest

    void load();
};

// Regroups a flat list of consistent program texts into a ConsistentSet
// (used by the cache and by tests).
ConsistentSet group_programs(const std::string& example_id,
                             const std::vector<std::string>& texts, bool incomplete,
                             const RuleInventory& inv, const Table& table);

// Runs search for every example of the split, honoring the cache; returns the
// sets in example order. Parallel over examples when workers > 1.
std::vector<ConsistentSet> search_split(const Corpus& corpus, Split split,
                                        const RuleInventory& inv, const SearchConfig& cfg,
                                        SearchCache* cache, int workers = 1);

}  // namespace tabsem
