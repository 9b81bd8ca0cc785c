#pragma once

#include "tabsem/search.hpp"

namespace tabsem {

// Deterministic generator of desk-scale corpora with known gold programs.
// All randomness flows from SplitMix64 streams derived from `seed`, so a
// (seed, config) pair reproduces the corpus bit for bit.
struct SynConfig {
    uint64_t seed = 1;
    size_t n_tables = 60;
    int rows_min = 4;
    int rows_max = 8;
    size_t n_examples = 900;  // split 6:1:2 into train/dev/test by position
    double spurious_rate = 0.5;
    // weights over template ids; zero-weight templates are never drawn
    std::map<std::string, double> template_mix = default_template_mix();

    static std::map<std::string, double> default_template_mix();
    void validate() const;
};

const std::vector<std::string>& syngen_template_ids();

Table generate_table(SplitMix64& rng, const SynConfig& cfg, const std::string& id);

// One example from one template; nullopt signals regeneration (the sampled
// slots produced an unexecutable or empty-denotation program).
std::optional<Example> generate_example(SplitMix64& rng, const Table& table,
                                        const std::string& template_id,
                                        const RuleInventory& inv);

struct SynResult {
    Corpus corpus;
    std::map<std::string, size_t> spurious_counts;  // post-injection, cap 6
    size_t inject_gave_up = 0;
};

SynResult generate_corpus(const SynConfig& cfg, const RuleInventory& inv);

// Perturbs number cells (preserving every gold denotation on the table) until
// the target examples have at least `floor` consistent programs under a
// rule cap of 6; gives up after 50 attempts per example.
std::map<std::string, size_t> inject_spuriousness(Corpus& corpus, const SynConfig& cfg,
                                                  const RuleInventory& inv,
                                                  size_t* gave_up = nullptr);

}  // namespace tabsem
