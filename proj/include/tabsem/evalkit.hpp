#pragma once

#include "tabsem/trainer.hpp"

namespace tabsem {

struct Prediction {
    std::optional<Program> program;
    std::optional<Denotation> denotation;  // present iff execution succeeded
    std::optional<AbstractProgram> parent;
    std::vector<AbstractProgram> beam_parents;  // what the beam proposed
    double log_score = 0;
    std::string failure;  // empty on success
};

// Beam-decodes top-k abstract programs, instantiates each slot with its
// argmax candidate, ranks by log p(h) + log p(z|h), executes, and falls back
// to the next-best pair on execution failure (up to k tries).
Prediction predict(const Example& ex, const Table& table,
                   ParameterStore<float>& params, const Vocab& vocab,
                   const Vocab& pos_vocab, const ModelConfig& mcfg,
                   const RuleInventory& inv, const SearchConfig& scfg);

// Denotation accuracy over a split; failures count as wrong; empty split is
// 0.0 with a warning.
double accuracy(const Corpus& corpus, Split split, ParameterStore<float>& params,
                const Vocab& vocab, const Vocab& pos_vocab, const ModelConfig& mcfg,
                const RuleInventory& inv, const SearchConfig& scfg, int workers = 1);

struct GoldPosteriorResult {
    bool ok = false;
    double log_mass = 0;  // log share of the consistent set's mass on gold programs
    std::string error;
};

// Posterior mass of the gold programs within the consistent set, under the
// model's joint renormalized over the set.
GoldPosteriorResult gold_posterior(const Example& ex, const Table& table,
                                   const ConsistentSet& consistent,
                                   const std::vector<Program>& gold_programs,
                                   ParameterStore<float>& params,
                                   const Vocab& vocab, const Vocab& pos_vocab,
                                   const ModelConfig& mcfg, const RuleInventory& inv,
                                   const SearchConfig& scfg, AttentionMode mode);

struct ErrorBreakdown {
    size_t abstraction = 0;
    size_t instantiation = 0;
    size_t coverage = 0;
    size_t n_wrong = 0;
};

// Classification of wrong predictions: coverage when the consistent set is
// empty, abstraction when no beam parent is a consistent parent, otherwise
// instantiation.
ErrorBreakdown error_breakdown(const std::vector<const Example*>& examples,
                               const std::vector<Prediction>& predictions,
                               const std::vector<const ConsistentSet*>& consistent);

}  // namespace tabsem
