#pragma once

#include "tabsem/model.hpp"

namespace tabsem {

struct TrainConfig {
    int epochs = 30;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double clip_norm = 5.0;
    uint64_t seed = 1;
    AttentionMode attention = AttentionMode::Structured;
    bool skip_infeasible = true;  // skip examples with no complete alignment
    int patience = 10;            // early stopping on dev accuracy
    int max_consistent = 200;     // keep the shortest programs beyond this
};

// Keeps the max_n shortest programs (rule count + condition count, ties by
// canonical text) and regroups them by parent.
ConsistentSet truncate_consistent(const ConsistentSet& set, const RuleInventory& inv,
                                  size_t max_n);

// The per-example objective: -log sum_h p(h|x,t) sum_a prod_k p(k -> a_k),
// with slot inputs pooled through E[A] (structured) or plain attention
// (standard). Also exposes the per-entry joints for posterior analysis.
template <typename Real>
struct ConsistentScore {
    bool ok = false;
    std::string skip_reason;
    NodeId loss = -1;  // on the graph's tape
    std::vector<double> parent_log_p;                 // per surviving entry
    std::vector<std::vector<double>> assign_log_p;    // per entry, per assignment
    std::vector<size_t> entry_index;                  // into consistent.entries
};

template <typename Real>
ConsistentScore<Real> score_consistent_set(ModelGraph<Real>& graph, const Example& ex,
                                           const Table& table,
                                           const ConsistentSet& consistent,
                                           const RuleInventory& inv,
                                           const SearchConfig& scfg, AttentionMode mode,
                                           const std::vector<bool>* mask_override = nullptr);

struct EpochMetrics {
    int epoch = 0;
    double mean_loss = 0;
    double dev_accuracy = 0;
    size_t n_skipped = 0;
    size_t n_nonfinite = 0;
};

struct TrainResult {
    ParameterStore<float> params;  // best-dev checkpoint
    Vocab vocab;
    Vocab pos_vocab;
    std::vector<EpochMetrics> metrics;
    int best_epoch = -1;
    double best_dev_accuracy = 0;
};

// Per-example Adam with global-norm clipping; examples reshuffled per epoch
// with the seeded generator; dev accuracy evaluated between epochs.
TrainResult train(const Corpus& corpus, const std::vector<ConsistentSet>& train_sets,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const RuleInventory& inv, const SearchConfig& scfg);

struct GradCheckReport {
    double max_rel_error = 0;
    size_t n_checked = 0;
};

// Reverse-mode loss gradients against central finite differences (step 1e-5)
// over a random sample of parameter coordinates, in 64-bit mode.
GradCheckReport grad_check(ParameterStore<double>& params, const ModelConfig& mcfg,
                           const Example& ex, const Table& table,
                           const ConsistentSet& consistent, const RuleInventory& inv,
                           const SearchConfig& scfg, AttentionMode mode,
                           const Vocab& vocab, const Vocab& pos_vocab,
                           size_t n_coords = 64, uint64_t seed = 7);

extern template ConsistentScore<float> score_consistent_set<float>(
    ModelGraph<float>&, const Example&, const Table&, const ConsistentSet&,
    const RuleInventory&, const SearchConfig&, AttentionMode, const std::vector<bool>*);
extern template ConsistentScore<double> score_consistent_set<double>(
    ModelGraph<double>&, const Example&, const Table&, const ConsistentSet&,
    const RuleInventory&, const SearchConfig&, AttentionMode, const std::vector<bool>*);

}  // namespace tabsem
