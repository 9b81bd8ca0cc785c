#pragma once

#include <optional>

#include "tabsem/grammar.hpp"
#include "tabsem/question.hpp"

namespace tabsem {

struct LatticeConfig {
    int max_row_span = 6;  // row-slot spans longer than this are not considered
    int max_slots = 8;     // the DP state space is positions x 2^|S|
};

struct SpanRef {
    int start = 0;
    int end = 0;  // inclusive
    bool operator==(const SpanRef&) const = default;
};

// Feasible alignment spans per slot. Row slots: spans of bounded length that
// contain an entity token, plus the sentinel singleton. Column slots: all
// non-sentinel singletons.
struct FeasibleSpans {
    std::vector<std::vector<SpanRef>> spans;  // indexed by slot
    int n_tokens = 0;                         // question length incl. sentinel

    size_t n_slots() const { return spans.size(); }
    size_t total_spans() const;
};

// Throws Error naming the slot if some slot has no feasible span.
FeasibleSpans feasible_spans(const std::vector<Slot>& slots, const Question& q,
                             const LatticeConfig& cfg);

// Scores and marginals are stored sparsely, aligned index-for-index with
// FeasibleSpans::spans.
struct ScoreMatrix {
    std::vector<std::vector<double>> m;  // [slot][span index]
};

struct AlignmentMarginals {
    std::vector<std::vector<double>> e;  // [slot][span index]; probabilities
    double log_z = 0;
    double log_z_backward = 0;  // must agree with log_z
};

// Exact marginals of p(A) over all assignments of mutually non-overlapping
// feasible spans, one per slot, computed in log space over the position x
// covered-slot-subset lattice. Returns nullopt when no complete alignment
// exists (logZ would be -inf). op_count, when given, receives the number of
// log-sum-exp terms processed (for complexity assertions).
std::optional<AlignmentMarginals> forward_backward(const ScoreMatrix& m,
                                                   const FeasibleSpans& f,
                                                   const LatticeConfig& cfg,
                                                   size_t* op_count = nullptr);

// Enumeration oracle; throws Error above the 1e6-alignment bound.
std::optional<AlignmentMarginals> brute_force_marginals(const ScoreMatrix& m,
                                                        const FeasibleSpans& f);

// s_k = sum over spans of E[k,span] * span_rep[span]. Representations are
// indexed like the feasible spans; all must share one dimension.
std::vector<std::vector<double>> marginal_span_pool(
    const AlignmentMarginals& e, const std::vector<std::vector<std::vector<double>>>& reps);

}  // namespace tabsem
