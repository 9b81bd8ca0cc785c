#include "tabsem/lattice.hpp"

#include <algorithm>
#include <cmath>

#include "tabsem/detail/lattice_dp.hpp"

namespace tabsem {

size_t FeasibleSpans::total_spans() const {
    size_t n = 0;
    for (const auto& s : spans) n += s.size();
    return n;
}

FeasibleSpans feasible_spans(const std::vector<Slot>& slots, const Question& q,
                             const LatticeConfig& cfg) {
    FeasibleSpans f;
    f.n_tokens = q.n();
    const int n = q.n();
    const int sentinel = q.sentinel_index();

    std::vector<bool> in_entity(static_cast<size_t>(n), false);
    for (const auto& e : q.entities)
        for (int i = e.start; i <= e.end; ++i) in_entity[static_cast<size_t>(i)] = true;

    for (const auto& slot : slots) {
        std::vector<SpanRef> spans;
        if (slot.kind == Slot::Kind::Column) {
            for (int i = 0; i < sentinel; ++i) spans.push_back({i, i});
        } else {
            for (int i = 0; i < n; ++i) {
                bool has_entity = false;
                for (int j = i; j < n && j - i < cfg.max_row_span; ++j) {
                    has_entity = has_entity || in_entity[static_cast<size_t>(j)];
                    if (has_entity) spans.push_back({i, j});
                }
            }
            spans.push_back({sentinel, sentinel});  // entities never cover it
        }
        if (spans.empty())
            fail("feasible_spans: slot %d (%s) has no feasible spans", slot.index,
                 slot.kind == Slot::Kind::Row ? "row" : "column");
        f.spans.push_back(std::move(spans));
    }
    return f;
}

namespace {

double logsumexp_terms(const std::vector<double>& terms) {
    double mx = -HUGE_VAL;
    for (double t : terms) mx = std::max(mx, t);
    if (!std::isfinite(mx)) return mx;
    double acc = 0;
    for (double t : terms) acc += std::exp(t - mx);
    return mx + std::log(acc);
}

struct DoubleOps {
    using V = double;
    size_t op_count = 0;

    V zero() { return 0.0; }
    V add(V a, V b) { return a + b; }
    V sub(V a, V b) { return a - b; }
    V exp_(V a) { return std::exp(a); }
    V logsumexp(const std::vector<V>& terms) {
        op_count += terms.size();
        return logsumexp_terms(terms);
    }
};

}  // namespace

std::optional<AlignmentMarginals> forward_backward(const ScoreMatrix& m,
                                                   const FeasibleSpans& f,
                                                   const LatticeConfig& cfg,
                                                   size_t* op_count) {
    if (f.n_slots() > static_cast<size_t>(cfg.max_slots))
        fail("forward_backward: %zu slots exceed max_slots=%d", f.n_slots(), cfg.max_slots);
    if (m.m.size() != f.n_slots()) fail("score matrix does not match feasible spans");
    for (size_t k = 0; k < f.n_slots(); ++k) {
        if (m.m[k].size() != f.spans[k].size())
            fail("score matrix row %zu does not match feasible spans", k);
        for (double v : m.m[k])
            if (!std::isfinite(v)) fail("score matrix has a non-finite entry");
    }

    DoubleOps ops;
    auto dp = detail::lattice_forward_backward(m.m, f, ops);
    if (op_count) *op_count = ops.op_count;
    if (!dp.feasible) return std::nullopt;

    AlignmentMarginals out;
    out.log_z = dp.log_z;
    out.log_z_backward = dp.log_z_backward;
    out.e.resize(f.n_slots());
    for (size_t k = 0; k < f.n_slots(); ++k) {
        out.e[k].resize(f.spans[k].size(), 0.0);
        for (size_t s = 0; s < f.spans[k].size(); ++s)
            if (dp.marginals[k][s]) out.e[k][s] = *dp.marginals[k][s];
    }
    return out;
}

std::optional<AlignmentMarginals> brute_force_marginals(const ScoreMatrix& m,
                                                        const FeasibleSpans& f) {
    const size_t n_slots = f.n_slots();
    if (f.n_tokens > 63) fail("brute_force_marginals: too many tokens");

    // count assignments first to honor the enumeration bound
    size_t count = 0;
    std::vector<size_t> choice(n_slots, 0);
    auto count_rec = [&](auto&& self, size_t k, uint64_t used) -> void {
        if (k == n_slots) {
            if (++count > 1000000) fail("brute_force_marginals: more than 1e6 alignments");
            return;
        }
        for (size_t s = 0; s < f.spans[k].size(); ++s) {
            const SpanRef& span = f.spans[k][s];
            uint64_t mask = 0;
            for (int i = span.start; i <= span.end; ++i) mask |= (1ULL << i);
            if (mask & used) continue;
            self(self, k + 1, used | mask);
        }
    };
    count_rec(count_rec, 0, 0);
    if (count == 0) return std::nullopt;

    // pass 1: max total score for stable exponentiation
    double best = -HUGE_VAL;
    auto walk = [&](auto&& self, size_t k, uint64_t used, double score,
                    auto&& leaf) -> void {
        if (k == n_slots) {
            leaf(score);
            return;
        }
        for (size_t s = 0; s < f.spans[k].size(); ++s) {
            const SpanRef& span = f.spans[k][s];
            uint64_t mask = 0;
            for (int i = span.start; i <= span.end; ++i) mask |= (1ULL << i);
            if (mask & used) continue;
            choice[k] = s;
            self(self, k + 1, used | mask, score + m.m[k][s], leaf);
        }
    };
    walk(walk, 0, 0, 0.0, [&](double score) { best = std::max(best, score); });

    // pass 2: normalizer and per-(slot, span) masses
    double z = 0;
    std::vector<std::vector<double>> mass(n_slots);
    for (size_t k = 0; k < n_slots; ++k) mass[k].assign(f.spans[k].size(), 0.0);
    walk(walk, 0, 0, 0.0, [&](double score) {
        double w = std::exp(score - best);
        z += w;
        for (size_t k = 0; k < n_slots; ++k) mass[k][choice[k]] += w;
    });

    AlignmentMarginals out;
    out.log_z = best + std::log(z);
    out.log_z_backward = out.log_z;
    out.e.resize(n_slots);
    for (size_t k = 0; k < n_slots; ++k) {
        out.e[k].resize(f.spans[k].size(), 0.0);
        for (size_t s = 0; s < f.spans[k].size(); ++s) out.e[k][s] = mass[k][s] / z;
    }
    return out;
}

std::vector<std::vector<double>> marginal_span_pool(
    const AlignmentMarginals& e, const std::vector<std::vector<std::vector<double>>>& reps) {
    if (reps.size() != e.e.size()) fail("marginal_span_pool: slot count mismatch");
    std::vector<std::vector<double>> out;
    for (size_t k = 0; k < reps.size(); ++k) {
        if (reps[k].size() != e.e[k].size())
            fail("marginal_span_pool: span count mismatch at slot %zu", k);
        size_t dim = reps[k].empty() ? 0 : reps[k][0].size();
        std::vector<double> pooled(dim, 0.0);
        for (size_t s = 0; s < reps[k].size(); ++s) {
            if (reps[k][s].size() != dim) fail("marginal_span_pool: ragged representations");
            for (size_t d = 0; d < dim; ++d) pooled[d] += e.e[k][s] * reps[k][s][d];
        }
        out.push_back(std::move(pooled));
    }
    return out;
}

}  // namespace tabsem
