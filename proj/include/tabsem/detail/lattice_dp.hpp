#pragma once

// Forward-backward over the position x covered-slot-subset lattice, generic
// over the value algebra so the same dynamic program runs on plain doubles
// (inference, oracles) and on autodiff tape nodes (training).
//
// Vertices are (position v in 0..n, subset U of covered slots). Edges:
//   (v,U) -> (v+1,U)          weight 0            token v skipped
//   (i,U) -> (j+1,U+{k})      weight M[k,(i,j)]   slot k takes span (i,j)
// alpha/beta are pulled from predecessors/successors; logZ = alpha(n, full).
// Edge marginals: E[k,(i,j)] = exp(lse_U(alpha(i,U) + beta(j+1,U+{k})) +
// M[k,(i,j)] - logZ) over subsets U not containing k.
//
// An Ops type supplies: typename V; V zero(); V add(V,V);
// V logsumexp(const std::vector<V>&) (nonempty input); V sub(V,V); V exp_(V).

#include <cstdint>
#include <optional>
#include <vector>

#include "tabsem/lattice.hpp"

namespace tabsem::detail {

template <class V>
struct LatticeOut {
    bool feasible = false;
    V log_z{};
    V log_z_backward{};
    // aligned with FeasibleSpans; nullopt where no complete alignment uses the
    // span (probability zero)
    std::vector<std::vector<std::optional<V>>> marginals;
};

template <class Ops>
LatticeOut<typename Ops::V> lattice_forward_backward(
    const std::vector<std::vector<typename Ops::V>>& m, const FeasibleSpans& f, Ops& ops) {
    using V = typename Ops::V;
    using Cell = std::optional<V>;

    const int n = f.n_tokens;
    const int n_slots = static_cast<int>(f.n_slots());
    const uint32_t full = (n_slots >= 32) ? 0 : ((1u << n_slots) - 1u);
    const size_t n_subsets = static_cast<size_t>(full) + 1;

    LatticeOut<V> out;
    out.marginals.resize(static_cast<size_t>(n_slots));
    for (int k = 0; k < n_slots; ++k)
        out.marginals[static_cast<size_t>(k)]
            .resize(f.spans[static_cast<size_t>(k)].size());

    // spans grouped by end position (for alpha) and start position (for beta)
    std::vector<std::vector<std::vector<size_t>>> by_end(static_cast<size_t>(n_slots)),
        by_start(static_cast<size_t>(n_slots));
    for (int k = 0; k < n_slots; ++k) {
        by_end[static_cast<size_t>(k)].resize(static_cast<size_t>(n));
        by_start[static_cast<size_t>(k)].resize(static_cast<size_t>(n));
        for (size_t s = 0; s < f.spans[static_cast<size_t>(k)].size(); ++s) {
            const SpanRef& span = f.spans[static_cast<size_t>(k)][s];
            by_end[static_cast<size_t>(k)][static_cast<size_t>(span.end)].push_back(s);
            by_start[static_cast<size_t>(k)][static_cast<size_t>(span.start)].push_back(s);
        }
    }

    auto cell_at = [&](std::vector<std::vector<Cell>>& table, int v,
                       uint32_t u) -> Cell& {
        return table[static_cast<size_t>(v)][u];
    };

    std::vector<std::vector<Cell>> alpha(static_cast<size_t>(n + 1),
                                         std::vector<Cell>(n_subsets));
    alpha[0][0] = ops.zero();
    std::vector<V> terms;
    for (int v = 1; v <= n; ++v) {
        for (uint32_t u = 0; u <= full; ++u) {
            terms.clear();
            if (Cell& skip = cell_at(alpha, v - 1, u); skip) terms.push_back(*skip);
            for (int k = 0; k < n_slots; ++k) {
                if (!(u & (1u << k))) continue;
                const uint32_t prev = u ^ (1u << k);
                for (size_t s : by_end[static_cast<size_t>(k)][static_cast<size_t>(v - 1)]) {
                    const SpanRef& span = f.spans[static_cast<size_t>(k)][s];
                    if (Cell& from = cell_at(alpha, span.start, prev); from)
                        terms.push_back(ops.add(*from, m[static_cast<size_t>(k)][s]));
                }
            }
            if (!terms.empty()) cell_at(alpha, v, u) = ops.logsumexp(terms);
        }
    }
    Cell& zf = alpha[static_cast<size_t>(n)][full];
    if (!zf) return out;  // no complete alignment
    out.feasible = true;
    out.log_z = *zf;

    std::vector<std::vector<Cell>> beta(static_cast<size_t>(n + 1),
                                        std::vector<Cell>(n_subsets));
    beta[static_cast<size_t>(n)][full] = ops.zero();
    for (int v = n - 1; v >= 0; --v) {
        for (uint32_t u = 0; u <= full; ++u) {
            terms.clear();
            if (Cell& skip = cell_at(beta, v + 1, u); skip) terms.push_back(*skip);
            for (int k = 0; k < n_slots; ++k) {
                if (u & (1u << k)) continue;
                const uint32_t next = u | (1u << k);
                for (size_t s : by_start[static_cast<size_t>(k)][static_cast<size_t>(v)]) {
                    const SpanRef& span = f.spans[static_cast<size_t>(k)][s];
                    if (span.end + 1 > n) continue;
                    if (Cell& to = cell_at(beta, span.end + 1, next); to)
                        terms.push_back(ops.add(m[static_cast<size_t>(k)][s], *to));
                }
            }
            if (!terms.empty()) cell_at(beta, v, u) = ops.logsumexp(terms);
        }
    }
    out.log_z_backward = *beta[0][0];

    for (int k = 0; k < n_slots; ++k) {
        const uint32_t bit = 1u << k;
        for (size_t s = 0; s < f.spans[static_cast<size_t>(k)].size(); ++s) {
            const SpanRef& span = f.spans[static_cast<size_t>(k)][s];
            terms.clear();
            for (uint32_t u = 0; u <= full; ++u) {
                if (u & bit) continue;
                Cell& a = cell_at(alpha, span.start, u);
                if (!a) continue;
                Cell& b = cell_at(beta, span.end + 1, u | bit);
                if (!b) continue;
                terms.push_back(ops.add(*a, *b));
            }
            if (terms.empty()) continue;  // span unused by any alignment
            V inner = ops.add(ops.logsumexp(terms), m[static_cast<size_t>(k)][s]);
            out.marginals[static_cast<size_t>(k)][s] =
                ops.exp_(ops.sub(inner, out.log_z));
        }
    }
    return out;
}

}  // namespace tabsem::detail
