#include "tabsem/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "tabsem/evalkit.hpp"

namespace tabsem {

ConsistentSet truncate_consistent(const ConsistentSet& set, const RuleInventory& inv,
                                  size_t max_n) {
    if (set.total_count <= max_n) return set;
    struct Item {
        size_t entry, assign;
        size_t size;
        std::string text;
    };
    std::vector<Item> items;
    for (size_t e = 0; e < set.entries.size(); ++e) {
        const auto& entry = set.entries[e];
        for (size_t a = 0; a < entry.assignments.size(); ++a) {
            size_t sz = entry.parent.rules.size();
            for (const auto& cand : entry.assignments[a])
                if (cand.kind == Candidate::Kind::RowFilter) sz += cand.conditions.size();
            items.push_back(
                {e, a, sz, instantiate(inv, entry.parent, entry.assignments[a]).print()});
        }
    }
    std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
        if (x.size != y.size) return x.size < y.size;
        return x.text < y.text;
    });
    items.resize(max_n);
    // regroup preserving the original entry order
    std::sort(items.begin(), items.end(), [](const Item& x, const Item& y) {
        if (x.entry != y.entry) return x.entry < y.entry;
        return x.assign < y.assign;
    });
    ConsistentSet out;
    out.example_id = set.example_id;
    out.incomplete = set.incomplete;
    for (const auto& item : items) {
        if (out.entries.empty() ||
            !(out.entries.back().parent.rules == set.entries[item.entry].parent.rules)) {
            ConsistentEntry e;
            e.parent = set.entries[item.entry].parent;
            out.entries.push_back(std::move(e));
        }
        out.entries.back().assignments.push_back(set.entries[item.entry].assignments[item.assign]);
        out.total_count += 1;
    }
    return out;
}

template <typename Real>
ConsistentScore<Real> score_consistent_set(ModelGraph<Real>& graph, const Example& ex,
                                           const Table& table,
                                           const ConsistentSet& consistent,
                                           const RuleInventory& inv,
                                           const SearchConfig& scfg, AttentionMode mode,
                                           const std::vector<bool>* mask_override) {
    ConsistentScore<Real> out;
    if (consistent.empty()) {
        out.skip_reason = "empty consistent set";
        return out;
    }
    graph.encode(ex.question, table);
    const auto mask =
        mask_override ? *mask_override : abstract_grammar_for_table(inv, table);
    const GrammarConfig gcfg = scfg.grammar();

    // candidate lists shared across slots; indices must match search's lists
    const Slot row_slot{Slot::Kind::Row, 0, std::nullopt, 0};
    std::vector<Candidate> row_cands = slot_candidates(row_slot, table, ex.question, gcfg);
    std::map<std::string, int> row_index;
    for (size_t i = 0; i < row_cands.size(); ++i) row_index[row_cands[i].print()] = (int)i;
    auto row_set = graph.build_candidates(row_cands, Slot::Kind::Row);

    std::map<ColType, std::vector<Candidate>> col_cands;
    std::map<ColType, typename ModelGraph<Real>::CandidateSet> col_sets;
    std::map<ColType, std::map<std::string, int>> col_index;
    for (ColType ct : {ColType::String, ColType::Number, ColType::Date}) {
        Slot s{Slot::Kind::Column, 0, ct, 0};
        col_cands[ct] = slot_candidates(s, table, ex.question, gcfg);
        if (!col_cands[ct].empty())
            col_sets[ct] = graph.build_candidates(col_cands[ct], Slot::Kind::Column);
        for (size_t i = 0; i < col_cands[ct].size(); ++i)
            col_index[ct][col_cands[ct][i].print()] = (int)i;
    }

    auto& tape = graph.tape();
    std::vector<NodeId> parent_terms;
    for (size_t e = 0; e < consistent.entries.size(); ++e) {
        const ConsistentEntry& entry = consistent.entries[e];
        const AbstractProgram& h = entry.parent;

        NodeId log_ph = graph.abstract_log_prob(h, mask);
        std::vector<NodeId> slot_reps = graph.encode_abstract(h);
        std::vector<NodeId> pooled;
        if (mode == AttentionMode::Structured) {
            StructuredAlignment align = graph.structured_alignment(h, slot_reps);
            if (!align.feasible) continue;  // parent has no legal alignment
            pooled = graph.pooled_from_alignment(align);
        } else {
            pooled = graph.pooled_standard(slot_reps);
        }

        // per-slot candidate log distributions
        std::vector<std::vector<NodeId>> slot_lp(h.slots.size());
        bool slots_ok = true;
        for (size_t k = 0; k < h.slots.size(); ++k) {
            const Slot& slot = h.slots[k];
            if (slot.kind == Slot::Kind::Row) {
                slot_lp[k] = graph.slot_log_probs(pooled[k], row_set);
            } else {
                ColType ct = slot.expected_coltype.value_or(ColType::String);
                if (col_cands[ct].empty()) {
                    slots_ok = false;
                    break;
                }
                slot_lp[k] = graph.slot_log_probs(pooled[k], col_sets[ct]);
            }
        }
        if (!slots_ok) continue;

        std::vector<NodeId> assign_terms;
        std::vector<double> assign_lp_values;
        for (const auto& assignment : entry.assignments) {
            std::vector<std::pair<Real, NodeId>> parts;
            bool found = true;
            for (size_t k = 0; k < assignment.size(); ++k) {
                const Slot& slot = h.slots[k];
                int idx = -1;
                const std::string key = assignment[k].print();
                if (slot.kind == Slot::Kind::Row) {
                    auto it = row_index.find(key);
                    if (it != row_index.end()) idx = it->second;
                } else {
                    ColType ct = slot.expected_coltype.value_or(ColType::String);
                    auto it = col_index[ct].find(key);
                    if (it != col_index[ct].end()) idx = it->second;
                }
                if (idx < 0) {
                    found = false;
                    break;
                }
                parts.push_back({Real(1), slot_lp[k][static_cast<size_t>(idx)]});
            }
            if (!found)
                fail("consistent assignment uses a candidate outside the slot list "
                     "(search/model config mismatch) in example %s", ex.id.c_str());
            NodeId joint = tape.lincomb(parts);
            assign_terms.push_back(joint);
            assign_lp_values.push_back(static_cast<double>(tape.scalar(joint)));
        }
        if (assign_terms.empty()) continue;
        NodeId inner = tape.logsumexp(assign_terms);
        parent_terms.push_back(tape.add(log_ph, inner));
        out.parent_log_p.push_back(static_cast<double>(tape.scalar(log_ph)));
        out.assign_log_p.push_back(std::move(assign_lp_values));
        out.entry_index.push_back(e);
    }

    if (parent_terms.empty()) {
        out.skip_reason = "no feasible alignment for any consistent parent";
        return out;
    }
    NodeId marginal = tape.logsumexp(parent_terms);
    out.loss = tape.lincomb({{Real(-1), marginal}});
    out.ok = true;
    return out;
}

// --- adam ----------------------------------------------------------------------

namespace {

struct Adam {
    double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, clip = 5.0;
    int64_t step = 0;
    std::map<std::string, std::vector<double>> m, v;

    void init(const ParameterStore<float>& params) {
        for (const auto& [name, t] : params) {
            m[name].assign(t.size(), 0.0);
            v[name].assign(t.size(), 0.0);
        }
    }

    void update(ParameterStore<float>& params) {
        ++step;
        double norm_sq = 0;
        for (const auto& [name, t] : params)
            for (float g : t.grad) norm_sq += static_cast<double>(g) * g;
        double scale = 1.0;
        double norm = std::sqrt(norm_sq);
        if (norm > clip && norm > 0) scale = clip / norm;

        const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step));
        const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step));
        for (auto& [name, t] : params) {
            auto& mm = m[name];
            auto& vv = v[name];
            for (size_t i = 0; i < t.size(); ++i) {
                double g = static_cast<double>(t.grad[i]) * scale;
                mm[i] = b1 * mm[i] + (1 - b1) * g;
                vv[i] = b2 * vv[i] + (1 - b2) * g * g;
                double mhat = mm[i] / bc1;
                double vhat = vv[i] / bc2;
                t.value[i] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + eps));
            }
        }
    }
};

}  // namespace

TrainResult train(const Corpus& corpus, const std::vector<ConsistentSet>& train_sets,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const RuleInventory& inv, const SearchConfig& scfg) {
    auto train_examples = corpus.of_split(Split::Train);
    if (train_examples.size() != train_sets.size())
        fail("train: %zu consistent sets for %zu train examples", train_sets.size(),
             train_examples.size());

    TrainResult result;
    result.vocab = Vocab::build(corpus, Split::Train);
    {
        std::set<std::string> pos;
        for (const auto* ex : train_examples)
            for (const auto& tok : ex->question.tokens)
                if (tok.pos) pos.insert(*tok.pos);
        result.pos_vocab = Vocab::from_words({pos.begin(), pos.end()});
    }

    ModelConfig cfg = mcfg;
    cfg.attention = tcfg.attention;
    ParameterStore<float> params =
        build_parameters<float>(cfg, inv, result.vocab.size(), result.pos_vocab.size());

    // truncation and timeout exclusion decided once
    std::vector<ConsistentSet> sets;
    sets.reserve(train_sets.size());
    std::vector<size_t> usable;
    for (size_t i = 0; i < train_sets.size(); ++i) {
        sets.push_back(truncate_consistent(train_sets[i], inv,
                                           static_cast<size_t>(tcfg.max_consistent)));
        if (!sets[i].empty() && !sets[i].incomplete) usable.push_back(i);
    }
    log_info("training on %zu/%zu examples with consistent programs", usable.size(),
             train_sets.size());

    Adam adam;
    adam.lr = tcfg.learning_rate;
    adam.b1 = tcfg.beta1;
    adam.b2 = tcfg.beta2;
    adam.eps = tcfg.epsilon;
    adam.clip = tcfg.clip_norm;
    adam.init(params);
    SplitMix64 rng(tcfg.seed);

    result.params = params;
    result.best_epoch = -1;
    result.best_dev_accuracy = -1;
    int since_best = 0;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        std::vector<size_t> order = usable;
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.next_below(i)]);

        double loss_sum = 0;
        size_t n_done = 0, n_skipped = 0, n_nonfinite = 0;
        for (size_t idx : order) {
            const Example& ex = *train_examples[idx];
            const Table& table = corpus.table_of(ex);
            SplitMix64 dropout_rng(rng.next_u64());
            ModelGraph<float> graph(cfg, inv, result.vocab, result.pos_vocab, params,
                                    &dropout_rng);
            auto score =
                score_consistent_set(graph, ex, table, sets[idx], inv, scfg, cfg.attention);
            if (!score.ok) {
                ++n_skipped;
                if (!tcfg.skip_infeasible)
                    fail("example %s: %s", ex.id.c_str(), score.skip_reason.c_str());
                log_warn("skipping %s: %s", ex.id.c_str(), score.skip_reason.c_str());
                continue;
            }
            double loss = static_cast<double>(graph.tape().scalar(score.loss));
            if (!std::isfinite(loss)) {
                ++n_nonfinite;
                if (n_nonfinite * 10 > usable.size())
                    fail("epoch %d: %zu non-finite losses out of %zu examples", epoch,
                         n_nonfinite, usable.size());
                continue;
            }
            params.zero_grad();
            graph.tape().backward(score.loss);
            adam.update(params);
            loss_sum += loss;
            ++n_done;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.mean_loss = n_done ? loss_sum / static_cast<double>(n_done) : 0.0;
        m.n_skipped = n_skipped;
        m.n_nonfinite = n_nonfinite;
        m.dev_accuracy =
            accuracy(corpus, Split::Dev, params, result.vocab, result.pos_vocab, cfg, inv,
                     scfg);
        result.metrics.push_back(m);
        log_info("epoch %d: loss %.4f dev_acc %.4f (skipped %zu)", epoch, m.mean_loss,
                 m.dev_accuracy, n_skipped);

        if (m.dev_accuracy > result.best_dev_accuracy) {
            result.best_dev_accuracy = m.dev_accuracy;
            result.best_epoch = epoch;
            result.params = params;
            since_best = 0;
        } else if (++since_best >= tcfg.patience) {
            log_info("early stop at epoch %d (no dev gain for %d epochs)", epoch,
                     tcfg.patience);
            break;
        }
    }
    if (result.best_epoch < 0) result.params = params;  // 0 epochs: initial weights
    return result;
}

GradCheckReport grad_check(ParameterStore<double>& params, const ModelConfig& mcfg,
                           const Example& ex, const Table& table,
                           const ConsistentSet& consistent, const RuleInventory& inv,
                           const SearchConfig& scfg, AttentionMode mode,
                           const Vocab& vocab, const Vocab& pos_vocab, size_t n_coords,
                           uint64_t seed) {
    GradCheckReport report;

    auto loss_value = [&]() -> double {
        ModelGraph<double> graph(mcfg, inv, vocab, pos_vocab, params, nullptr);
        auto score = score_consistent_set(graph, ex, table, consistent, inv, scfg, mode);
        if (!score.ok) fail("grad_check: %s", score.skip_reason.c_str());
        return graph.tape().scalar(score.loss);
    };

    ModelGraph<double> graph(mcfg, inv, vocab, pos_vocab, params, nullptr);
    auto score = score_consistent_set(graph, ex, table, consistent, inv, scfg, mode);
    if (!score.ok) fail("grad_check: %s", score.skip_reason.c_str());
    params.zero_grad();
    graph.tape().backward(score.loss);

    // sample coordinates among touched tensors
    std::vector<std::pair<std::string, size_t>> coords;
    for (const auto& name : params.names()) {
        if (!graph.tape().touched().count(&params.at(name))) continue;
        for (size_t i = 0; i < params.at(name).size(); ++i) coords.push_back({name, i});
    }
    if (coords.empty()) return report;  // zero-parameter probe
    SplitMix64 rng(seed);
    for (size_t i = coords.size(); i > 1; --i)
        std::swap(coords[i - 1], coords[rng.next_below(i)]);
    if (coords.size() > n_coords) coords.resize(n_coords);

    const double h = 1e-5;
    for (const auto& [name, i] : coords) {
        Tensor<double>& t = params.at(name);
        const double saved = t.value[i];
        const double analytic = t.grad[i];
        t.value[i] = saved + h;
        double up = loss_value();
        t.value[i] = saved - h;
        double down = loss_value();
        t.value[i] = saved;
        double fd = (up - down) / (2 * h);
        double rel =
            std::fabs(fd - analytic) / std::max(1.0, std::fabs(fd) + std::fabs(analytic));
        report.max_rel_error = std::max(report.max_rel_error, rel);
        report.n_checked += 1;
    }
    return report;
}

template ConsistentScore<float> score_consistent_set<float>(
    ModelGraph<float>&, const Example&, const Table&, const ConsistentSet&,
    const RuleInventory&, const SearchConfig&, AttentionMode, const std::vector<bool>*);
template ConsistentScore<double> score_consistent_set<double>(
    ModelGraph<double>&, const Example&, const Table&, const ConsistentSet&,
    const RuleInventory&, const SearchConfig&, AttentionMode, const std::vector<bool>*);

}  // namespace tabsem
