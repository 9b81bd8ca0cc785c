#include "tabsem/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace tabsem {

Prediction predict(const Example& ex, const Table& table,
                   ParameterStore<float>& params, const Vocab& vocab,
                   const Vocab& pos_vocab, const ModelConfig& mcfg,
                   const RuleInventory& inv, const SearchConfig& scfg) {
    Prediction pred;
    ModelGraph<float> graph(mcfg, inv, vocab, pos_vocab, params, nullptr);
    graph.encode(ex.question, table);

    const auto mask = abstract_grammar_for_table(inv, table);
    const GrammarConfig gcfg = scfg.grammar();
    auto beam = graph.beam_decode(mask, mcfg.beam_k, scfg.max_rules);
    if (beam.empty()) {
        pred.failure = "beam produced no complete abstract program";
        return pred;
    }
    for (const auto& item : beam) pred.beam_parents.push_back(item.program);

    const Slot row_slot{Slot::Kind::Row, 0, std::nullopt, 0};
    std::vector<Candidate> row_cands = slot_candidates(row_slot, table, ex.question, gcfg);
    auto row_set = graph.build_candidates(row_cands, Slot::Kind::Row);
    std::map<ColType, std::vector<Candidate>> col_cands;
    std::map<ColType, ModelGraph<float>::CandidateSet> col_sets;
    for (ColType ct : {ColType::String, ColType::Number, ColType::Date}) {
        Slot s{Slot::Kind::Column, 0, ct, 0};
        col_cands[ct] = slot_candidates(s, table, ex.question, gcfg);
        if (!col_cands[ct].empty())
            col_sets[ct] = graph.build_candidates(col_cands[ct], Slot::Kind::Column);
    }

    struct Scored {
        AbstractProgram h;
        std::vector<Candidate> assignment;
        double joint;
    };
    std::vector<Scored> ranked;
    std::string slot_failure;
    for (const auto& item : beam) {
        const AbstractProgram& h = item.program;
        std::vector<NodeId> slot_reps = graph.encode_abstract(h);
        std::vector<NodeId> pooled;
        if (mcfg.attention == AttentionMode::Structured) {
            StructuredAlignment align = graph.structured_alignment(h, slot_reps);
            if (!align.feasible) continue;
            pooled = graph.pooled_from_alignment(align);
        } else {
            pooled = graph.pooled_standard(slot_reps);
        }
        double joint = item.log_prob;
        std::vector<Candidate> assignment;
        bool ok = true;
        for (size_t k = 0; k < h.slots.size(); ++k) {
            const Slot& slot = h.slots[k];
            const std::vector<Candidate>* cands = &row_cands;
            const ModelGraph<float>::CandidateSet* set = &row_set;
            if (slot.kind == Slot::Kind::Column) {
                ColType ct = slot.expected_coltype.value_or(ColType::String);
                if (col_cands[ct].empty()) {
                    ok = false;
                    slot_failure = format("no candidates for a %s column slot",
                                          col_type_name(ct));
                    break;
                }
                cands = &col_cands[ct];
                set = &col_sets[ct];
            }
            auto lp = graph.slot_log_probs(pooled[k], *set);
            // per-slot argmax is the exact joint argmax (slots factorize)
            size_t best = 0;
            float best_v = graph.tape().scalar(lp[0]);
            for (size_t i = 1; i < lp.size(); ++i) {
                float v = graph.tape().scalar(lp[i]);
                if (v > best_v) {
                    best_v = v;
                    best = i;
                }
            }
            joint += static_cast<double>(best_v);
            assignment.push_back((*cands)[best]);
        }
        if (!ok) continue;
        ranked.push_back({h, std::move(assignment), joint});
    }
    if (ranked.empty()) {
        pred.failure = slot_failure.empty() ? "no alignable abstract program" : slot_failure;
        return pred;
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Scored& a, const Scored& b) { return a.joint > b.joint; });

    size_t tries = std::min(ranked.size(), static_cast<size_t>(mcfg.beam_k));
    for (size_t i = 0; i < tries; ++i) {
        Program z = instantiate(inv, ranked[i].h, ranked[i].assignment);
        ExecResult r = execute(z, table);
        if (exec_ok(r)) {
            pred.program = std::move(z);
            pred.denotation = exec_denotation(r);
            pred.parent = ranked[i].h;
            pred.log_score = ranked[i].joint;
            return pred;
        }
        if (i + 1 == tries)
            pred.failure = format("all candidates failed execution (last: %s)",
                                  exec_error_name(exec_error(r).kind));
    }
    return pred;
}

double accuracy(const Corpus& corpus, Split split, ParameterStore<float>& params,
                const Vocab& vocab, const Vocab& pos_vocab, const ModelConfig& mcfg,
                const RuleInventory& inv, const SearchConfig& scfg, int workers) {
    auto examples = corpus.of_split(split);
    if (examples.empty()) {
        log_warn("accuracy over an empty %s split is 0.0 by definition", split_name(split));
        return 0.0;
    }
    std::vector<int> correct(examples.size(), 0);
    auto run = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            Prediction p = predict(*examples[i], corpus.table_of(*examples[i]), params,
                                   vocab, pos_vocab, mcfg, inv, scfg);
            if (p.denotation && denotation_equal(*p.denotation, examples[i]->denotation))
                correct[i] = 1;
        }
    };
    if (workers <= 1) {
        run(0, examples.size());
    } else {
        std::vector<std::thread> pool;
        size_t per = (examples.size() + static_cast<size_t>(workers) - 1) /
                     static_cast<size_t>(workers);
        for (int w = 0; w < workers; ++w) {
            size_t b = static_cast<size_t>(w) * per;
            size_t e = std::min(examples.size(), b + per);
            if (b >= e) break;
            pool.emplace_back(run, b, e);
        }
        for (auto& th : pool) th.join();
    }
    size_t right = 0;
    for (int c : correct) right += static_cast<size_t>(c);
    return static_cast<double>(right) / static_cast<double>(examples.size());
}

GoldPosteriorResult gold_posterior(const Example& ex, const Table& table,
                                   const ConsistentSet& consistent,
                                   const std::vector<Program>& gold_programs,
                                   ParameterStore<float>& params,
                                   const Vocab& vocab, const Vocab& pos_vocab,
                                   const ModelConfig& mcfg, const RuleInventory& inv,
                                   const SearchConfig& scfg, AttentionMode mode) {
    GoldPosteriorResult out;
    if (gold_programs.empty()) {
        out.error = "no gold programs";
        return out;
    }
    if (consistent.empty()) {
        out.error = "empty consistent set";
        return out;
    }
    ModelGraph<float> graph(mcfg, inv, vocab, pos_vocab, params, nullptr);
    auto score = score_consistent_set(graph, ex, table, consistent, inv, scfg, mode);
    if (!score.ok) {
        out.error = score.skip_reason;
        return out;
    }
    std::set<std::string> gold_texts;
    for (const auto& g : gold_programs) gold_texts.insert(g.print());

    std::vector<double> all_joints;
    std::vector<double> gold_joints;
    for (size_t pe = 0; pe < score.entry_index.size(); ++pe) {
        const ConsistentEntry& entry = consistent.entries[score.entry_index[pe]];
        for (size_t a = 0; a < entry.assignments.size(); ++a) {
            double joint = score.parent_log_p[pe] + score.assign_log_p[pe][a];
            all_joints.push_back(joint);
            std::string text = instantiate(inv, entry.parent, entry.assignments[a]).print();
            if (gold_texts.count(text)) gold_joints.push_back(joint);
        }
    }
    if (gold_joints.empty()) {
        out.error = "gold program not in the consistent set";
        return out;
    }
    auto lse = [](const std::vector<double>& xs) {
        double mx = -HUGE_VAL;
        for (double x : xs) mx = std::max(mx, x);
        double acc = 0;
        for (double x : xs) acc += std::exp(x - mx);
        return mx + std::log(acc);
    };
    out.ok = true;
    out.log_mass = lse(gold_joints) - lse(all_joints);
    return out;
}

ErrorBreakdown error_breakdown(const std::vector<const Example*>& examples,
                               const std::vector<Prediction>& predictions,
                               const std::vector<const ConsistentSet*>& consistent) {
    if (examples.size() != predictions.size() || examples.size() != consistent.size())
        fail("error_breakdown: misaligned inputs");
    ErrorBreakdown out;
    for (size_t i = 0; i < examples.size(); ++i) {
        const Prediction& p = predictions[i];
        bool right = p.denotation &&
                     denotation_equal(*p.denotation, examples[i]->denotation);
        if (right) continue;
        out.n_wrong += 1;
        const ConsistentSet* set = consistent[i];
        if (!set || set->empty()) {
            out.coverage += 1;
            continue;
        }
        std::set<std::vector<int>> parents;
        for (const auto& e : set->entries)
            if (!e.assignments.empty()) parents.insert(e.parent.rules);
        bool beam_hit = false;
        for (const auto& h : p.beam_parents)
            if (parents.count(h.rules)) beam_hit = true;
        if (beam_hit) {
            out.instantiation += 1;
        } else {
            out.abstraction += 1;
        }
    }
    return out;
}

}  // namespace tabsem
