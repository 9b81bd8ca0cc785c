#include "tabsem/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "tabsem/detail/lattice_dp.hpp"
#include "tabsem/entities.hpp"

namespace tabsem {

const char* attention_mode_name(AttentionMode m) {
    return m == AttentionMode::Structured ? "structured" : "standard";
}

std::optional<AttentionMode> attention_mode_from_name(std::string_view s) {
    if (s == "structured") return AttentionMode::Structured;
    if (s == "standard") return AttentionMode::Standard;
    return std::nullopt;
}

// --- vocab --------------------------------------------------------------------

void Vocab::reindex() {
    index_.clear();
    for (size_t i = 0; i < words_.size(); ++i) index_[words_[i]] = static_cast<int>(i);
}

Vocab Vocab::from_words(std::vector<std::string> sorted_words) {
    Vocab v;
    v.words_ = {"<unk>"};
    for (auto& w : sorted_words)
        if (w != "<unk>") v.words_.push_back(std::move(w));
    v.reindex();
    return v;
}

int Vocab::id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? 0 : it->second;
}

std::string Vocab::serialize() const {
    std::string out;
    for (size_t i = 1; i < words_.size(); ++i) {
        out += words_[i];
        out += '\n';
    }
    return out;
}

Vocab Vocab::deserialize(std::string_view blob) {
    std::vector<std::string> words;
    for (auto& w : split(blob, '\n'))
        if (!w.empty()) words.push_back(std::move(w));
    return from_words(std::move(words));
}

std::vector<std::string> value_tokens(const CellValue& v) {
    if (v.is_text()) {
        std::vector<std::string> out;
        for (auto& w : split(to_lower(v.as_text()), ' '))
            if (!w.empty()) out.push_back(std::move(w));
        if (out.empty()) out.push_back("<unk>");
        return out;
    }
    if (v.is_number()) return {format_number(v.as_number())};
    return {print_date(v.as_date())};
}

Vocab Vocab::build(const Corpus& corpus, Split split) {
    std::set<std::string> words;
    std::set<std::string> table_ids;
    for (const auto& ex : corpus.examples) {
        if (ex.split != split) continue;
        for (const auto& tok : ex.question.tokens) words.insert(tok.text);
        table_ids.insert(ex.table_id);
    }
    for (const auto& id : table_ids) {
        const Table& t = corpus.tables.at(id);
        for (const auto& col : t.columns) {
            for (const auto& w : col.name_tokens) words.insert(w);
            for (const auto& cell : col.cells)
                for (const auto& w : value_tokens(cell)) words.insert(w);
        }
    }
    words.insert(kSentinelToken);
    return from_words(std::vector<std::string>(words.begin(), words.end()));
}

// --- parameters -----------------------------------------------------------------

template <typename Real>
ParameterStore<Real> build_parameters(const ModelConfig& cfg, const RuleInventory& inv,
                                      size_t vocab_size, size_t pos_vocab_size) {
    ParameterStore<Real> p;
    const int E = cfg.embed_size, F = cfg.feat_size, H = cfg.enc_hidden;
    const int Hd = cfg.dec_hidden, Ha = cfg.ap_hidden, M = cfg.mlp_hidden;
    const int R = inv.size();

    p.create("embed.word", {static_cast<int>(vocab_size), E});
    p.create("embed.word_proj", {E, E});
    p.create("embed.in_table", {2, F});
    if (cfg.use_pos) p.create("embed.pos", {static_cast<int>(pos_vocab_size), F});
    p.create("embed.col_type", {3, F});
    p.create("embed.col_indicator", {2, F});
    p.create("embed.op", {5, cfg.op_embed_size});
    p.create("embed.connective", {2, cfg.cond_dim()});
    p.create("embed.rule", {R + 1, cfg.rule_embed_size});  // final row: start symbol
    p.create("allrow.span", {cfg.span_dim()});
    p.create("allrow.cand", {cfg.cond_dim()});

    auto lstm = [&](const std::string& prefix, int in, int hidden) {
        p.create(prefix + ".wx", {4 * hidden, in});
        p.create(prefix + ".wh", {4 * hidden, hidden});
        p.create(prefix + ".b", {4 * hidden});
    };
    lstm("enc.fw", cfg.enc_in_dim(), H);
    lstm("enc.bw", cfg.enc_in_dim(), H);
    lstm("dec", cfg.rule_embed_size, Hd);
    lstm("ap.fw", cfg.rule_embed_size, Ha);
    lstm("ap.bw", cfg.rule_embed_size, Ha);

    p.create("dec.attn", {Hd, 2 * H});
    p.create("std_attn", {2 * Ha, 2 * H});

    p.create("mlp1.w1", {M, Hd + 2 * H});
    p.create("mlp1.b1", {M});
    p.create("mlp1.w2", {R, M});
    p.create("mlp1.b2", {R});

    p.create("mlp2.w1", {M, 2 * Ha + cfg.span_dim()});
    p.create("mlp2.b1", {M});
    p.create("mlp2.w2", {M});
    p.create("mlp2.b2", {1});

    p.create("mlp_row.w1", {M, cfg.span_dim() + cfg.cond_dim()});
    p.create("mlp_row.b1", {M});
    p.create("mlp_row.w2", {M});
    p.create("mlp_row.b2", {1});

    p.create("mlp_col.w1", {M, cfg.span_dim() + E});
    p.create("mlp_col.b1", {M});
    p.create("mlp_col.w2", {M});
    p.create("mlp_col.b2", {1});

    // uniform [-0.1, 0.1] weights, zero biases, forget gates start open
    SplitMix64 rng(cfg.seed);
    for (auto& [name, t] : p) {
        bool is_bias = name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2");
        if (!is_bias) {
            for (auto& v : t.value)
                v = static_cast<Real>((rng.next_double() * 2.0 - 1.0) * 0.1);
        }
    }
    for (const char* prefix : {"enc.fw", "enc.bw", "dec", "ap.fw", "ap.bw"}) {
        Tensor<Real>& b = p.at(std::string(prefix) + ".b");
        const int hidden = b.rows() / 4;
        for (int i = hidden; i < 2 * hidden; ++i)
            b.value[static_cast<size_t>(i)] = Real(1);  // gate order: i, f, g, o
    }
    return p;
}

template <typename Real>
size_t load_embeddings(ParameterStore<Real>& params, const Vocab& vocab,
                       const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_parse("cannot open embedding file: %s", path.c_str());
    Tensor<Real>& table = params.at("embed.word");
    const int E = table.cols();
    size_t loaded = 0;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split(line, ' ');
        if (static_cast<int>(fields.size()) != E + 1)
            fail_parse("%s:%zu: expected word + %d floats, got %zu fields", path.c_str(),
                       lineno, E, fields.size());
        int id = vocab.id(fields[0]);
        if (id == 0 && fields[0] != "<unk>") continue;
        for (int d = 0; d < E; ++d) {
            double x;
            if (!parse_number(fields[static_cast<size_t>(d + 1)], x))
                fail_parse("%s:%zu: bad float '%s'", path.c_str(), lineno,
                           fields[static_cast<size_t>(d + 1)].c_str());
            table.row(id)[d] = static_cast<Real>(x);
        }
        ++loaded;
    }
    return loaded;
}

// --- graph ----------------------------------------------------------------------

template <typename Real>
ModelGraph<Real>::ModelGraph(const ModelConfig& cfg, const RuleInventory& inv,
                             const Vocab& vocab, const Vocab& pos_vocab,
                             ParameterStore<Real>& params, SplitMix64* dropout_rng)
    : cfg_(cfg),
      inv_(inv),
      vocab_(vocab),
      pos_vocab_(pos_vocab),
      params_(params),
      dropout_rng_(dropout_rng) {}

template <typename Real>
NodeId ModelGraph<Real>::pnode(const std::string& name) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end()) return it->second;
    NodeId id = tape_.param(params_.at(name));
    param_nodes_.emplace(name, id);
    return id;
}

template <typename Real>
NodeId ModelGraph<Real>::embed_row(const std::string& table_param, int row, int width) {
    return tape_.slice(pnode(table_param), row * width, width);
}

template <typename Real>
NodeId ModelGraph<Real>::word_emb(const std::string& w) {
    return embed_row("embed.word", vocab_.id(w), cfg_.embed_size);
}

template <typename Real>
NodeId ModelGraph<Real>::mean_embeddings(const std::vector<std::string>& words) {
    std::vector<std::pair<Real, NodeId>> terms;
    const Real coef = Real(1) / static_cast<Real>(words.empty() ? 1 : words.size());
    for (const auto& w : words) terms.push_back({coef, word_emb(w)});
    if (terms.empty()) terms.push_back({Real(1), word_emb("<unk>")});
    return tape_.lincomb(terms);
}

template <typename Real>
NodeId ModelGraph<Real>::dropout(NodeId x, double rate) {
    if (!dropout_rng_ || rate <= 0) return x;
    const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
    std::vector<Real> mask(static_cast<size_t>(tape_.len(x)));
    for (auto& m : mask)
        m = dropout_rng_->next_double() < rate ? Real(0) : keep_scale;
    return tape_.mul(x, tape_.constant(mask));
}

template <typename Real>
NodeId ModelGraph<Real>::lstm_step(const std::string& prefix, NodeId x, NodeId& h,
                                   NodeId& c, int hidden) {
    NodeId gates = tape_.add(
        tape_.add(tape_.matvec(pnode(prefix + ".wx"), x),
                  tape_.matvec(pnode(prefix + ".wh"), h)),
        pnode(prefix + ".b"));
    NodeId i = tape_.sigmoid(tape_.slice(gates, 0, hidden));
    NodeId f = tape_.sigmoid(tape_.slice(gates, hidden, hidden));
    NodeId g = tape_.tanh(tape_.slice(gates, 2 * hidden, hidden));
    NodeId o = tape_.sigmoid(tape_.slice(gates, 3 * hidden, hidden));
    c = tape_.add(tape_.mul(f, c), tape_.mul(i, g));
    h = tape_.mul(o, tape_.tanh(c));
    return h;
}

template <typename Real>
std::vector<NodeId> ModelGraph<Real>::bilstm(const std::string& prefix,
                                             const std::vector<NodeId>& xs, int hidden) {
    const std::vector<Real> zeros(static_cast<size_t>(hidden), Real(0));
    std::vector<NodeId> fw(xs.size()), bw(xs.size());
    NodeId h = tape_.constant(zeros), c = tape_.constant(zeros);
    for (size_t i = 0; i < xs.size(); ++i) fw[i] = lstm_step(prefix + ".fw", xs[i], h, c, hidden);
    h = tape_.constant(zeros);
    c = tape_.constant(zeros);
    for (size_t i = xs.size(); i-- > 0;) bw[i] = lstm_step(prefix + ".bw", xs[i], h, c, hidden);
    std::vector<NodeId> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = tape_.concat({fw[i], bw[i]});
    return out;
}

template <typename Real>
void ModelGraph<Real>::encode(const Question& q, const Table& t) {
    q_ = &q;
    t_ = &t;
    const int F = cfg_.feat_size;

    std::vector<NodeId> xs;
    xs.reserve(static_cast<size_t>(q.n()));
    for (const auto& tok : q.tokens) {
        std::vector<NodeId> parts;
        parts.push_back(tape_.matvec(pnode("embed.word_proj"), word_emb(tok.text)));
        parts.push_back(embed_row("embed.in_table", tok.in_table ? 1 : 0, F));
        if (cfg_.use_pos)
            parts.push_back(
                embed_row("embed.pos", tok.pos ? pos_vocab_.id(*tok.pos) : 0, F));
        xs.push_back(dropout(tape_.concat(parts), cfg_.dropout_enc));
    }
    l_ = bilstm("enc", xs, cfg_.enc_hidden);

    auto indicator = column_indicator(t, q);
    col_reps_.clear();
    col_name_reps_.clear();
    for (size_t c = 0; c < t.columns.size(); ++c) {
        const Column& col = t.columns[c];
        NodeId name_rep = mean_embeddings(col.name_tokens);
        col_name_reps_.push_back(name_rep);
        NodeId type_row = embed_row("embed.col_type", static_cast<int>(col.ctype), F);
        NodeId ind_row = embed_row("embed.col_indicator", indicator[c] ? 1 : 0, F);
        col_reps_.push_back(tape_.concat({name_rep, type_row, ind_row}));
    }

    dec_attn_keys_.clear();
    for (NodeId li : l_) dec_attn_keys_.push_back(tape_.matvec(pnode("dec.attn"), li));
    std_attn_keys_.clear();
    span_rep_cache_.clear();
    span_prod_cache_.clear();
}

template <typename Real>
NodeId ModelGraph<Real>::attention_context(NodeId query, const std::vector<NodeId>& keys,
                                           const std::vector<NodeId>& values) {
    std::vector<NodeId> dots;
    dots.reserve(keys.size());
    for (NodeId k : keys) dots.push_back(tape_.dot(query, k));
    NodeId lse = tape_.logsumexp(dots);
    std::vector<std::pair<NodeId, NodeId>> pairs;
    pairs.reserve(keys.size());
    for (size_t i = 0; i < keys.size(); ++i)
        pairs.push_back({tape_.exp(tape_.sub(dots[i], lse)), values[i]});
    return tape_.weighted_sum(pairs);
}

template <typename Real>
typename ModelGraph<Real>::DecoderStep ModelGraph<Real>::decode_step(
    NodeId& h, NodeId& c, int prev_rule, const PartialDerivation& pd,
    const std::vector<bool>& mask) {
    NodeId x = embed_row("embed.rule", prev_rule, cfg_.rule_embed_size);
    NodeId g = lstm_step("dec", x, h, c, cfg_.dec_hidden);
    NodeId b = attention_context(g, dec_attn_keys_, l_);
    NodeId hidden = tape_.relu(
        tape_.add(tape_.matvec(pnode("mlp1.w1"), tape_.concat({g, b})), pnode("mlp1.b1")));
    hidden = dropout(hidden, cfg_.dropout_mlp);
    NodeId scores = tape_.add(tape_.matvec(pnode("mlp1.w2"), hidden), pnode("mlp1.b2"));
    DecoderStep step;
    step.scores = scores;
    step.valid = pd.valid_next(&mask);
    return step;
}

template <typename Real>
NodeId ModelGraph<Real>::abstract_log_prob(const AbstractProgram& h,
                                           const std::vector<bool>& mask) {
    if (l_.empty()) fail("abstract_log_prob before encode()");
    const std::vector<Real> zeros(static_cast<size_t>(cfg_.dec_hidden), Real(0));
    NodeId hs = tape_.constant(zeros), cs = tape_.constant(zeros);
    int prev = inv_.size();  // start symbol row
    PartialDerivation pd(inv_);
    std::vector<NodeId> step_logps;
    for (int rule : h.rules) {
        DecoderStep step = decode_step(hs, cs, prev, pd, mask);
        if (std::find(step.valid.begin(), step.valid.end(), rule) == step.valid.end())
            fail("abstract program applies rule '%s' that is invalid here",
                 inv_.rule(rule).print().c_str());
        NodeId lse = tape_.logsumexp_subset(step.scores, step.valid);
        step_logps.push_back(tape_.sub(tape_.pick(step.scores, rule), lse));
        pd.apply(rule);
        prev = rule;
    }
    std::vector<std::pair<Real, NodeId>> terms;
    for (NodeId s : step_logps) terms.push_back({Real(1), s});
    return tape_.lincomb(terms);
}

template <typename Real>
std::vector<std::pair<int, double>> ModelGraph<Real>::next_rule_log_probs(
    const std::vector<int>& prefix, const std::vector<bool>& mask) {
    if (l_.empty()) fail("next_rule_log_probs before encode()");
    const std::vector<Real> zeros(static_cast<size_t>(cfg_.dec_hidden), Real(0));
    NodeId hs = tape_.constant(zeros), cs = tape_.constant(zeros);
    int prev = inv_.size();
    PartialDerivation pd(inv_);
    for (int rule : prefix) {
        DecoderStep step = decode_step(hs, cs, prev, pd, mask);
        pd.apply(rule);
        prev = rule;
    }
    DecoderStep step = decode_step(hs, cs, prev, pd, mask);
    std::vector<std::pair<int, double>> out;
    if (step.valid.empty()) return out;
    NodeId lse = tape_.logsumexp_subset(step.scores, step.valid);
    const Real lse_v = tape_.scalar(lse);
    for (int rule : step.valid)
        out.push_back({rule, static_cast<double>(tape_.value(step.scores)[rule] - lse_v)});
    return out;
}

template <typename Real>
std::vector<BeamItem<Real>> ModelGraph<Real>::beam_decode(const std::vector<bool>& mask,
                                                          int k, int max_rules) {
    if (l_.empty()) fail("beam_decode before encode()");
    struct Item {
        PartialDerivation pd;
        NodeId h, c;
        int prev;
        double logp;
    };
    const std::vector<Real> zeros(static_cast<size_t>(cfg_.dec_hidden), Real(0));
    const auto min_rules = min_completion_rules(inv_, mask);

    std::vector<Item> beam;
    beam.push_back(Item{PartialDerivation(inv_), tape_.constant(zeros),
                        tape_.constant(zeros), inv_.size(), 0.0});
    std::vector<BeamItem<Real>> done;

    for (int depth = 0; depth < max_rules && !beam.empty(); ++depth) {
        std::vector<Item> next;
        for (auto& item : beam) {
            DecoderStep step = decode_step(item.h, item.c, item.prev, item.pd, mask);
            if (step.valid.empty()) continue;
            NodeId lse = tape_.logsumexp_subset(step.scores, step.valid);
            const Real lse_v = tape_.scalar(lse);
            for (int rule : step.valid) {
                PartialDerivation pd = item.pd;
                pd.apply(rule);
                if (pd.min_total_rules(min_rules) > max_rules) continue;  // unfinishable
                double logp = item.logp +
                              static_cast<double>(tape_.value(step.scores)[rule] - lse_v);
                if (pd.complete()) {
                    done.push_back(BeamItem<Real>{pd.finish(), logp});
                } else {
                    next.push_back(Item{std::move(pd), item.h, item.c, rule, logp});
                }
            }
        }
        std::sort(next.begin(), next.end(), [](const Item& a, const Item& b) {
            if (a.logp != b.logp) return a.logp > b.logp;
            return a.pd.rules() < b.pd.rules();
        });
        if (static_cast<int>(next.size()) > k)
            next.erase(next.begin() + k, next.end());
        beam = std::move(next);
    }
    std::sort(done.begin(), done.end(), [](const BeamItem<Real>& a, const BeamItem<Real>& b) {
        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
        return a.program.rules < b.program.rules;
    });
    if (static_cast<int>(done.size()) > k) done.resize(static_cast<size_t>(k));
    return done;
}

template <typename Real>
std::vector<NodeId> ModelGraph<Real>::encode_abstract(const AbstractProgram& h) {
    std::vector<NodeId> xs;
    xs.reserve(h.rules.size());
    for (int rule : h.rules)
        xs.push_back(dropout(embed_row("embed.rule", rule, cfg_.rule_embed_size),
                             cfg_.dropout_ap));
    std::vector<NodeId> states = bilstm("ap", xs, cfg_.ap_hidden);
    std::vector<NodeId> out;
    out.reserve(h.slots.size());
    for (const auto& slot : h.slots)
        out.push_back(states[static_cast<size_t>(slot.rule_pos)]);
    return out;
}

template <typename Real>
NodeId ModelGraph<Real>::span_rep(int i, int j) {
    auto key = std::make_pair(i, j);
    auto it = span_rep_cache_.find(key);
    if (it != span_rep_cache_.end()) return it->second;
    NodeId rep;
    const int sentinel = q_->sentinel_index();
    if (i == sentinel && j == sentinel) {
        rep = pnode("allrow.span");
    } else {
        std::vector<std::pair<Real, NodeId>> terms;
        const Real coef = Real(1) / static_cast<Real>(j - i + 1);
        for (int p = i; p <= j; ++p) terms.push_back({coef, l_[static_cast<size_t>(p)]});
        rep = tape_.lincomb(terms);
    }
    span_rep_cache_.emplace(key, rep);
    return rep;
}

template <typename Real>
NodeId ModelGraph<Real>::span_prod(int i, int j) {
    auto key = std::make_pair(i, j);
    auto it = span_prod_cache_.find(key);
    if (it != span_prod_cache_.end()) return it->second;
    NodeId prod = tape_.matvec_cols(pnode("mlp2.w1"), span_rep(i, j), 2 * cfg_.ap_hidden);
    span_prod_cache_.emplace(key, prod);
    return prod;
}

namespace {

template <typename Real>
struct TapeOps {
    Tape<Real>& t;
    using V = NodeId;
    V zero() { return t.constant_scalar(Real(0)); }
    V add(V a, V b) { return t.add(a, b); }
    V sub(V a, V b) { return t.sub(a, b); }
    V exp_(V a) { return t.exp(a); }
    V logsumexp(const std::vector<V>& terms) { return t.logsumexp(terms); }
};

}  // namespace

template <typename Real>
StructuredAlignment ModelGraph<Real>::structured_alignment(
    const AbstractProgram& h, const std::vector<NodeId>& slot_reps) {
    StructuredAlignment out;
    out.spans = feasible_spans(h.slots, *q_, cfg_.lattice);
    if (h.slots.size() > static_cast<size_t>(cfg_.lattice.max_slots))
        fail("abstract program has %zu slots, max_slots=%d", h.slots.size(),
             cfg_.lattice.max_slots);

    std::vector<std::vector<NodeId>> m(out.spans.n_slots());
    for (size_t k = 0; k < out.spans.n_slots(); ++k) {
        NodeId base = tape_.matvec_cols(pnode("mlp2.w1"), slot_reps[k], 0);
        for (const SpanRef& s : out.spans.spans[k]) {
            NodeId hidden = tape_.relu(tape_.add(
                tape_.add(base, span_prod(s.start, s.end)), pnode("mlp2.b1")));
            hidden = dropout(hidden, cfg_.dropout_mlp);
            NodeId score =
                tape_.add(tape_.dot(pnode("mlp2.w2"), hidden), pnode("mlp2.b2"));
            m[k].push_back(score);
        }
    }

    TapeOps<Real> ops{tape_};
    auto dp = detail::lattice_forward_backward(m, out.spans, ops);
    out.feasible = dp.feasible;
    if (dp.feasible) {
        out.log_z = dp.log_z;
        out.marginal_nodes = std::move(dp.marginals);
    }
    return out;
}

template <typename Real>
std::vector<NodeId> ModelGraph<Real>::pooled_from_alignment(const StructuredAlignment& a) {
    if (!a.feasible) fail("pooled_from_alignment on an infeasible alignment");
    std::vector<NodeId> out;
    for (size_t k = 0; k < a.spans.n_slots(); ++k) {
        std::vector<std::pair<NodeId, NodeId>> pairs;
        for (size_t s = 0; s < a.spans.spans[k].size(); ++s) {
            if (!a.marginal_nodes[k][s]) continue;  // spans no alignment can use
            const SpanRef& span = a.spans.spans[k][s];
            pairs.push_back({*a.marginal_nodes[k][s], span_rep(span.start, span.end)});
        }
        out.push_back(tape_.weighted_sum(pairs));
    }
    return out;
}

template <typename Real>
std::vector<NodeId> ModelGraph<Real>::pooled_standard(const std::vector<NodeId>& slot_reps) {
    if (std_attn_keys_.empty())
        for (NodeId li : l_) std_attn_keys_.push_back(tape_.matvec(pnode("std_attn"), li));
    std::vector<NodeId> out;
    out.reserve(slot_reps.size());
    for (NodeId r : slot_reps)
        out.push_back(attention_context(r, std_attn_keys_, l_));
    return out;
}

template <typename Real>
NodeId ModelGraph<Real>::candidate_rep(const Candidate& c, Slot::Kind kind) {
    if (kind == Slot::Kind::Column) {
        if (c.kind != Candidate::Kind::Column) fail("column slot with non-column candidate");
        return col_name_reps_[static_cast<size_t>(c.column)];
    }
    if (c.kind == Candidate::Kind::AllRows) return pnode("allrow.cand");
    // condition: [column rep with features; operator embedding; value embedding]
    std::vector<NodeId> cond_reps;
    for (const Condition& cond : c.conditions) {
        NodeId col = col_reps_[static_cast<size_t>(cond.column)];
        NodeId op = embed_row("embed.op", static_cast<int>(cond.op), cfg_.op_embed_size);
        NodeId val = mean_embeddings(value_tokens(cond.value));
        cond_reps.push_back(tape_.concat({col, op, val}));
    }
    if (cond_reps.size() == 1) return cond_reps[0];
    std::vector<std::pair<Real, NodeId>> terms;
    const Real coef = Real(1) / static_cast<Real>(cond_reps.size());
    for (NodeId r : cond_reps) terms.push_back({coef, r});
    NodeId mean = tape_.lincomb(terms);
    int conn_row = c.connective == Connective::Or ? 1 : 0;
    return tape_.add(mean, embed_row("embed.connective", conn_row, cfg_.cond_dim()));
}

template <typename Real>
typename ModelGraph<Real>::CandidateSet ModelGraph<Real>::build_candidates(
    const std::vector<Candidate>& cands, Slot::Kind kind) {
    CandidateSet set;
    set.kind = kind;
    const char* w1 = kind == Slot::Kind::Row ? "mlp_row.w1" : "mlp_col.w1";
    for (const Candidate& c : cands) {
        NodeId rep = candidate_rep(c, kind);
        set.first_layer.push_back(tape_.matvec_cols(pnode(w1), rep, cfg_.span_dim()));
    }
    return set;
}

template <typename Real>
std::vector<NodeId> ModelGraph<Real>::slot_log_probs(NodeId pooled,
                                                     const CandidateSet& set) {
    const char* prefix = set.kind == Slot::Kind::Row ? "mlp_row" : "mlp_col";
    NodeId base = tape_.matvec_cols(pnode(std::string(prefix) + ".w1"), pooled, 0);
    NodeId b1 = pnode(std::string(prefix) + ".b1");
    NodeId w2 = pnode(std::string(prefix) + ".w2");
    NodeId b2 = pnode(std::string(prefix) + ".b2");
    std::vector<NodeId> scores;
    scores.reserve(set.first_layer.size());
    for (NodeId fl : set.first_layer) {
        NodeId hidden = tape_.relu(tape_.add(tape_.add(base, fl), b1));
        hidden = dropout(hidden, cfg_.dropout_mlp);
        scores.push_back(tape_.add(tape_.dot(w2, hidden), b2));
    }
    NodeId lse = tape_.logsumexp(scores);
    std::vector<NodeId> out;
    out.reserve(scores.size());
    for (NodeId s : scores) out.push_back(tape_.sub(s, lse));
    return out;
}

template class ModelGraph<float>;
template class ModelGraph<double>;
template ParameterStore<float> build_parameters<float>(const ModelConfig&,
                                                       const RuleInventory&, size_t, size_t);
template ParameterStore<double> build_parameters<double>(const ModelConfig&,
                                                         const RuleInventory&, size_t,
                                                         size_t);
template size_t load_embeddings<float>(ParameterStore<float>&, const Vocab&,
                                       const std::string&);
template size_t load_embeddings<double>(ParameterStore<double>&, const Vocab&,
                                        const std::string&);

}  // namespace tabsem
