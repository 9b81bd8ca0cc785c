#pragma once

#include "tabsem/corpus.hpp"
#include "tabsem/lattice.hpp"
#include "tabsem/search.hpp"
#include "tabsem/tape.hpp"

namespace tabsem {

enum class AttentionMode : uint8_t { Structured, Standard };
const char* attention_mode_name(AttentionMode m);
std::optional<AttentionMode> attention_mode_from_name(std::string_view s);

struct ModelConfig {
    int embed_size = 64;     // word embeddings and value representations
    int feat_size = 16;      // in_table / POS / column type / column indicator
    int op_embed_size = 16;  // comparison operators
    int rule_embed_size = 64;
    int enc_hidden = 64;     // question encoder, per direction
    int dec_hidden = 64;
    int ap_hidden = 64;      // abstract-program encoder, per direction
    int mlp_hidden = 128;    // shared by all four MLPs
    double dropout_enc = 0.2;
    double dropout_ap = 0.2;
    double dropout_mlp = 0.2;
    AttentionMode attention = AttentionMode::Structured;
    int beam_k = 6;
    uint64_t seed = 1;
    bool use_pos = false;
    LatticeConfig lattice;

    int enc_in_dim() const { return embed_size + feat_size + (use_pos ? feat_size : 0); }
    int span_dim() const { return 2 * enc_hidden; }
    int col_full_dim() const { return embed_size + 2 * feat_size; }
    int cond_dim() const { return col_full_dim() + op_embed_size + embed_size; }
};

// Word index; id 0 is the reserved unknown. Construction is deterministic
// (sorted unique words).
class Vocab {
public:
    Vocab() { words_ = {"<unk>"}; }
    static Vocab build(const Corpus& corpus, Split split);
    static Vocab from_words(std::vector<std::string> sorted_words);

    int id(const std::string& w) const;
    size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    std::string serialize() const;  // newline-joined
    static Vocab deserialize(std::string_view blob);

private:
    std::vector<std::string> words_;
    std::map<std::string, int> index_;

    void reindex();
};

// Tokens a cell value contributes to vocabularies and value representations.
std::vector<std::string> value_tokens(const CellValue& v);

// Creates and initializes every trainable tensor: uniform [-0.1, 0.1] for
// weights, zeros for biases, forget-gate biases at 1.
template <typename Real>
ParameterStore<Real> build_parameters(const ModelConfig& cfg, const RuleInventory& inv,
                                      size_t vocab_size, size_t pos_vocab_size);

// Overwrites initial word embeddings from "word v1 v2 ..." lines; unknown
// words are skipped, wrong arity is an error. Returns rows loaded.
template <typename Real>
size_t load_embeddings(ParameterStore<Real>& params, const Vocab& vocab,
                       const std::string& path);

template <typename Real>
struct BeamItem {
    AbstractProgram program;
    double log_prob = 0;
};

// Structured-attention artifacts for one abstract program (also feeds the
// align command).
struct StructuredAlignment {
    FeasibleSpans spans;
    std::vector<std::vector<std::optional<NodeId>>> marginal_nodes;  // [slot][span]
    NodeId log_z = -1;
    bool feasible = false;
};

// Per-example computation graph. Build once per (example, parameters) pass;
// all returned NodeIds live on tape().
template <typename Real>
class ModelGraph {
public:
    ModelGraph(const ModelConfig& cfg, const RuleInventory& inv, const Vocab& vocab,
               const Vocab& pos_vocab, ParameterStore<Real>& params,
               SplitMix64* dropout_rng = nullptr);

    // input encoder: contextual token representations l_i (incl. sentinel)
    // and per-column representations
    void encode(const Question& q, const Table& t);
    const std::vector<NodeId>& token_reps() const { return l_; }
    const std::vector<NodeId>& column_reps() const { return col_reps_; }

    // log p(h | x, t) under the table grammar, teacher-forced (differentiable)
    NodeId abstract_log_prob(const AbstractProgram& h, const std::vector<bool>& mask);

    // top-k complete abstract programs by beam search (forward values only)
    std::vector<BeamItem<Real>> beam_decode(const std::vector<bool>& mask, int k,
                                            int max_rules);

    // decoder distribution after a rule prefix: (rule id, log prob) for every
    // valid next rule, forward values only
    std::vector<std::pair<int, double>> next_rule_log_probs(const std::vector<int>& prefix,
                                                            const std::vector<bool>& mask);

    // slot representations r(k) from the abstract-program encoder
    std::vector<NodeId> encode_abstract(const AbstractProgram& h);

    // alignment scores + forward-backward marginals + pooled representations
    StructuredAlignment structured_alignment(const AbstractProgram& h,
                                             const std::vector<NodeId>& slot_reps);
    std::vector<NodeId> pooled_from_alignment(const StructuredAlignment& a);
    // standard-attention pooling baseline: one attention per slot, no
    // structural constraints
    std::vector<NodeId> pooled_standard(const std::vector<NodeId>& slot_reps);

    // candidate scores: first-layer products reusable across slots
    struct CandidateSet {
        Slot::Kind kind = Slot::Kind::Row;
        std::vector<NodeId> first_layer;  // W1c * rep, per candidate
    };
    CandidateSet build_candidates(const std::vector<Candidate>& cands, Slot::Kind kind);
    // log-probabilities over the candidate list for one slot
    std::vector<NodeId> slot_log_probs(NodeId pooled, const CandidateSet& set);

    Tape<Real>& tape() { return tape_; }
    const Question& question() const { return *q_; }

private:
    const ModelConfig& cfg_;
    const RuleInventory& inv_;
    const Vocab& vocab_;
    const Vocab& pos_vocab_;
    ParameterStore<Real>& params_;
    SplitMix64* dropout_rng_;
    Tape<Real> tape_;

    const Question* q_ = nullptr;
    const Table* t_ = nullptr;
    std::vector<NodeId> l_;
    std::vector<NodeId> col_reps_;       // E + 2F, used in condition candidates
    std::vector<NodeId> col_name_reps_;  // E, used as column-slot candidates
    std::vector<NodeId> dec_attn_keys_;
    std::vector<NodeId> std_attn_keys_;
    std::map<std::pair<int, int>, NodeId> span_rep_cache_;
    std::map<std::pair<int, int>, NodeId> span_prod_cache_;  // mlp2 first layer
    // parameter nodes created lazily, one per tensor per graph
    std::map<std::string, NodeId> param_nodes_;

    NodeId pnode(const std::string& name);
    NodeId embed_row(const std::string& table_param, int row, int width);
    NodeId word_emb(const std::string& w);
    NodeId mean_embeddings(const std::vector<std::string>& words);
    NodeId dropout(NodeId x, double rate);
    NodeId lstm_step(const std::string& prefix, NodeId x, NodeId& h, NodeId& c, int hidden);
    std::vector<NodeId> bilstm(const std::string& prefix, const std::vector<NodeId>& xs,
                               int hidden);
    NodeId span_rep(int i, int j);
    NodeId span_prod(int i, int j);
    NodeId candidate_rep(const Candidate& c, Slot::Kind kind);
    NodeId attention_context(NodeId query, const std::vector<NodeId>& keys,
                             const std::vector<NodeId>& values);
    struct DecoderStep {
        NodeId scores;  // over the full inventory
        std::vector<int> valid;
    };
    DecoderStep decode_step(NodeId& h, NodeId& c, int prev_rule,
                            const PartialDerivation& pd, const std::vector<bool>& mask);
};

extern template class ModelGraph<float>;
extern template class ModelGraph<double>;
extern template ParameterStore<float> build_parameters<float>(const ModelConfig&,
                                                              const RuleInventory&, size_t,
                                                              size_t);
extern template ParameterStore<double> build_parameters<double>(const ModelConfig&,
                                                                const RuleInventory&,
                                                                size_t, size_t);
extern template size_t load_embeddings<float>(ParameterStore<float>&, const Vocab&,
                                              const std::string&);
extern template size_t load_embeddings<double>(ParameterStore<double>&, const Vocab&,
                                               const std::string&);

}  // namespace tabsem
