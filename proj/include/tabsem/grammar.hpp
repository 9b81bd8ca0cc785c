#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tabsem/program.hpp"
#include "tabsem/question.hpp"

namespace tabsem {

// Basic types of the abstract grammar. Root is the start symbol of the first
// decoding action (choosing the program's return type). Func carries the
// signature used by function-type production rules.
struct BasicType {
    enum class Kind : uint8_t {
        Root,
        Row,
        ListRow,
        String,
        Number,
        Date,
        ColString,
        ColNumber,
        ColDate,
        Func,
    };

    Kind kind = Kind::Root;
    Kind func_ret = Kind::Root;        // Kind::Func only
    std::vector<Kind> func_args;       // Kind::Func only

    static BasicType simple(Kind k) { return BasicType{k, Kind::Root, {}}; }
    static BasicType func(Kind ret, std::vector<Kind> args) {
        return BasicType{Kind::Func, ret, std::move(args)};
    }

    bool operator==(const BasicType&) const = default;
    std::string print() const;
};

const char* basic_kind_name(BasicType::Kind k);

// A demanded type accepts a producing type if equal, or by the single lifting
// rule: a ROW producer satisfies a LIST[ROW] demand (a row is a list of one).
bool type_assignable(const BasicType& demanded, const BasicType& producer);

std::optional<ColType> col_type_of(BasicType::Kind k);  // COL_* kinds only

struct ProductionRule {
    enum class RhsKind : uint8_t {
        ReturnType,     // ROOT -> <value type>
        Function,       // TYPE -> function-name, children are argument types
        FuncExpansion,  // TYPE -> <TYPE:(ARGS)>
        RowSlotMarker,  // LIST[ROW] -> #row_slot
        ColSlotMarker,  // COL[*] -> #column_slot
    };

    BasicType lhs;
    RhsKind rhs = RhsKind::Function;
    Func function = Func::Select;       // RhsKind::Function
    std::vector<BasicType> children;    // demanded types pushed on application

    std::string print() const;
};

struct GrammarConfig {
    int max_conditions = 2;
    bool enable_and = true;
    bool enable_or = true;
    // Appendix-style two-rule encoding of functions (TYPE -> <TYPE:(ARGS)>,
    // <TYPE:(ARGS)> -> name). Off by default: one rule per function.
    bool function_type_rules = false;
};

// The fixed global rule inventory; rule ids index into rules() and are stable
// across runs and platforms.
class RuleInventory {
public:
    explicit RuleInventory(const GrammarConfig& cfg = GrammarConfig{});

    const std::vector<ProductionRule>& rules() const { return rules_; }
    const ProductionRule& rule(int id) const { return rules_[static_cast<size_t>(id)]; }
    int size() const { return static_cast<int>(rules_.size()); }
    const GrammarConfig& config() const { return cfg_; }

    // `same_as` and friends are deliberately absent; see language reference.
    int find(const std::string& printed) const;  // -1 if absent

private:
    GrammarConfig cfg_;
    std::vector<ProductionRule> rules_;
};

// Per-table rule mask H_t: a rule survives iff every type it demands has a
// viable producer for this table (least fixpoint), and column-slot rules
// require a column of the matching type.
std::vector<bool> abstract_grammar_for_table(const RuleInventory& inv, const Table& table);

struct Derivation {
    struct Node {
        int rule = -1;
        std::vector<Node> children;
    };
    Node root;  // applies a ReturnType rule

    bool operator==(const Derivation& o) const;
};

struct Slot {
    enum class Kind : uint8_t { Row, Column };
    Kind kind = Kind::Row;
    int index = 0;     // 0-based, contiguous, linearization order
    std::optional<ColType> expected_coltype;  // column slots
    int rule_pos = 0;  // position of the slot's rule in the linearization
};

struct AbstractProgram {
    std::vector<int> rules;  // left-to-right depth-first linearization
    std::vector<Slot> slots;
    Derivation derivation;

    std::string print(const RuleInventory& inv) const;  // functional form
};

// Incremental construction state shared by enumeration, parsing, and the
// grammar-constrained decoder.
class PartialDerivation {
public:
    explicit PartialDerivation(const RuleInventory& inv);

    // Rules applicable at the leftmost open node, in rule-id order; the
    // optional mask restricts to a table grammar H_t.
    std::vector<int> valid_next(const std::vector<bool>* mask = nullptr) const;
    bool can_apply(int rule_id) const;
    void apply(int rule_id);
    bool complete() const { return open_.empty(); }
    const std::vector<int>& rules() const { return applied_; }

    // Lower bound on total rules of any completion (requires min-completion
    // table; see min_completion_rules).
    int min_total_rules(const std::vector<int>& min_rules_by_type) const;

    AbstractProgram finish() const;  // pre: complete()

private:
    const RuleInventory* inv_;
    std::vector<int> applied_;
    std::vector<BasicType> open_;  // stack; back() is the leftmost open node
};

std::vector<int> linearize(const Derivation& d);
// Throws ParseError naming the first offending index.
Derivation parse_rules(const RuleInventory& inv, const std::vector<int>& seq);
AbstractProgram abstract_from_derivation(const RuleInventory& inv, const Derivation& d);

// Minimal rules needed to complete one open node of each basic-type kind,
// under mask; unproducible types get a large sentinel.
std::vector<int> min_completion_rules(const RuleInventory& inv, const std::vector<bool>& mask);

// All complete derivations with at most max_rules rules, in lexicographic
// rule-id order.
std::vector<AbstractProgram> enumerate_abstract_programs(const RuleInventory& inv,
                                                         const std::vector<bool>& mask,
                                                         int max_rules);

// Candidate instantiations for one slot.
std::vector<Candidate> slot_candidates(const Slot& slot, const Table& table,
                                       const Question& question, const GrammarConfig& cfg);

// Substitutes one candidate per slot; throws Error naming the slot on a type
// mismatch or missing assignment.
Program instantiate(const RuleInventory& inv, const AbstractProgram& h,
                    const std::vector<Candidate>& assignment);

// Inverse of instantiate: recovers the abstract program and the assignment.
std::pair<AbstractProgram, std::vector<Candidate>> abstract_of(const RuleInventory& inv,
                                                               const Program& z);

}  // namespace tabsem
