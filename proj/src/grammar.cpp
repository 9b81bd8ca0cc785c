#include "tabsem/grammar.hpp"

#include <algorithm>
#include <set>

namespace tabsem {

const char* basic_kind_name(BasicType::Kind k) {
    using K = BasicType::Kind;
    switch (k) {
        case K::Root: return "ROOT";
        case K::Row: return "ROW";
        case K::ListRow: return "LIST[ROW]";
        case K::String: return "STRING";
        case K::Number: return "NUMBER";
        case K::Date: return "DATE";
        case K::ColString: return "COL[STRING]";
        case K::ColNumber: return "COL[NUMBER]";
        case K::ColDate: return "COL[DATE]";
        case K::Func: return "FUNC";
    }
    return "?";
}

std::string BasicType::print() const {
    if (kind != Kind::Func) return basic_kind_name(kind);
    std::vector<std::string> parts;
    for (Kind a : func_args) parts.emplace_back(basic_kind_name(a));
    return format("<%s:(%s)>", basic_kind_name(func_ret), join(parts, ", ").c_str());
}

bool type_assignable(const BasicType& demanded, const BasicType& producer) {
    if (demanded == producer) return true;
    return demanded.kind == BasicType::Kind::ListRow && producer.kind == BasicType::Kind::Row;
}

std::optional<ColType> col_type_of(BasicType::Kind k) {
    using K = BasicType::Kind;
    switch (k) {
        case K::ColString: return ColType::String;
        case K::ColNumber: return ColType::Number;
        case K::ColDate: return ColType::Date;
        default: return std::nullopt;
    }
}

std::string ProductionRule::print() const {
    std::string rhs_text;
    switch (rhs) {
        case RhsKind::ReturnType: rhs_text = children[0].print(); break;
        case RhsKind::RowSlotMarker: rhs_text = "#row_slot"; break;
        case RhsKind::ColSlotMarker: rhs_text = "#column_slot"; break;
        case RhsKind::FuncExpansion: rhs_text = children[0].print(); break;
        case RhsKind::Function: {
            if (lhs.kind == BasicType::Kind::Func) {
                rhs_text = func_name(function);  // split mode: signature is in lhs
            } else {
                std::vector<std::string> parts;
                for (const auto& c : children) parts.push_back(c.print());
                rhs_text = format("%s(%s)", func_name(function), join(parts, ", ").c_str());
            }
            break;
        }
    }
    return lhs.print() + " -> " + rhs_text;
}

namespace {

using K = BasicType::Kind;

struct FuncSig {
    Func f;
    K ret;
    std::vector<K> args;
};

// Fixed signature order; rule ids depend on it. `same_as` is deliberately
// absent from the language.
const std::vector<FuncSig>& func_signatures() {
    static const std::vector<FuncSig> sigs = {
        {Func::Select, K::String, {K::ListRow, K::ColString}},
        {Func::Select, K::Number, {K::ListRow, K::ColNumber}},
        {Func::Select, K::Date, {K::ListRow, K::ColDate}},
        {Func::ArgMax, K::ListRow, {K::ListRow, K::ColNumber}},
        {Func::ArgMax, K::ListRow, {K::ListRow, K::ColDate}},
        {Func::ArgMin, K::ListRow, {K::ListRow, K::ColNumber}},
        {Func::ArgMin, K::ListRow, {K::ListRow, K::ColDate}},
        {Func::First, K::Row, {K::ListRow}},
        {Func::Last, K::Row, {K::ListRow}},
        {Func::Previous, K::Row, {K::ListRow}},
        {Func::Next, K::Row, {K::ListRow}},
        {Func::Count, K::Number, {K::ListRow}},
        {Func::Max, K::Number, {K::ListRow, K::ColNumber}},
        {Func::Min, K::Number, {K::ListRow, K::ColNumber}},
        {Func::Sum, K::Number, {K::ListRow, K::ColNumber}},
        {Func::Average, K::Number, {K::ListRow, K::ColNumber}},
        {Func::Diff, K::Number, {K::Number, K::Number}},
    };
    return sigs;
}

std::vector<BasicType> simple_children(const std::vector<K>& kinds) {
    std::vector<BasicType> out;
    out.reserve(kinds.size());
    for (K k : kinds) out.push_back(BasicType::simple(k));
    return out;
}

}  // namespace

RuleInventory::RuleInventory(const GrammarConfig& cfg) : cfg_(cfg) {
    for (K root : {K::String, K::Number, K::Date}) {
        ProductionRule r;
        r.lhs = BasicType::simple(K::Root);
        r.rhs = ProductionRule::RhsKind::ReturnType;
        r.children = {BasicType::simple(root)};
        rules_.push_back(std::move(r));
    }
    for (const FuncSig& sig : func_signatures()) {
        if (!cfg.function_type_rules) {
            ProductionRule r;
            r.lhs = BasicType::simple(sig.ret);
            r.rhs = ProductionRule::RhsKind::Function;
            r.function = sig.f;
            r.children = simple_children(sig.args);
            rules_.push_back(std::move(r));
        } else {
            BasicType ftype = BasicType::func(sig.ret, sig.args);
            ProductionRule expand;
            expand.lhs = BasicType::simple(sig.ret);
            expand.rhs = ProductionRule::RhsKind::FuncExpansion;
            expand.children = {ftype};
            rules_.push_back(std::move(expand));
            ProductionRule named;
            named.lhs = ftype;
            named.rhs = ProductionRule::RhsKind::Function;
            named.function = sig.f;
            named.children = simple_children(sig.args);
            rules_.push_back(std::move(named));
        }
    }
    {
        ProductionRule r;
        r.lhs = BasicType::simple(K::ListRow);
        r.rhs = ProductionRule::RhsKind::RowSlotMarker;
        rules_.push_back(std::move(r));
    }
    for (K ck : {K::ColString, K::ColNumber, K::ColDate}) {
        ProductionRule r;
        r.lhs = BasicType::simple(ck);
        r.rhs = ProductionRule::RhsKind::ColSlotMarker;
        rules_.push_back(std::move(r));
    }
}

int RuleInventory::find(const std::string& printed) const {
    for (int i = 0; i < size(); ++i)
        if (rules_[static_cast<size_t>(i)].print() == printed) return i;
    return -1;
}

std::vector<bool> abstract_grammar_for_table(const RuleInventory& inv, const Table& table) {
    const auto& rules = inv.rules();
    std::vector<bool> viable(rules.size(), false);

    auto producible = [&](const BasicType& demanded) {
        for (size_t i = 0; i < rules.size(); ++i)
            if (viable[i] && type_assignable(demanded, rules[i].lhs)) return true;
        return false;
    };

    // least fixpoint: start from terminal rules, add a rule once all its
    // demanded child types have viable producers
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < rules.size(); ++i) {
            if (viable[i]) continue;
            const ProductionRule& r = rules[i];
            if (r.rhs == ProductionRule::RhsKind::ColSlotMarker) {
                auto ct = col_type_of(r.lhs.kind);
                if (ct && table.has_type(*ct)) {
                    viable[i] = true;
                    changed = true;
                }
                continue;
            }
            if (r.rhs == ProductionRule::RhsKind::RowSlotMarker) {
                viable[i] = true;  // all_rows always instantiates
                changed = true;
                continue;
            }
            bool ok = true;
            for (const auto& c : r.children)
                if (!producible(c)) {
                    ok = false;
                    break;
                }
            if (ok) {
                viable[i] = true;
                changed = true;
            }
        }
    }
    return viable;
}

// --- derivations ------------------------------------------------------------

bool Derivation::operator==(const Derivation& o) const {
    return linearize(*this) == linearize(o);
}

static void linearize_node(const Derivation::Node& n, std::vector<int>& out) {
    out.push_back(n.rule);
    for (const auto& c : n.children) linearize_node(c, out);
}

std::vector<int> linearize(const Derivation& d) {
    std::vector<int> out;
    linearize_node(d.root, out);
    return out;
}

namespace {

Derivation::Node parse_node(const RuleInventory& inv, const std::vector<int>& seq,
                            size_t& pos, const BasicType& demanded) {
    if (pos >= seq.size())
        fail_parse("rule sequence ends at index %zu while expecting %s", pos,
                   demanded.print().c_str());
    int id = seq[pos];
    if (id < 0 || id >= inv.size())
        fail_parse("invalid rule id %d at index %zu", id, pos);
    const ProductionRule& r = inv.rule(id);
    if (!type_assignable(demanded, r.lhs))
        fail_parse("rule at index %zu produces %s where %s is demanded", pos,
                   r.lhs.print().c_str(), demanded.print().c_str());
    Derivation::Node node;
    node.rule = id;
    ++pos;
    node.children.reserve(r.children.size());
    for (const auto& child : r.children)
        node.children.push_back(parse_node(inv, seq, pos, child));
    return node;
}

}  // namespace

Derivation parse_rules(const RuleInventory& inv, const std::vector<int>& seq) {
    size_t pos = 0;
    Derivation d;
    d.root = parse_node(inv, seq, pos, BasicType::simple(K::Root));
    if (pos != seq.size())
        fail_parse("trailing rules at index %zu after a complete derivation", pos);
    return d;
}

namespace {

void collect_slots(const RuleInventory& inv, const Derivation::Node& n, int& pos,
                   std::vector<Slot>& slots) {
    const ProductionRule& r = inv.rule(n.rule);
    if (r.rhs == ProductionRule::RhsKind::RowSlotMarker) {
        slots.push_back(Slot{Slot::Kind::Row, static_cast<int>(slots.size()),
                             std::nullopt, pos});
    } else if (r.rhs == ProductionRule::RhsKind::ColSlotMarker) {
        slots.push_back(Slot{Slot::Kind::Column, static_cast<int>(slots.size()),
                             col_type_of(r.lhs.kind), pos});
    }
    ++pos;
    for (const auto& c : n.children) collect_slots(inv, c, pos, slots);
}

}  // namespace

AbstractProgram abstract_from_derivation(const RuleInventory& inv, const Derivation& d) {
    AbstractProgram h;
    h.rules = linearize(d);
    h.derivation = d;
    int pos = 0;
    collect_slots(inv, d.root, pos, h.slots);
    return h;
}

static std::string print_abstract_node(const RuleInventory& inv, const Derivation::Node& n) {
    const ProductionRule& r = inv.rule(n.rule);
    switch (r.rhs) {
        case ProductionRule::RhsKind::ReturnType:
        case ProductionRule::RhsKind::FuncExpansion:
            return print_abstract_node(inv, n.children[0]);
        case ProductionRule::RhsKind::RowSlotMarker: return "#row_slot";
        case ProductionRule::RhsKind::ColSlotMarker: {
            auto ct = col_type_of(r.lhs.kind);
            return format("#column_slot:%s", ct ? col_type_name(*ct) : "?");
        }
        case ProductionRule::RhsKind::Function: {
            std::vector<std::string> parts;
            for (const auto& c : n.children) parts.push_back(print_abstract_node(inv, c));
            return format("%s(%s)", func_name(r.function), join(parts, ", ").c_str());
        }
    }
    return "?";
}

std::string AbstractProgram::print(const RuleInventory& inv) const {
    return print_abstract_node(inv, derivation.root);
}

// --- partial derivations ----------------------------------------------------

PartialDerivation::PartialDerivation(const RuleInventory& inv) : inv_(&inv) {
    open_.push_back(BasicType::simple(K::Root));
}

bool PartialDerivation::can_apply(int rule_id) const {
    if (open_.empty()) return false;
    return type_assignable(open_.back(), inv_->rule(rule_id).lhs);
}

std::vector<int> PartialDerivation::valid_next(const std::vector<bool>* mask) const {
    std::vector<int> out;
    if (open_.empty()) return out;
    for (int i = 0; i < inv_->size(); ++i) {
        if (mask && !(*mask)[static_cast<size_t>(i)]) continue;
        if (type_assignable(open_.back(), inv_->rule(i).lhs)) out.push_back(i);
    }
    return out;
}

void PartialDerivation::apply(int rule_id) {
    if (!can_apply(rule_id))
        fail("rule %s not applicable here", inv_->rule(rule_id).print().c_str());
    const ProductionRule& r = inv_->rule(rule_id);
    applied_.push_back(rule_id);
    open_.pop_back();
    for (auto it = r.children.rbegin(); it != r.children.rend(); ++it)
        open_.push_back(*it);
}

int PartialDerivation::min_total_rules(const std::vector<int>& min_rules_by_type) const {
    int total = static_cast<int>(applied_.size());
    for (const auto& t : open_) total += min_rules_by_type[static_cast<size_t>(t.kind)];
    return total;
}

AbstractProgram PartialDerivation::finish() const {
    if (!complete()) fail("derivation incomplete: %zu open nodes", open_.size());
    return abstract_from_derivation(*inv_, parse_rules(*inv_, applied_));
}

std::vector<int> min_completion_rules(const RuleInventory& inv, const std::vector<bool>& mask) {
    constexpr int kUnreachable = 1000000;
    constexpr int n_kinds = static_cast<int>(K::Func) + 1;
    std::vector<int> best(n_kinds, kUnreachable);
    // Bellman-Ford style relaxation over the kind graph; Func types collapse
    // onto one kind, still a valid lower bound for pruning.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < inv.size(); ++i) {
            if (!mask[static_cast<size_t>(i)]) continue;
            const ProductionRule& r = inv.rule(i);
            long cost = 1;
            for (const auto& c : r.children) {
                cost += best[static_cast<size_t>(c.kind)];
                if (cost >= kUnreachable) {
                    cost = kUnreachable;
                    break;
                }
            }
            auto relax = [&](K demanded) {
                int& slot = best[static_cast<size_t>(demanded)];
                if (cost < slot) {
                    slot = static_cast<int>(cost);
                    changed = true;
                }
            };
            relax(r.lhs.kind);
            if (r.lhs.kind == K::Row) relax(K::ListRow);  // lifting
        }
    }
    return best;
}

// --- enumeration ------------------------------------------------------------

namespace {

void enumerate_rec(const RuleInventory& inv, const std::vector<bool>& mask,
                   const std::vector<int>& min_rules, int max_rules,
                   PartialDerivation& pd, std::vector<AbstractProgram>& out) {
    if (pd.complete()) {
        out.push_back(pd.finish());
        return;
    }
    if (pd.min_total_rules(min_rules) > max_rules) return;
    for (int id : pd.valid_next(&mask)) {
        PartialDerivation next = pd;
        next.apply(id);
        if (next.min_total_rules(min_rules) > max_rules) continue;
        enumerate_rec(inv, mask, min_rules, max_rules, next, out);
    }
}

}  // namespace

std::vector<AbstractProgram> enumerate_abstract_programs(const RuleInventory& inv,
                                                         const std::vector<bool>& mask,
                                                         int max_rules) {
    std::vector<AbstractProgram> out;
    if (max_rules < 1) return out;
    std::vector<int> min_rules = min_completion_rules(inv, mask);
    PartialDerivation pd(inv);
    enumerate_rec(inv, mask, min_rules, max_rules, pd, out);
    return out;
}

// --- slot candidates ---------------------------------------------------------

std::vector<Candidate> slot_candidates(const Slot& slot, const Table& table,
                                       const Question& question, const GrammarConfig& cfg) {
    std::vector<Candidate> out;
    if (slot.kind == Slot::Kind::Column) {
        for (size_t c = 0; c < table.columns.size(); ++c) {
            if (slot.expected_coltype && table.columns[c].ctype != *slot.expected_coltype)
                continue;
            out.push_back(Candidate::column_choice(static_cast<int>(c),
                                                   table.columns[c].name(),
                                                   table.columns[c].ctype));
        }
        return out;
    }

    out.push_back(Candidate::all_rows());

    // single conditions from (type-compatible column, operator, entity value)
    std::vector<Condition> singles;
    std::set<std::string> seen;
    for (const auto& ent : question.entities) {
        for (size_t c = 0; c < table.columns.size(); ++c) {
            const Column& col = table.columns[c];
            if (col.ctype != ent.value.type()) continue;
            std::vector<CmpOp> ops;
            if (col.ctype == ColType::String) {
                ops = {CmpOp::Eq};
            } else {
                ops = {CmpOp::Gt, CmpOp::Lt, CmpOp::Eq, CmpOp::Ge, CmpOp::Le};
            }
            for (CmpOp op : ops) {
                Condition cond;
                cond.column = static_cast<int>(c);
                cond.column_name = col.name();
                cond.op = op;
                cond.value = ent.value;
                if (seen.insert(cond.print()).second) singles.push_back(std::move(cond));
            }
        }
    }
    for (const auto& cond : singles)
        out.push_back(Candidate::row_filter({cond}, Connective::None));

    std::vector<Connective> conns;
    if (cfg.enable_and) conns.push_back(Connective::And);
    if (cfg.enable_or) conns.push_back(Connective::Or);
    if (conns.empty() || cfg.max_conditions < 2) return out;

    // combinations of distinct single conditions, sizes 2..max_conditions
    std::vector<size_t> pick;
    auto emit = [&](auto&& self, size_t start, int want) -> void {
        if (want == 0) {
            std::vector<Condition> conds;
            conds.reserve(pick.size());
            for (size_t i : pick) conds.push_back(singles[i]);
            for (Connective conn : conns)
                out.push_back(Candidate::row_filter(conds, conn));
            return;
        }
        for (size_t i = start; i + static_cast<size_t>(want) <= singles.size(); ++i) {
            pick.push_back(i);
            self(self, i + 1, want - 1);
            pick.pop_back();
        }
    };
    for (int size = 2; size <= cfg.max_conditions; ++size) emit(emit, 0, size);
    return out;
}

// --- instantiation ----------------------------------------------------------

namespace {

Program instantiate_node(const RuleInventory& inv, const Derivation::Node& n,
                         const std::vector<Slot>& slots,
                         const std::vector<Candidate>& assignment, size_t& slot_cursor) {
    const ProductionRule& r = inv.rule(n.rule);
    switch (r.rhs) {
        case ProductionRule::RhsKind::ReturnType:
        case ProductionRule::RhsKind::FuncExpansion:
            return instantiate_node(inv, n.children[0], slots, assignment, slot_cursor);
        case ProductionRule::RhsKind::Function: {
            std::vector<Program> args;
            args.reserve(n.children.size());
            for (const auto& c : n.children)
                args.push_back(instantiate_node(inv, c, slots, assignment, slot_cursor));
            return Program::call(r.function, std::move(args));
        }
        case ProductionRule::RhsKind::RowSlotMarker:
        case ProductionRule::RhsKind::ColSlotMarker: {
            size_t k = slot_cursor++;
            if (k >= assignment.size())
                fail("no candidate assigned to slot %zu", k);
            const Slot& slot = slots[k];
            const Candidate& cand = assignment[k];
            if (slot.kind == Slot::Kind::Row) {
                if (!cand.is_row_kind())
                    fail("slot %zu is a row slot but candidate is a column", k);
                return Program::row_leaf(cand);
            }
            if (cand.kind != Candidate::Kind::Column)
                fail("slot %zu is a column slot but candidate is not a column", k);
            if (slot.expected_coltype && cand.col_type != *slot.expected_coltype)
                fail("slot %zu expects a %s column, got '%s' of type %s", k,
                     col_type_name(*slot.expected_coltype), cand.column_name.c_str(),
                     col_type_name(cand.col_type));
            return Program::column_leaf(cand.column, cand.column_name, cand.col_type);
        }
    }
    fail("unreachable rule kind");
}

}  // namespace

Program instantiate(const RuleInventory& inv, const AbstractProgram& h,
                    const std::vector<Candidate>& assignment) {
    if (assignment.size() != h.slots.size())
        fail("assignment covers %zu of %zu slots", assignment.size(), h.slots.size());
    size_t cursor = 0;
    return instantiate_node(inv, h.derivation.root, h.slots, assignment, cursor);
}

// --- abstraction (inverse of instantiate) -----------------------------------

namespace {

K produced_kind(const Program& z) {
    switch (z.kind) {
        case Program::Kind::RowLeaf: return K::ListRow;
        case Program::Kind::ColumnLeaf:
            switch (z.leaf.col_type) {
                case ColType::String: return K::ColString;
                case ColType::Number: return K::ColNumber;
                case ColType::Date: return K::ColDate;
            }
            return K::ColString;
        case Program::Kind::Call: {
            std::vector<K> argk;
            argk.reserve(z.args.size());
            for (const auto& a : z.args) argk.push_back(produced_kind(a));
            for (const FuncSig& sig : func_signatures()) {
                if (sig.f != z.func || sig.args.size() != argk.size()) continue;
                bool ok = true;
                for (size_t i = 0; i < argk.size(); ++i) {
                    if (!type_assignable(BasicType::simple(sig.args[i]),
                                         BasicType::simple(argk[i]))) {
                        ok = false;
                        break;
                    }
                }
                if (ok) return sig.ret;
            }
            fail("no signature of %s matches its arguments", func_name(z.func));
        }
    }
    fail("unreachable program kind");
}

Derivation::Node abstract_node(const RuleInventory& inv, const Program& z,
                               std::vector<Candidate>& assignment) {
    Derivation::Node node;
    switch (z.kind) {
        case Program::Kind::RowLeaf: {
            int id = -1;
            for (int i = 0; i < inv.size(); ++i)
                if (inv.rule(i).rhs == ProductionRule::RhsKind::RowSlotMarker) id = i;
            node.rule = id;
            assignment.push_back(z.leaf);
            return node;
        }
        case Program::Kind::ColumnLeaf: {
            K want = produced_kind(z);
            int id = -1;
            for (int i = 0; i < inv.size(); ++i)
                if (inv.rule(i).rhs == ProductionRule::RhsKind::ColSlotMarker &&
                    inv.rule(i).lhs.kind == want)
                    id = i;
            node.rule = id;
            assignment.push_back(z.leaf);
            return node;
        }
        case Program::Kind::Call: {
            std::vector<K> argk;
            for (const auto& a : z.args) argk.push_back(produced_kind(a));
            // match the unique signature rule
            for (int i = 0; i < inv.size(); ++i) {
                const ProductionRule& r = inv.rule(i);
                if (r.rhs != ProductionRule::RhsKind::Function || r.function != z.func)
                    continue;
                if (r.children.size() != argk.size()) continue;
                bool ok = true;
                for (size_t j = 0; j < argk.size(); ++j)
                    if (!type_assignable(r.children[j], BasicType::simple(argk[j]))) {
                        ok = false;
                        break;
                    }
                if (!ok) continue;
                Derivation::Node inner;
                inner.rule = i;
                for (const auto& a : z.args)
                    inner.children.push_back(abstract_node(inv, a, assignment));
                if (r.lhs.kind != K::Func) return inner;
                // split mode: wrap in the matching expansion rule
                for (int e = 0; e < inv.size(); ++e) {
                    const ProductionRule& er = inv.rule(e);
                    if (er.rhs == ProductionRule::RhsKind::FuncExpansion &&
                        er.children[0] == r.lhs) {
                        node.rule = e;
                        node.children.push_back(std::move(inner));
                        return node;
                    }
                }
                fail("missing expansion rule for %s", r.lhs.print().c_str());
            }
            fail("no rule matches call to %s", func_name(z.func));
        }
    }
    fail("unreachable program kind");
}

}  // namespace

std::pair<AbstractProgram, std::vector<Candidate>> abstract_of(const RuleInventory& inv,
                                                               const Program& z) {
    K root_kind = produced_kind(z);
    int root_rule = -1;
    for (int i = 0; i < inv.size(); ++i) {
        const ProductionRule& r = inv.rule(i);
        if (r.rhs == ProductionRule::RhsKind::ReturnType && r.children[0].kind == root_kind)
            root_rule = i;
    }
    if (root_rule < 0)
        fail("program of type %s has no root rule (row-typed programs have no "
             "abstract form)", basic_kind_name(root_kind));
    std::vector<Candidate> assignment;
    Derivation d;
    d.root.rule = root_rule;
    d.root.children.push_back(abstract_node(inv, z, assignment));
    return {abstract_from_derivation(inv, d), std::move(assignment)};
}

}  // namespace tabsem
