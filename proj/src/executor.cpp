#include "tabsem/executor.hpp"

#include <algorithm>

namespace tabsem {

const char* exec_error_name(ExecError::Kind k) {
    switch (k) {
        case ExecError::Kind::EmptyRows: return "empty-rows";
        case ExecError::Kind::IndexOutOfRange: return "index-out-of-range";
        case ExecError::Kind::TypeError: return "type-error";
        case ExecError::Kind::EmptyDenotation: return "empty-denotation";
    }
    return "?";
}

bool condition_matches(const CellValue& cell, CmpOp op, const CellValue& ref) {
    if (cell.type() != ref.type()) return false;
    if (cell.is_text()) return op == CmpOp::Eq && iequals(cell.as_text(), ref.as_text());
    auto cmp = value_compare(cell, ref);
    if (!cmp) return false;
    switch (op) {
        case CmpOp::Gt: return *cmp > 0;
        case CmpOp::Lt: return *cmp < 0;
        case CmpOp::Eq: return *cmp == 0;
        case CmpOp::Ge: return *cmp >= 0;
        case CmpOp::Le: return *cmp <= 0;
    }
    return false;
}

std::vector<int> filter_rows(const Table& t, const Candidate& cand) {
    std::vector<int> rows;
    if (cand.kind == Candidate::Kind::AllRows) {
        rows.resize(t.n_rows);
        for (size_t r = 0; r < t.n_rows; ++r) rows[r] = static_cast<int>(r);
        return rows;
    }
    if (cand.kind != Candidate::Kind::RowFilter) fail("filter_rows needs a row candidate");
    const bool all_of = cand.connective != Connective::Or;
    for (size_t r = 0; r < t.n_rows; ++r) {
        bool keep = all_of;
        for (const auto& c : cand.conditions) {
            bool m = false;
            if (c.column >= 0 && c.column < static_cast<int>(t.columns.size()))
                m = condition_matches(t.columns[static_cast<size_t>(c.column)].cells[r],
                                      c.op, c.value);
            if (all_of) {
                keep = keep && m;
                if (!keep) break;
            } else {
                keep = keep || m;
                if (keep) break;
            }
        }
        if (keep) rows.push_back(static_cast<int>(r));
    }
    return rows;
}

namespace {

struct EvalValue {
    bool is_rows = false;
    std::vector<int> rows;
    std::vector<CellValue> values;
};

struct Evaluator {
    const Table& t;
    std::optional<ExecError> error;
    const RowProvider* row_provider = nullptr;

    EvalValue bail(ExecError::Kind kind, const std::string& locus) {
        if (!error) error = ExecError{kind, locus};
        return EvalValue{};
    }

    EvalValue eval(const Program& z, const std::string& locus) {
        if (error) return EvalValue{};
        switch (z.kind) {
            case Program::Kind::RowLeaf: {
                EvalValue v;
                v.is_rows = true;
                if (row_provider) {
                    if (const std::vector<int>* rows = row_provider->rows_for(z.leaf)) {
                        v.rows = *rows;
                        return v;
                    }
                }
                v.rows = filter_rows(t, z.leaf);
                return v;
            }
            case Program::Kind::ColumnLeaf:
                // handled by the parent call; a bare column has no value
                return bail(ExecError::Kind::TypeError, locus);
            case Program::Kind::Call: return eval_call(z, locus);
        }
        return bail(ExecError::Kind::TypeError, locus);
    }

    // column argument helper: index of a column arg or -1
    int column_arg(const Program& z, size_t i) {
        if (i >= z.args.size()) return -1;
        const Program& a = z.args[i];
        if (a.kind != Program::Kind::ColumnLeaf) return -1;
        int c = a.leaf.column;
        if (c < 0 || c >= static_cast<int>(t.columns.size())) return -1;
        return c;
    }

    EvalValue rows_arg(const Program& z, size_t i, const std::string& locus) {
        EvalValue v = eval(z.args[i], locus + ".arg" + std::to_string(i));
        if (error) return EvalValue{};
        if (!v.is_rows) return bail(ExecError::Kind::TypeError, locus);
        return v;
    }

    EvalValue eval_call(const Program& z, const std::string& locus) {
        const std::string here =
            locus.empty() ? func_name(z.func) : locus + "." + func_name(z.func);
        switch (z.func) {
            case Func::Select: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                int c = column_arg(z, 1);
                if (c < 0) return bail(ExecError::Kind::TypeError, here);
                if (rows.rows.empty()) return bail(ExecError::Kind::EmptyDenotation, here);
                EvalValue out;
                for (int r : rows.rows)
                    out.values.push_back(t.columns[static_cast<size_t>(c)]
                                             .cells[static_cast<size_t>(r)]);
                return out;
            }
            case Func::ArgMax:
            case Func::ArgMin: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                int c = column_arg(z, 1);
                if (c < 0) return bail(ExecError::Kind::TypeError, here);
                if (rows.rows.empty()) return bail(ExecError::Kind::EmptyRows, here);
                const Column& col = t.columns[static_cast<size_t>(c)];
                if (col.ctype == ColType::String)
                    return bail(ExecError::Kind::TypeError, here);
                const bool want_max = z.func == Func::ArgMax;
                int best = rows.rows[0];
                for (int r : rows.rows) {
                    auto cmp = value_compare(col.cells[static_cast<size_t>(r)],
                                             col.cells[static_cast<size_t>(best)]);
                    if (!cmp) return bail(ExecError::Kind::TypeError, here);
                    if ((want_max && *cmp > 0) || (!want_max && *cmp < 0)) best = r;
                }
                EvalValue out;
                out.is_rows = true;
                for (int r : rows.rows) {
                    auto cmp = value_compare(col.cells[static_cast<size_t>(r)],
                                             col.cells[static_cast<size_t>(best)]);
                    if (cmp && *cmp == 0) out.rows.push_back(r);  // keep all ties
                }
                return out;
            }
            case Func::First:
            case Func::Last: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                if (rows.rows.empty()) return bail(ExecError::Kind::EmptyRows, here);
                EvalValue out;
                out.is_rows = true;
                out.rows.push_back(z.func == Func::First ? rows.rows.front()
                                                         : rows.rows.back());
                return out;
            }
            case Func::Previous:
            case Func::Next: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                if (rows.rows.empty()) return bail(ExecError::Kind::EmptyRows, here);
                const int delta = z.func == Func::Previous ? -1 : 1;
                EvalValue out;
                out.is_rows = true;
                for (int r : rows.rows) {
                    int shifted = r + delta;  // original table order
                    if (shifted < 0 || shifted >= static_cast<int>(t.n_rows))
                        return bail(ExecError::Kind::IndexOutOfRange, here);
                    out.rows.push_back(shifted);
                }
                return out;
            }
            case Func::Count: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                EvalValue out;
                out.values.push_back(
                    CellValue::number(static_cast<double>(rows.rows.size())));
                return out;
            }
            case Func::Max:
            case Func::Min:
            case Func::Sum:
            case Func::Average: {
                EvalValue rows = rows_arg(z, 0, here);
                if (error) return EvalValue{};
                int c = column_arg(z, 1);
                if (c < 0) return bail(ExecError::Kind::TypeError, here);
                const Column& col = t.columns[static_cast<size_t>(c)];
                if (col.ctype != ColType::Number)
                    return bail(ExecError::Kind::TypeError, here);
                if (rows.rows.empty()) return bail(ExecError::Kind::EmptyRows, here);
                double acc = z.func == Func::Min ? HUGE_VAL
                             : z.func == Func::Max ? -HUGE_VAL
                                                   : 0.0;
                for (int r : rows.rows) {
                    double x = col.cells[static_cast<size_t>(r)].as_number();
                    switch (z.func) {
                        case Func::Max: acc = std::max(acc, x); break;
                        case Func::Min: acc = std::min(acc, x); break;
                        default: acc += x; break;
                    }
                }
                if (z.func == Func::Average) acc /= static_cast<double>(rows.rows.size());
                EvalValue out;
                out.values.push_back(CellValue::number(acc));
                return out;
            }
            case Func::Diff: {
                double ops[2];
                for (size_t i = 0; i < 2; ++i) {
                    if (i >= z.args.size()) return bail(ExecError::Kind::TypeError, here);
                    EvalValue v = eval(z.args[i], here + ".arg" + std::to_string(i));
                    if (error) return EvalValue{};
                    if (v.is_rows || v.values.size() != 1 || !v.values[0].is_number())
                        return bail(ExecError::Kind::TypeError, here);
                    ops[i] = v.values[0].as_number();
                }
                EvalValue out;
                out.values.push_back(CellValue::number(ops[0] - ops[1]));
                return out;
            }
        }
        return bail(ExecError::Kind::TypeError, here);
    }
};

}  // namespace

ExecResult execute(const Program& z, const Table& t, const RowProvider* rows) {
    Evaluator ev{t, std::nullopt, rows};
    EvalValue v = ev.eval(z, "");
    if (ev.error) return *ev.error;
    if (v.is_rows)
        return ExecError{ExecError::Kind::TypeError,
                         "root: row-typed program has no denotation"};
    return Denotation{std::move(v.values)};
}

// --- typecheck ---------------------------------------------------------------

namespace {

struct TypeChecker {
    const Table& t;
    TypecheckResult result;

    void bad(const std::string& msg) {
        if (result.ok) {
            result.ok = false;
            result.diagnostic = msg;
        }
    }

    bool check_column_ref(int col, const std::string& name, ColType claimed,
                          const std::string& where) {
        if (col < 0 || col >= static_cast<int>(t.columns.size())) {
            bad(format("%s: column index %d out of range", where.c_str(), col));
            return false;
        }
        const Column& c = t.columns[static_cast<size_t>(col)];
        if (c.name() != name) {
            bad(format("%s: column %d is named '%s', not '%s'", where.c_str(), col,
                       c.name().c_str(), name.c_str()));
            return false;
        }
        if (c.ctype != claimed) {
            bad(format("%s: column '%s' has type %s, not %s", where.c_str(), name.c_str(),
                       col_type_name(c.ctype), col_type_name(claimed)));
            return false;
        }
        return true;
    }

    // returns the produced kind name for signature matching; "" on failure
    std::string check(const Program& z, const std::string& where) {
        switch (z.kind) {
            case Program::Kind::RowLeaf: {
                const Candidate& c = z.leaf;
                if (c.kind == Candidate::Kind::RowFilter) {
                    if (c.conditions.empty()) bad(where + ": empty filter");
                    if ((c.conditions.size() == 1) != (c.connective == Connective::None))
                        bad(where + ": connective/arity mismatch");
                    for (const auto& cond : c.conditions) {
                        if (!check_column_ref(cond.column, cond.column_name,
                                              cond.value.type(), where + ".cond"))
                            return "";
                        if (cond.value.is_text() && cond.op != CmpOp::Eq)
                            bad(where + ": string condition must use eq");
                    }
                }
                return "rows";
            }
            case Program::Kind::ColumnLeaf: {
                if (!check_column_ref(z.leaf.column, z.leaf.column_name, z.leaf.col_type,
                                      where))
                    return "";
                switch (z.leaf.col_type) {
                    case ColType::String: return "col_s";
                    case ColType::Number: return "col_n";
                    case ColType::Date: return "col_d";
                }
                return "";
            }
            case Program::Kind::Call: {
                const std::string here = where.empty()
                                             ? func_name(z.func)
                                             : where + "." + func_name(z.func);
                std::vector<std::string> kinds;
                for (size_t i = 0; i < z.args.size(); ++i) {
                    kinds.push_back(check(z.args[i], here));
                    if (!result.ok) return "";
                }
                auto expect = [&](std::initializer_list<const char*> want) {
                    if (kinds.size() != want.size()) {
                        bad(format("%s: expects %zu arguments, got %zu", here.c_str(),
                                   want.size(), kinds.size()));
                        return false;
                    }
                    size_t i = 0;
                    for (const char* w : want) {
                        if (kinds[i] != w) {
                            bad(format("%s: argument %zu has wrong type", here.c_str(), i));
                            return false;
                        }
                        ++i;
                    }
                    return true;
                };
                switch (z.func) {
                    case Func::Select: {
                        if (kinds.size() == 2 && kinds[0] == "rows" &&
                            (kinds[1] == "col_s" || kinds[1] == "col_n" || kinds[1] == "col_d")) {
                            return kinds[1] == "col_s"   ? "string"
                                   : kinds[1] == "col_n" ? "number"
                                                         : "date";
                        }
                        bad(here + ": expects (rows, column)");
                        return "";
                    }
                    case Func::ArgMax:
                    case Func::ArgMin:
                        if (kinds.size() == 2 && kinds[0] == "rows" &&
                            (kinds[1] == "col_n" || kinds[1] == "col_d"))
                            return "rows";
                        bad(here + ": expects (rows, number/date column)");
                        return "";
                    case Func::First:
                    case Func::Last:
                    case Func::Previous:
                    case Func::Next:
                        return expect({"rows"}) ? "rows" : "";
                    case Func::Count: return expect({"rows"}) ? "number" : "";
                    case Func::Max:
                    case Func::Min:
                    case Func::Sum:
                    case Func::Average:
                        return expect({"rows", "col_n"}) ? "number" : "";
                    case Func::Diff: return expect({"number", "number"}) ? "number" : "";
                }
                return "";
            }
        }
        return "";
    }
};

}  // namespace

TypecheckResult typecheck(const Program& z, const Table& t) {
    TypeChecker tc{t, {}};
    tc.check(z, "");
    return tc.result;
}

}  // namespace tabsem
