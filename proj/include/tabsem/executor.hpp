#pragma once

#include <variant>

#include "tabsem/program.hpp"
#include "tabsem/question.hpp"

namespace tabsem {

struct ExecError {
    enum class Kind : uint8_t { EmptyRows, IndexOutOfRange, TypeError, EmptyDenotation };
    Kind kind = Kind::TypeError;
    std::string locus;  // node path, e.g. "select.arg0.argmax"
};

const char* exec_error_name(ExecError::Kind k);

using ExecResult = std::variant<Denotation, ExecError>;

inline bool exec_ok(const ExecResult& r) { return std::holds_alternative<Denotation>(r); }
inline const Denotation& exec_denotation(const ExecResult& r) { return std::get<Denotation>(r); }
inline const ExecError& exec_error(const ExecResult& r) { return std::get<ExecError>(r); }

// Supplies precomputed row sets for row-leaf candidates during search, which
// evaluates the same filters many times. Returning nullptr falls back to
// filter_rows; results must be identical either way.
class RowProvider {
public:
    virtual ~RowProvider() = default;
    virtual const std::vector<int>* rows_for(const Candidate& cand) const = 0;
};

// Deterministic evaluation; never mutates inputs. Row lists stay in original
// table order, superlatives keep all ties, previous/next shift every row.
ExecResult execute(const Program& z, const Table& t, const RowProvider* rows = nullptr);

struct TypecheckResult {
    bool ok = true;
    std::string diagnostic;
};

// Structural validity against a table: argument types match a signature,
// column indices/names/types agree with the table, condition values match
// their column types.
TypecheckResult typecheck(const Program& z, const Table& t);

// Row selection for a row candidate: all indices for all_rows, otherwise the
// rows satisfying the filter (AND = all conditions, OR = any). A condition
// over a mismatched value/cell type pair is false for that row.
std::vector<int> filter_rows(const Table& t, const Candidate& cand);

bool condition_matches(const CellValue& cell, CmpOp op, const CellValue& ref);

}  // namespace tabsem
