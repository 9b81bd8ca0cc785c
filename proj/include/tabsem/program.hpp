#pragma once

#include <string>
#include <vector>

#include "tabsem/table.hpp"

namespace tabsem {

// Function inventory of the program language. previous/next take a row list
// and shift every row by one position in the original table order, so they
// compose with tie-keeping argmax/argmin.
enum class Func : uint8_t {
    Select,
    ArgMax,
    ArgMin,
    First,
    Last,
    Previous,
    Next,
    Count,
    Max,
    Min,
    Sum,
    Average,
    Diff,
};

const char* func_name(Func f);

enum class CmpOp : uint8_t { Gt, Lt, Eq, Ge, Le };
const char* cmp_op_name(CmpOp op);  // gt lt eq ge le

// cell(column) <op> value; string columns admit Eq only.
struct Condition {
    int column = -1;
    std::string column_name;
    CmpOp op = CmpOp::Eq;
    CellValue value;

    std::string print() const;  // e.g. ge(n:2000, col:points)
};

enum class Connective : uint8_t { None, And, Or };

// Instantiation candidate for a slot: a column choice for column slots, or
// all_rows / a (possibly multi-condition) row filter for row slots.
struct Candidate {
    enum class Kind : uint8_t { Column, RowFilter, AllRows };

    Kind kind = Kind::AllRows;
    int column = -1;            // Kind::Column
    std::string column_name;    // Kind::Column
    ColType col_type = ColType::String;  // Kind::Column
    std::vector<Condition> conditions;  // Kind::RowFilter
    Connective connective = Connective::None;

    static Candidate all_rows() { return Candidate{}; }
    static Candidate column_choice(int col, std::string name, ColType ctype);
    // conditions are canonicalized (sorted by printed form)
    static Candidate row_filter(std::vector<Condition> conds, Connective conn);

    bool is_row_kind() const { return kind != Kind::Column; }
    std::string print() const;  // canonical text
};

// Fully instantiated executable program: an expression tree over the function
// inventory with row/column leaves.
struct Program {
    enum class Kind : uint8_t { Call, RowLeaf, ColumnLeaf };

    Kind kind = Kind::RowLeaf;
    Func func = Func::Select;    // Kind::Call
    std::vector<Program> args;   // Kind::Call
    Candidate leaf;              // RowLeaf (AllRows/RowFilter) or ColumnLeaf

    static Program call(Func f, std::vector<Program> args);
    static Program row_leaf(Candidate c);
    static Program column_leaf(int col, std::string name, ColType ctype);

    std::string print() const;  // prefix text, canonical
};

// Parses the prefix program syntax, resolving column names against the table.
// Throws ParseError with a character offset on malformed input.
Program parse_program(std::string_view text, const Table& table);

}  // namespace tabsem
