#include "tabsem/program.hpp"

#include <algorithm>

namespace tabsem {

const char* func_name(Func f) {
    switch (f) {
        case Func::Select: return "select";
        case Func::ArgMax: return "argmax";
        case Func::ArgMin: return "argmin";
        case Func::First: return "first";
        case Func::Last: return "last";
        case Func::Previous: return "previous";
        case Func::Next: return "next";
        case Func::Count: return "count";
        case Func::Max: return "max";
        case Func::Min: return "min";
        case Func::Sum: return "sum";
        case Func::Average: return "average";
        case Func::Diff: return "diff";
    }
    return "?";
}

const char* cmp_op_name(CmpOp op) {
    switch (op) {
        case CmpOp::Gt: return "gt";
        case CmpOp::Lt: return "lt";
        case CmpOp::Eq: return "eq";
        case CmpOp::Ge: return "ge";
        case CmpOp::Le: return "le";
    }
    return "?";
}

std::string Condition::print() const {
    return format("%s(%s, col:%s)", cmp_op_name(op), print_cell(value).c_str(),
                  column_name.c_str());
}

Candidate Candidate::column_choice(int col, std::string name, ColType ctype) {
    Candidate c;
    c.kind = Kind::Column;
    c.column = col;
    c.column_name = std::move(name);
    c.col_type = ctype;
    return c;
}

Candidate Candidate::row_filter(std::vector<Condition> conds, Connective conn) {
    if (conds.empty()) fail("row filter needs at least one condition");
    if ((conds.size() == 1) != (conn == Connective::None))
        fail("connective must be None exactly for single conditions");
    std::sort(conds.begin(), conds.end(), [](const Condition& a, const Condition& b) {
        return a.print() < b.print();
    });
    Candidate c;
    c.kind = Kind::RowFilter;
    c.conditions = std::move(conds);
    c.connective = conn;
    return c;
}

std::string Candidate::print() const {
    switch (kind) {
        case Kind::AllRows: return "all_rows";
        case Kind::Column: return "col:" + column_name;
        case Kind::RowFilter: {
            // single conditions print under "and" as the canonical group form
            const char* group = connective == Connective::Or ? "or" : "and";
            std::vector<std::string> parts;
            parts.reserve(conditions.size());
            for (const auto& c : conditions) parts.push_back(c.print());
            return format("filter(all_rows, %s(%s))", group, join(parts, ", ").c_str());
        }
    }
    return "?";
}

Program Program::call(Func f, std::vector<Program> a) {
    Program p;
    p.kind = Kind::Call;
    p.func = f;
    p.args = std::move(a);
    return p;
}

Program Program::row_leaf(Candidate c) {
    if (!c.is_row_kind()) fail("row leaf requires a row candidate");
    Program p;
    p.kind = Kind::RowLeaf;
    p.leaf = std::move(c);
    return p;
}

Program Program::column_leaf(int col, std::string name, ColType ctype) {
    Program p;
    p.kind = Kind::ColumnLeaf;
    p.leaf = Candidate::column_choice(col, std::move(name), ctype);
    return p;
}

std::string Program::print() const {
    switch (kind) {
        case Kind::RowLeaf:
        case Kind::ColumnLeaf: return leaf.print();
        case Kind::Call: {
            std::vector<std::string> parts;
            parts.reserve(args.size());
            for (const auto& a : args) parts.push_back(a.print());
            return format("%s(%s)", func_name(func), join(parts, ", ").c_str());
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Parser for the prefix syntax. Grammar:
//   expr   := name '(' expr (',' expr)* ')' | 'all_rows' | 'col:' ident
//   filter := 'filter' '(' 'all_rows' ',' group ')'
//   group  := ('and'|'or') '(' cond (',' cond)* ')'
//   cond   := op '(' cell ',' 'col:' ident ')'      -- means: column <op> cell
//   cell   := ('s:'|'n:'|'d:') text
// ---------------------------------------------------------------------------

namespace {

struct Parser {
    std::string_view text;
    size_t pos = 0;
    const Table& table;

    [[noreturn]] void err(const std::string& what) const {
        fail_parse("program parse error at offset %zu: %s (in '%.*s')", pos, what.c_str(),
                   (int)text.size(), text.data());
    }

    void skip_ws() {
        while (pos < text.size() && text[pos] == ' ') ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!eat(c)) err(format("expected '%c'", c));
    }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && text[pos] != '(' && text[pos] != ')' &&
               text[pos] != ',' && text[pos] != ' ')
            ++pos;
        if (pos == start) err("expected identifier");
        return std::string(text.substr(start, pos - start));
    }

    // raw argument text up to the next ',' or ')' at depth 0 (cells may
    // contain spaces)
    std::string raw_arg() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && text[pos] != ',' && text[pos] != ')') ++pos;
        size_t end = pos;
        while (end > start && text[end - 1] == ' ') --end;
        if (end == start) err("expected value");
        return std::string(text.substr(start, end - start));
    }

    int column_of(const std::string& name) {
        int idx = table.column_index(name);
        if (idx < 0) err(format("unknown column '%s' in table %s", name.c_str(),
                                table.id.c_str()));
        return idx;
    }

    Condition parse_condition(const std::string& opname) {
        CmpOp op;
        if (opname == "gt") op = CmpOp::Gt;
        else if (opname == "lt") op = CmpOp::Lt;
        else if (opname == "eq") op = CmpOp::Eq;
        else if (opname == "ge") op = CmpOp::Ge;
        else if (opname == "le") op = CmpOp::Le;
        else err(format("unknown condition operator '%s'", opname.c_str()));
        expect('(');
        CellValue v = parse_cell(raw_arg());
        expect(',');
        std::string colref = ident();
        if (colref.rfind("col:", 0) != 0) err("condition expects col:<name>");
        std::string cname = colref.substr(4);
        int col = column_of(cname);
        expect(')');
        if (table.columns[col].ctype == ColType::String && op != CmpOp::Eq)
            err("string columns admit eq only");
        if (v.type() != table.columns[col].ctype)
            err(format("condition value type %s does not match column '%s' of type %s",
                       col_type_name(v.type()), cname.c_str(),
                       col_type_name(table.columns[col].ctype)));
        Condition c;
        c.column = col;
        c.column_name = cname;
        c.op = op;
        c.value = v;
        return c;
    }

    Candidate parse_group() {
        std::string g = ident();
        Connective conn;
        if (g == "and") conn = Connective::And;
        else if (g == "or") conn = Connective::Or;
        else err(format("expected and(...)/or(...), got '%s'", g.c_str()));
        expect('(');
        std::vector<Condition> conds;
        while (true) {
            conds.push_back(parse_condition(ident()));
            if (!eat(',')) break;
        }
        expect(')');
        if (conds.size() == 1) conn = Connective::None;
        return Candidate::row_filter(std::move(conds), conn);
    }

    Program parse_expr() {
        skip_ws();
        if (text.compare(pos, 4, "col:") == 0) {
            std::string colref = ident();
            std::string cname = colref.substr(4);
            int col = column_of(cname);
            return Program::column_leaf(col, cname, table.columns[col].ctype);
        }
        std::string name = ident();
        if (name == "all_rows") return Program::row_leaf(Candidate::all_rows());
        if (name == "filter") {
            expect('(');
            std::string base = ident();
            if (base != "all_rows") err("filter expects all_rows as first argument");
            expect(',');
            Candidate c = parse_group();
            expect(')');
            return Program::row_leaf(std::move(c));
        }
        for (Func f : {Func::Select, Func::ArgMax, Func::ArgMin, Func::First, Func::Last,
                       Func::Previous, Func::Next, Func::Count, Func::Max, Func::Min,
                       Func::Sum, Func::Average, Func::Diff}) {
            if (name == func_name(f)) {
                expect('(');
                std::vector<Program> args;
                while (true) {
                    args.push_back(parse_expr());
                    if (!eat(',')) break;
                }
                expect(')');
                return Program::call(f, std::move(args));
            }
        }
        err(format("unknown function '%s'", name.c_str()));
    }
};

}  // namespace

Program parse_program(std::string_view text, const Table& table) {
    Parser p{text, 0, table};
    Program prog = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.err("trailing characters after program");
    return prog;
}

}  // namespace tabsem
