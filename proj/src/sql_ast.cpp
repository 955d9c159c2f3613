#include "pushq/sql_ast.hpp"

#include <algorithm>

namespace pushq {

const char* to_string(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Mod: return "MOD";
        case BinOp::Eq: return "=";
        case BinOp::Ne: return "<>";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::And: return "AND";
        case BinOp::Or: return "OR";
    }
    return "?";
}

const char* to_string(AggFunc f) {
    switch (f) {
        case AggFunc::Sum: return "SUM";
        case AggFunc::Min: return "MIN";
        case AggFunc::Max: return "MAX";
        case AggFunc::Count: return "COUNT";
        case AggFunc::Avg: return "AVG";
    }
    return "?";
}

Expr Expr::column(std::string name) {
    Expr e;
    e.kind = Kind::ColumnName;
    e.text = std::move(name);
    return e;
}
Expr Expr::ordinal(int64_t n) {
    Expr e;
    e.kind = Kind::ColumnOrdinal;
    e.ival = n;
    return e;
}
Expr Expr::lit(std::string s) {
    Expr e;
    e.kind = Kind::LitText;
    e.text = std::move(s);
    return e;
}
Expr Expr::lit(int64_t i) {
    Expr e;
    e.kind = Kind::LitInt;
    e.ival = i;
    return e;
}
Expr Expr::lit(double d) {
    Expr e;
    e.kind = Kind::LitFloat;
    e.fval = d;
    return e;
}
Expr Expr::binary(BinOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = Kind::Binary;
    e.op = op;
    e.kids.push_back(std::move(lhs));
    e.kids.push_back(std::move(rhs));
    return e;
}
Expr Expr::negate(Expr inner) {
    Expr e;
    e.kind = Kind::Not;
    e.kids.push_back(std::move(inner));
    return e;
}
Expr Expr::cast(CastType to, Expr inner) {
    Expr e;
    e.kind = Kind::Cast;
    e.cast_to = to;
    e.kids.push_back(std::move(inner));
    return e;
}
Expr Expr::substring(Expr str, Expr start, Expr len) {
    Expr e;
    e.kind = Kind::Substring;
    e.kids.push_back(std::move(str));
    e.kids.push_back(std::move(start));
    e.kids.push_back(std::move(len));
    return e;
}
Expr Expr::case_when(Expr when, Expr then, std::optional<Expr> otherwise) {
    Expr e;
    e.kind = Kind::Case;
    e.kids.push_back(std::move(when));
    e.kids.push_back(std::move(then));
    if (otherwise) e.kids.push_back(std::move(*otherwise));
    return e;
}
Expr Expr::star() {
    Expr e;
    e.kind = Kind::Star;
    return e;
}
Expr Expr::aggregate(AggFunc f, std::optional<Expr> arg) {
    Expr e;
    e.kind = Kind::Agg;
    e.agg = f;
    if (arg) e.kids.push_back(std::move(*arg));
    return e;
}

namespace {

void render_string_literal(std::string& out, const std::string& s) {
    out.push_back('\'');
    for (char c : s) {
        if (c == '\'') out.push_back('\'');
        out.push_back(c);
    }
    out.push_back('\'');
}

void render(std::string& out, const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::ColumnName: out += e.text; return;
        case Expr::Kind::ColumnOrdinal:
            out.push_back('_');
            out += std::to_string(e.ival);
            return;
        case Expr::Kind::LitText: render_string_literal(out, e.text); return;
        case Expr::Kind::LitInt: out += std::to_string(e.ival); return;
        case Expr::Kind::LitFloat: {
            // Keep the literal lexically a float so it re-parses as one.
            std::string s = format_double(e.fval);
            if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
                s.find('E') == std::string::npos)
                s += ".0";
            out += s;
            return;
        }
        case Expr::Kind::Binary:
            out.push_back('(');
            render(out, e.kids[0]);
            out.push_back(' ');
            out += to_string(e.op);
            out.push_back(' ');
            render(out, e.kids[1]);
            out.push_back(')');
            return;
        case Expr::Kind::Not:
            out += "(NOT ";
            render(out, e.kids[0]);
            out.push_back(')');
            return;
        case Expr::Kind::Cast:
            out += "CAST(";
            render(out, e.kids[0]);
            out += e.cast_to == CastType::Int ? " AS INT)" : " AS DECIMAL)";
            return;
        case Expr::Kind::Substring:
            out += "SUBSTRING(";
            render(out, e.kids[0]);
            out += ", ";
            render(out, e.kids[1]);
            out += ", ";
            render(out, e.kids[2]);
            out.push_back(')');
            return;
        case Expr::Kind::Case:
            out += "CASE WHEN ";
            render(out, e.kids[0]);
            out += " THEN ";
            render(out, e.kids[1]);
            if (e.kids.size() > 2) {
                out += " ELSE ";
                render(out, e.kids[2]);
            }
            out += " END";
            return;
        case Expr::Kind::Star: out.push_back('*'); return;
        case Expr::Kind::Agg:
            out += to_string(e.agg);
            out.push_back('(');
            if (e.kids.empty())
                out.push_back('*');
            else
                render(out, e.kids[0]);
            out.push_back(')');
            return;
    }
}

}  // namespace

std::string render_expr(const Expr& e) {
    std::string out;
    render(out, e);
    return out;
}

std::string render_sql(const SelectQuery& q) {
    std::string out = "SELECT ";
    for (std::size_t i = 0; i < q.projections.size(); ++i) {
        if (i) out += ", ";
        render(out, q.projections[i]);
    }
    out += " FROM S3Object";
    if (q.where) {
        out += " WHERE ";
        render(out, *q.where);
    }
    return out;
}

Expr rewrite_columns(const Expr& e, const std::string& from, const Expr& to) {
    if (e.kind == Expr::Kind::ColumnName && e.text == from) return to;
    Expr out = e;
    for (auto& kid : out.kids) kid = rewrite_columns(kid, from, to);
    return out;
}

namespace {
void collect_columns(const Expr& e, std::vector<std::string>& out) {
    if (e.kind == Expr::Kind::ColumnName) {
        if (std::find(out.begin(), out.end(), e.text) == out.end()) out.push_back(e.text);
    }
    for (const auto& kid : e.kids) collect_columns(kid, out);
}
}  // namespace

std::vector<std::string> referenced_columns(const Expr& e) {
    std::vector<std::string> out;
    collect_columns(e, out);
    return out;
}

}  // namespace pushq
