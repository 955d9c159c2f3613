#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushq/common.hpp"
#include "pushq/value.hpp"

namespace pushq {

enum class BinOp : uint8_t { Add, Sub, Mul, Mod, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class CastType : uint8_t { Int, Decimal };
enum class AggFunc : uint8_t { Sum, Min, Max, Count, Avg };

const char* to_string(BinOp op);
const char* to_string(AggFunc f);

// Expression tree of the restricted dialect. A regular value type: children
// live in `kids`, scalar payloads in the fields below. Structural equality
// via operator==.
struct Expr {
    enum class Kind : uint8_t {
        ColumnName,   // text = name
        ColumnOrdinal,  // ival = 1-based ordinal (_N form)
        LitText,      // text
        LitInt,       // ival
        LitFloat,     // fval
        Binary,       // op, kids = {lhs, rhs}
        Not,          // kids = {operand}
        Cast,         // cast_to, kids = {operand}
        Substring,    // kids = {string, start, length}
        Case,         // kids = {when, then[, else]}
        Star,         // projection-only
        Agg,          // agg, kids = {arg} or empty for COUNT(*)
    };

    Kind kind = Kind::LitInt;
    BinOp op = BinOp::Add;
    CastType cast_to = CastType::Int;
    AggFunc agg = AggFunc::Count;
    std::string text;
    int64_t ival = 0;
    double fval = 0.0;
    std::vector<Expr> kids;

    bool operator==(const Expr&) const = default;

    static Expr column(std::string name);
    static Expr ordinal(int64_t n);
    static Expr lit(std::string s);
    static Expr lit(int64_t i);
    static Expr lit(double d);
    static Expr binary(BinOp op, Expr lhs, Expr rhs);
    static Expr negate(Expr inner);  // boolean NOT
    static Expr cast(CastType to, Expr inner);
    static Expr substring(Expr str, Expr start, Expr len);
    static Expr case_when(Expr when, Expr then, std::optional<Expr> otherwise = std::nullopt);
    static Expr star();
    static Expr aggregate(AggFunc f, std::optional<Expr> arg);
};

// AST of one accepted query: projections over the single table token
// "S3Object" with an optional WHERE. Aggregates appear only as whole
// projection slots and never alongside plain projections.
struct SelectQuery {
    std::vector<Expr> projections;
    std::optional<Expr> where;

    bool operator==(const SelectQuery&) const = default;

    bool is_aggregate() const {
        return !projections.empty() && projections.front().kind == Expr::Kind::Agg;
    }
    bool is_star() const {
        return projections.size() == 1 && projections.front().kind == Expr::Kind::Star;
    }
};

// Printers. render_sql(parse(text)) is the canonical form of `text`;
// parse(render_sql(q)) reproduces q exactly.
std::string render_expr(const Expr& e);
std::string render_sql(const SelectQuery& q);

// Replaces every column reference (name or ordinal) for which `from` matches
// with a copy of `to`. Used to retarget predicates at index tables.
Expr rewrite_columns(const Expr& e, const std::string& from, const Expr& to);

// Column names referenced anywhere in the expression (names only, deduped).
std::vector<std::string> referenced_columns(const Expr& e);

}  // namespace pushq
