#include "pushq/sql_eval.hpp"

#include <algorithm>
#include <cmath>

namespace pushq {

namespace {

bool to_bool(const Value& v) {
    if (v.is_null()) return false;
    if (v.kind() == Value::Kind::Bool) return v.as_bool();
    throw TypeError("expected a boolean condition");
}

Value arith(BinOp op, const Value& l, const Value& r) {
    if (l.is_null() || r.is_null()) return Value::null();
    if (op == BinOp::Mod) {
        if (l.kind() != Value::Kind::Int || r.kind() != Value::Kind::Int)
            throw TypeError("MOD is defined for integers only");
        int64_t d = r.as_int();
        if (d == 0) throw TypeError("MOD by zero");
        return Value::integer(l.as_int() % d);
    }
    if (!l.is_numeric() || !r.is_numeric())
        throw TypeError("arithmetic requires numeric operands");
    if (l.kind() == Value::Kind::Int && r.kind() == Value::Kind::Int) {
        int64_t a = l.as_int(), b = r.as_int();
        switch (op) {
            case BinOp::Add: return Value::integer(wrap_add(a, b));
            case BinOp::Sub: return Value::integer(wrap_sub(a, b));
            case BinOp::Mul: return Value::integer(wrap_mul(a, b));
            default: break;
        }
    }
    double a = l.as_double(), b = r.as_double();
    switch (op) {
        case BinOp::Add: return Value::real(a + b);
        case BinOp::Sub: return Value::real(a - b);
        case BinOp::Mul: return Value::real(a * b);
        default: break;
    }
    throw TypeError("unsupported arithmetic operator");
}

Value compare(BinOp op, const Value& l, const Value& r) {
    // Any comparison touching null is false (documented dialect choice).
    if (l.is_null() || r.is_null()) return Value::boolean(false);
    int cmp;
    if (l.kind() == Value::Kind::Text && r.kind() == Value::Kind::Text) {
        cmp = l.as_text().compare(r.as_text());
        cmp = cmp < 0 ? -1 : cmp > 0 ? 1 : 0;
    } else if (l.is_numeric() && r.is_numeric()) {
        if (l.kind() == Value::Kind::Int && r.kind() == Value::Kind::Int) {
            int64_t a = l.as_int(), b = r.as_int();
            cmp = a < b ? -1 : a > b ? 1 : 0;
        } else {
            double a = l.as_double(), b = r.as_double();
            cmp = a < b ? -1 : a > b ? 1 : 0;
        }
    } else if (l.kind() == Value::Kind::Bool && r.kind() == Value::Kind::Bool &&
               (op == BinOp::Eq || op == BinOp::Ne)) {
        cmp = l.as_bool() == r.as_bool() ? 0 : 1;
    } else {
        throw TypeError("comparison between text and numeric values requires a CAST");
    }
    switch (op) {
        case BinOp::Eq: return Value::boolean(cmp == 0);
        case BinOp::Ne: return Value::boolean(cmp != 0);
        case BinOp::Lt: return Value::boolean(cmp < 0);
        case BinOp::Le: return Value::boolean(cmp <= 0);
        case BinOp::Gt: return Value::boolean(cmp > 0);
        case BinOp::Ge: return Value::boolean(cmp >= 0);
        default: break;
    }
    throw TypeError("unsupported comparison operator");
}

Value cast_value(CastType to, const Value& v) {
    if (v.is_null()) return Value::null();
    if (to == CastType::Int) {
        switch (v.kind()) {
            case Value::Kind::Int: return v;
            case Value::Kind::Float: {
                double d = v.as_float();
                if (!std::isfinite(d) || d >= 9.3e18 || d <= -9.3e18)
                    throw TypeError("value out of range for INT");
                return Value::integer(static_cast<int64_t>(d));
            }
            case Value::Kind::Text: {
                int64_t out;
                if (!parse_int64(v.as_text(), out))
                    throw TypeError("cannot CAST '" + v.as_text() + "' AS INT");
                return Value::integer(out);
            }
            default: throw TypeError("cannot CAST this value AS INT");
        }
    }
    switch (v.kind()) {
        case Value::Kind::Int: return Value::real(static_cast<double>(v.as_int()));
        case Value::Kind::Float: return v;
        case Value::Kind::Text: {
            double out;
            if (!parse_double(v.as_text(), out))
                throw TypeError("cannot CAST '" + v.as_text() + "' AS DECIMAL");
            return Value::real(out);
        }
        default: throw TypeError("cannot CAST this value AS DECIMAL");
    }
}

Value substring(std::string_view s, const Value& start, const Value& len) {
    if (start.is_null() || len.is_null()) return Value::null();
    if (start.kind() != Value::Kind::Int || len.kind() != Value::Kind::Int)
        throw TypeError("SUBSTRING start and length must be integers");
    int64_t n = len.as_int();
    if (n < 0) throw TypeError("SUBSTRING length must be non-negative");
    // 1-based window [start, start+len) clipped to the string.
    int64_t lo = std::max<int64_t>(start.as_int(), 1);
    int64_t hi_excl = start.as_int() + n;  // may be < lo
    int64_t size = static_cast<int64_t>(s.size());
    lo = std::min(lo, size + 1);
    hi_excl = std::clamp<int64_t>(hi_excl, lo, size + 1);
    return Value::text(std::string(s.substr(static_cast<std::size_t>(lo - 1),
                                            static_cast<std::size_t>(hi_excl - lo))));
}

Value column_value(int64_t ordinal1, std::span<const Value> row) {
    if (ordinal1 < 1 || static_cast<std::size_t>(ordinal1) > row.size())
        throw ColumnOutOfRange("column _" + std::to_string(ordinal1) + " is out of range (row has " +
                               std::to_string(row.size()) + " fields)");
    return row[static_cast<std::size_t>(ordinal1 - 1)];
}

int64_t resolve_name(const std::string& name, const ColumnMap* names) {
    if (names) {
        for (std::size_t i = 0; i < names->size(); ++i)
            if ((*names)[i] == name) return static_cast<int64_t>(i + 1);
    }
    throw ColumnOutOfRange("unknown column " + name);
}

}  // namespace

Expr bind_columns(const Expr& e, const ColumnMap* names) {
    if (e.kind == Expr::Kind::ColumnName) return Expr::ordinal(resolve_name(e.text, names));
    Expr out = e;
    for (auto& kid : out.kids) kid = bind_columns(kid, names);
    return out;
}

SelectQuery bind_columns(const SelectQuery& q, const ColumnMap* names) {
    SelectQuery out;
    out.projections.reserve(q.projections.size());
    for (const auto& p : q.projections) out.projections.push_back(bind_columns(p, names));
    if (q.where) out.where = bind_columns(*q.where, names);
    return out;
}

Value eval_expr(const Expr& e, std::span<const Value> row, const ColumnMap* names) {
    switch (e.kind) {
        case Expr::Kind::ColumnName: return column_value(resolve_name(e.text, names), row);
        case Expr::Kind::ColumnOrdinal: return column_value(e.ival, row);
        case Expr::Kind::LitText: return Value::text(e.text);
        case Expr::Kind::LitInt: return Value::integer(e.ival);
        case Expr::Kind::LitFloat: return Value::real(e.fval);
        case Expr::Kind::Binary: {
            if (e.op == BinOp::And) {
                if (!to_bool(eval_expr(e.kids[0], row, names))) return Value::boolean(false);
                return Value::boolean(to_bool(eval_expr(e.kids[1], row, names)));
            }
            if (e.op == BinOp::Or) {
                if (to_bool(eval_expr(e.kids[0], row, names))) return Value::boolean(true);
                return Value::boolean(to_bool(eval_expr(e.kids[1], row, names)));
            }
            Value l = eval_expr(e.kids[0], row, names);
            Value r = eval_expr(e.kids[1], row, names);
            switch (e.op) {
                case BinOp::Add:
                case BinOp::Sub:
                case BinOp::Mul:
                case BinOp::Mod: return arith(e.op, l, r);
                default: return compare(e.op, l, r);
            }
        }
        case Expr::Kind::Not:
            return Value::boolean(!to_bool(eval_expr(e.kids[0], row, names)));
        case Expr::Kind::Cast: return cast_value(e.cast_to, eval_expr(e.kids[0], row, names));
        case Expr::Kind::Substring: {
            // Literal sources are read in place: Bloom predicates carry bit
            // strings of ~10^5 chars that must not be copied per row.
            if (e.kids[0].kind == Expr::Kind::LitText)
                return substring(e.kids[0].text, eval_expr(e.kids[1], row, names),
                                 eval_expr(e.kids[2], row, names));
            Value src = eval_expr(e.kids[0], row, names);
            if (src.is_null()) return Value::null();
            if (src.kind() != Value::Kind::Text) throw TypeError("SUBSTRING expects a string");
            return substring(src.as_text(), eval_expr(e.kids[1], row, names),
                             eval_expr(e.kids[2], row, names));
        }
        case Expr::Kind::Case:
            if (to_bool(eval_expr(e.kids[0], row, names))) return eval_expr(e.kids[1], row, names);
            if (e.kids.size() > 2) return eval_expr(e.kids[2], row, names);
            return Value::null();
        case Expr::Kind::Star: throw TypeError("* is not a scalar expression");
        case Expr::Kind::Agg: throw TypeError("aggregate in scalar context");
    }
    throw TypeError("unreachable expression kind");
}

std::optional<std::vector<Value>> evaluate_row(const SelectQuery& q, std::span<const Value> row,
                                               const ColumnMap* names) {
    if (q.is_aggregate()) throw TypeError("evaluate_row cannot run aggregate queries");
    if (q.where && !to_bool(eval_expr(*q.where, row, names))) return std::nullopt;
    std::vector<Value> out;
    if (q.is_star()) {
        out.assign(row.begin(), row.end());
        return out;
    }
    out.reserve(q.projections.size());
    for (const auto& p : q.projections) out.push_back(eval_expr(p, row, names));
    return out;
}

AggregateEvaluator::AggregateEvaluator(const SelectQuery& q, const ColumnMap* names)
    : query_(bind_columns(q, names)) {
    if (!query_.is_aggregate()) throw TypeError("not an aggregate query");
    slots_.resize(query_.projections.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const Expr& p = query_.projections[i];
        if (p.kind != Expr::Kind::Agg) throw TypeError("mixed aggregate projection list");
        slots_[i].func = p.agg;
    }
}

void AggregateEvaluator::feed(std::span<const Value> row) {
    if (query_.where && !to_bool(eval_expr(*query_.where, row))) return;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        Slot& s = slots_[i];
        const Expr& p = query_.projections[i];
        if (p.kids.empty()) {  // COUNT(*)
            ++s.count;
            continue;
        }
        Value v = eval_expr(p.kids[0], row);
        if (v.is_null()) continue;  // aggregates skip nulls
        switch (s.func) {
            case AggFunc::Count: ++s.count; break;
            case AggFunc::Sum:
            case AggFunc::Avg: {
                if (!v.is_numeric()) throw TypeError("SUM/AVG over a non-numeric value");
                ++s.count;
                if (!s.sum_is_float && v.kind() == Value::Kind::Int) {
                    s.sum_int = s.sum_int + v.as_int();
                } else {
                    if (!s.sum_is_float) {
                        s.sum_is_float = true;
                        s.sum_float = static_cast<double>(s.sum_int);
                    }
                    s.sum_float += v.as_double();
                }
                s.has_value = true;
                break;
            }
            case AggFunc::Min:
            case AggFunc::Max: {
                if (!s.has_value) {
                    s.extreme = v;
                    s.has_value = true;
                    break;
                }
                BinOp op = s.func == AggFunc::Min ? BinOp::Lt : BinOp::Gt;
                if (compare(op, v, s.extreme).as_bool()) s.extreme = v;
                break;
            }
        }
    }
}

void AggregateEvaluator::merge(const AggregateEvaluator& other) {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        Slot& a = slots_[i];
        const Slot& b = other.slots_[i];
        switch (a.func) {
            case AggFunc::Count: a.count += b.count; break;
            case AggFunc::Sum:
            case AggFunc::Avg:
                a.count += b.count;
                if (!a.sum_is_float && !b.sum_is_float) {
                    a.sum_int += b.sum_int;
                } else {
                    double bv = b.sum_is_float ? b.sum_float : static_cast<double>(b.sum_int);
                    if (!a.sum_is_float) {
                        a.sum_is_float = true;
                        a.sum_float = static_cast<double>(a.sum_int);
                    }
                    a.sum_float += bv;
                }
                a.has_value = a.has_value || b.has_value;
                break;
            case AggFunc::Min:
            case AggFunc::Max:
                if (b.has_value) {
                    if (!a.has_value) {
                        a.extreme = b.extreme;
                        a.has_value = true;
                    } else {
                        BinOp op = a.func == AggFunc::Min ? BinOp::Lt : BinOp::Gt;
                        if (compare(op, b.extreme, a.extreme).as_bool()) a.extreme = b.extreme;
                    }
                }
                break;
        }
    }
}

std::vector<Value> AggregateEvaluator::finish() const {
    std::vector<Value> out;
    out.reserve(slots_.size());
    for (const Slot& s : slots_) {
        switch (s.func) {
            case AggFunc::Count: out.push_back(Value::integer(s.count)); break;
            case AggFunc::Sum:
                // SUM over an empty stream is 0 by dialect definition.
                if (!s.has_value)
                    out.push_back(Value::integer(0));
                else if (s.sum_is_float)
                    out.push_back(Value::real(s.sum_float));
                else
                    out.push_back(Value::integer(s.sum_int));
                break;
            case AggFunc::Avg:
                if (s.count == 0)
                    out.push_back(Value::null());
                else
                    out.push_back(Value::real(
                        (s.sum_is_float ? s.sum_float : static_cast<double>(s.sum_int)) /
                        static_cast<double>(s.count)));
                break;
            case AggFunc::Min:
            case AggFunc::Max:
                out.push_back(s.has_value ? s.extreme : Value::null());
                break;
        }
    }
    return out;
}

std::vector<Value> evaluate_aggregate(const SelectQuery& q,
                                      const std::vector<std::vector<Value>>& rows,
                                      const ColumnMap* names) {
    AggregateEvaluator agg(q, names);
    for (const auto& row : rows) agg.feed(row);
    return agg.finish();
}

std::vector<Value> row_from_fields(std::span<const std::string_view> fields) {
    std::vector<Value> out;
    out.reserve(fields.size());
    for (auto f : fields) out.push_back(Value::text(std::string(f)));
    return out;
}

}  // namespace pushq
