#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pushq/sql_ast.hpp"
#include "pushq/value.hpp"

namespace pushq {

// Header names in CSV order; position = 0-based field index.
using ColumnMap = std::vector<std::string>;

// Resolves every ColumnName reference to its 0-based position as a
// ColumnOrdinal (stored 1-based). Throws ColumnOutOfRange for unknown names
// or when `names` is null and a name reference exists.
Expr bind_columns(const Expr& e, const ColumnMap* names);
SelectQuery bind_columns(const SelectQuery& q, const ColumnMap* names);

// Evaluates one scalar expression against a row. Semantics of the dialect:
//   - any comparison with a null operand is false
//   - boolean contexts coerce null to false; text/numeric there is an error
//   - text and numeric values never compare without an explicit CAST
//   - MOD is integer-only with truncated-division semantics
//   - integer overflow wraps (two's complement), matching the renderer's
//     expectations for hash arithmetic
Value eval_expr(const Expr& e, std::span<const Value> row, const ColumnMap* names = nullptr);

// Row filter + projection for non-aggregate queries. Returns the projected
// values when WHERE is absent or true, nothing otherwise.
std::optional<std::vector<Value>> evaluate_row(const SelectQuery& q, std::span<const Value> row,
                                               const ColumnMap* names = nullptr);

// Streaming aggregate evaluation. Feed rows (the WHERE clause is applied
// internally), then finish() yields the single output row. Accumulators
// merge in feed order, so chunked and serial evaluation agree exactly.
class AggregateEvaluator {
  public:
    AggregateEvaluator(const SelectQuery& q, const ColumnMap* names = nullptr);

    void feed(std::span<const Value> row);
    std::vector<Value> finish() const;
    void merge(const AggregateEvaluator& other);

  private:
    struct Slot {
        AggFunc func;
        bool has_value = false;
        bool sum_is_float = false;
        int64_t sum_int = 0;
        double sum_float = 0.0;
        int64_t count = 0;
        Value extreme;  // MIN/MAX state
    };

    SelectQuery query_;
    std::vector<Slot> slots_;
};

// One-shot helper over a batch of rows.
std::vector<Value> evaluate_aggregate(const SelectQuery& q,
                                      const std::vector<std::vector<Value>>& rows,
                                      const ColumnMap* names = nullptr);

// Wraps raw CSV fields as text values.
std::vector<Value> row_from_fields(std::span<const std::string_view> fields);

}  // namespace pushq
