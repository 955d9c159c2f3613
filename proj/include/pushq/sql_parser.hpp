#pragma once

#include <string_view>

#include "pushq/sql_ast.hpp"

namespace pushq {

// Parses one query of the restricted dialect:
//
//   SELECT <projections> FROM S3Object [WHERE <expr>]
//
// Projections are expressions, `*`, or top-level aggregates (SUM, MIN, MAX,
// COUNT, AVG) — aggregates never nest and never mix with plain projections.
// GROUP BY, ORDER BY, LIMIT, JOIN, and subqueries are rejected with
// UnsupportedFeature wherever they appear outside string literals.
//
// Throws SyntaxError (with byte position) or UnsupportedFeature.
SelectQuery parse_select(std::string_view sql);

}  // namespace pushq
