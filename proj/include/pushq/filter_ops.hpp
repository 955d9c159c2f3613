#pragma once

#include <string>
#include <vector>

#include "pushq/exec.hpp"
#include "pushq/table.hpp"

namespace pushq {

struct FilterOptions {
    ExecMode mode = ExecMode::Parallel;
    ScanMode scan_mode = ScanMode::Parallel;
    bool multirange = false;          // Suggestion-1 style multi-range GETs
    std::size_t max_parallel_gets = 32;
};

struct FilterStrategyResult {
    std::vector<Row> rows;
    Schema schema;
    CostReport report;
};

// Builds one index object per partition, named "<partition>.idx.<column>",
// with rows |value|first_byte_offset|last_byte_offset|. Offsets are absolute
// within the partition object and include the row's newline. Rebuilding is
// idempotent. An offline operation: no requests are metered.
std::vector<std::string> build_index(ObjectStore& store, const TableInfo& table,
                                     const std::string& column);

// Ships every row (Select with no WHERE) and filters on the compute side.
FilterStrategyResult filter_server_side(ObjectStore& store, const TableInfo& table,
                                        const Expr& predicate, const FilterOptions& opts = {});

// Pushes the WHERE clause into the Select request.
FilterStrategyResult filter_pushed(ObjectStore& store, const TableInfo& table,
                                   const Expr& predicate, const FilterOptions& opts = {});

// Two phases: the predicate (which must reference only the indexed column)
// is pushed to the index objects, then each selected row is fetched by byte
// range — one GET per row, or one multi-range GET per partition when
// opts.multirange is set.
FilterStrategyResult filter_indexed(ObjectStore& store, const TableInfo& table,
                                    const std::string& column, const Expr& predicate,
                                    const FilterOptions& opts = {});

}  // namespace pushq
