#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pushq/bloom.hpp"
#include "pushq/exec.hpp"
#include "pushq/table.hpp"

namespace pushq {

// One side of a two-table hash join: selection, shipped columns (the
// projection must contain the join key), and the key column.
struct JoinSide {
    TableInfo table;
    std::optional<Expr> predicate;
    std::vector<std::string> projection;
    std::string key_column;
};

struct JoinOptions {
    double bloom_fpr = 0.01;
    uint64_t seed = 1;
    ExecMode mode = ExecMode::Parallel;
    ScanMode scan_mode = ScanMode::Parallel;
};

struct JoinStrategyResult {
    std::vector<Row> rows;  // build projection ++ probe projection
    Schema schema;
    CostReport report;
    MeterSnapshot build_meter;
    MeterSnapshot probe_meter;
    bool degraded = false;    // Bloom join fell back to a plain filtered probe
    double fitted_fpr = 0;    // rate actually used (0 = no filter sent)
};

// Ships both tables whole (Select with no WHERE, all columns) and evaluates
// selections, projections, and the hash join locally. Both table scans run
// concurrently in parallel mode.
JoinStrategyResult join_baseline(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                                 const JoinOptions& opts = {});

// Pushes each side's selection and projection into its Select requests; the
// join itself is local. Scans of the two tables run concurrently.
JoinStrategyResult join_filtered(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                                 const JoinOptions& opts = {});

// Loads the build side first (pushed), builds a Bloom filter over its join
// keys, and ANDs the rendered membership predicate into the probe-side
// Select. The filter is sized to the request-size limit: if no rate < 1
// fits, the probe degrades to a plain filtered scan — still issued only
// after the build scan, so the two table scans are serial either way. An
// empty build side skips the probe scans entirely.
// The join key must parse as a non-negative integer on the build side
// (NonIntegerJoinKey otherwise).
JoinStrategyResult join_bloom(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                              const JoinOptions& opts = {});

}  // namespace pushq
