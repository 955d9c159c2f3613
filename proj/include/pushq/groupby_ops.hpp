#pragma once

#include <string>
#include <vector>

#include "pushq/exec.hpp"
#include "pushq/table.hpp"

namespace pushq {

struct GroupAggregate {
    AggFunc func;
    std::string column;
};

struct GroupBySpec {
    std::vector<std::string> group_columns;
    std::vector<GroupAggregate> aggregates;
};

struct GroupByOptions {
    ExecMode mode = ExecMode::Parallel;
    ScanMode scan_mode = ScanMode::Parallel;
    double sample_fraction = 0.01;     // hybrid phase 1: leading fraction of each partition
    std::size_t pushed_group_count = 8;  // hybrid: groups aggregated storage-side
};

// Rows are (group values..., aggregate values...) sorted by group key, so
// strategy outputs compare directly. COUNT yields integers; the other
// aggregates yield floats.
struct GroupByResult {
    std::vector<Row> rows;
    Schema schema;
    CostReport report;
    // per-phase observability for traffic experiments
    std::size_t phase2_slots = 0;
    MeterSnapshot sample_meter;
    MeterSnapshot q1_meter;
    MeterSnapshot q2_meter;
};

// Ships all columns, aggregates locally.
GroupByResult groupby_server(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts = {});

// Ships only the referenced columns (pushed projection), aggregates locally.
GroupByResult groupby_filtered(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                               const GroupByOptions& opts = {});

// Two phases, both storage-side: collect distinct group values via a pushed
// projection, then one aggregate request per partition whose projection list
// carries one conditional slot per (group, aggregate); slot results merge
// across partitions. AVG pushes as separate SUM and COUNT slots and divides
// locally. Throws ExpressionTooLarge when the slot list exceeds the request
// text limit.
GroupByResult groupby_pushed(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts = {});

// Samples the leading sample_fraction of each partition (byte prefix rounded
// down to a row boundary), ranks groups by sampled frequency, pushes the
// pushed_group_count most frequent ones storage-side (Q1) and aggregates the
// complement locally from a row select (Q2). Q1 and Q2 run concurrently.
// Results are exact regardless of sampling error: groups missing from the
// sample fall through to Q2's complement predicate.
GroupByResult groupby_hybrid(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts = {});

}  // namespace pushq
