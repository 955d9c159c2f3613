#pragma once

#include <string>
#include <vector>

#include "pushq/exec.hpp"
#include "pushq/table.hpp"

namespace pushq {

struct TopKSpec {
    std::size_t k = 1;
    std::string order_column;
    bool ascending = true;
    std::size_t sample_size = 0;  // 0 = analytic optimum
    double alpha = 0;             // ordering bytes / row bytes; 0 = measure from a probe
    bool row_random = true;       // leading rows are a valid random sample
};

struct TopKOptions {
    ExecMode mode = ExecMode::Parallel;
    ScanMode scan_mode = ScanMode::Parallel;
    uint64_t seed = 1;  // random-offset sampling
};

struct TopKResult {
    std::vector<Row> rows;  // K rows sorted by the order value
    Schema schema;
    CostReport report;
    double threshold = 0;
    std::size_t sampled_rows = 0;   // sample actually used (>= requested S)
    std::size_t phase2_rows = 0;    // qualifying rows shipped in phase 2
    double alpha_used = 0;
    bool clipped_k = false;  // K exceeded the table size; all rows returned
    MeterSnapshot phase1_meter;
    MeterSnapshot phase2_meter;
};

// round(sqrt(K*N/alpha)) clamped to [K+1, N]: the sample size minimizing
// total phase-1 + phase-2 traffic alpha*S*B + K*N*B/S.
std::size_t optimal_sample_size(std::size_t k, std::size_t n, double alpha);

// Full scan with a bounded selection heap; ties keep the first-encountered
// row. K > N returns all rows with clipped_k set.
TopKResult topk_server(ObjectStore& store, const TableInfo& table, const TopKSpec& spec,
                       const TopKOptions& opts = {});

// Two phases. Phase 1 samples S rows — leading partitions via pushed
// projection of the order column when the layout is row-random, random
// byte-offset chunks otherwise — and takes the K-th sampled value as the
// threshold. Phase 2 pushes "order <= threshold" (">=" descending; non-strict
// so threshold ties survive) to every partition and heap-selects the final K.
// The threshold can never exclude a true top-K row: the sample already holds
// K rows at or below it.
TopKResult topk_sampling(ObjectStore& store, const TableInfo& table, const TopKSpec& spec,
                         const TopKOptions& opts = {});

}  // namespace pushq
