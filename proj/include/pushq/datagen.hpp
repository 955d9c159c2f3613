#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pushq/store.hpp"
#include "pushq/table.hpp"

namespace pushq {

// One generated table: metadata plus per-partition CSV payloads (each with
// its own header row). All generators are pure functions of their parameters
// and seed.
struct TableData {
    TableInfo info;
    std::vector<std::string> payloads;
    std::string manifest_cache;

    void load_into(ObjectStore& store) const;
    void write_dir(const std::string& dir) const;  // one file per object
    std::string manifest_json() const;
};

TableInfo table_info_from_manifest(const std::string& json_text);

enum class GroupDist : uint8_t { Uniform, Zipf };

struct GroupTableParams {
    std::size_t rows = 100000;
    GroupDist dist = GroupDist::Uniform;
    double theta = 0.0;          // Zipf skew; 0 = uniform sampling
    std::size_t zipf_groups = 100;
    std::size_t group_columns = 10;  // uniform variant: column i has 2^i groups
    std::size_t value_columns = 10;
    std::size_t partitions = 8;
    uint64_t seed = 1;
    std::string name = "groups";
};

// Grouping columns g1..gN, value columns v1..vN. Uniform variant balances
// group sizes exactly (max/min ratio -> 1); Zipf variant draws group ranks
// with p(r) proportional to 1/r^theta. Values are quarter-unit floats, so
// double-precision aggregation is exact under any summation order.
TableData gen_group_table(const GroupTableParams& params);

struct TpchParams {
    std::size_t customers = 100000;
    std::size_t orders = 1000000;
    std::size_t lineitems = 1000000;
    std::size_t partitions = 8;
    uint64_t seed = 1;
};

struct TpchTables {
    TableData customer;
    TableData orders;
    TableData lineitem;
};

// Desk-scale tables with TPC-H-shaped columns. o_custkey always joins some
// customer; c_acctbal is uniform on [-1000, 4000] in quarter steps, so
// "c_acctbal <= -950" selects ~1% of customers and the [-950, -450] sweep is
// monotone; dates are ISO strings in ['1992-01-01', '1998-08-02'].
TpchTables gen_tpch_like(const TpchParams& params);

struct FilterTableParams {
    std::size_t rows = 100000;
    std::size_t partitions = 4;
    std::size_t payload_columns = 6;
    uint64_t seed = 1;
    std::string name = "filter";
};

// Table with a "sel" column holding a random permutation of 0..rows-1:
// the predicate CAST(sel AS INT) < n matches exactly n rows for every n.
TableData gen_filter_table(const FilterTableParams& params);

// Number of rows matching selectivity on a filter table (the pushed bound).
inline int64_t filter_match_bound(std::size_t rows, double selectivity) {
    return static_cast<int64_t>(std::llround(selectivity * double(rows)));
}

}  // namespace pushq
