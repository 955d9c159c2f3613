#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "pushq/datagen.hpp"
#include "pushq/groupby_ops.hpp"

using namespace pushq;
using test::row_multiset;

namespace {

// Independent reference aggregation straight over the generated payload.
std::multiset<std::string> oracle_groupby(const TableData& t, const std::string& group_col,
                                          const std::vector<GroupAggregate>& aggs) {
    std::size_t gidx = t.info.column_index(group_col);
    struct Ref {
        double sum = 0;
        int64_t count = 0;
        double mn = 0, mx = 0;
        bool seen = false;
    };
    std::map<std::string, std::map<std::string, Ref>> per_column;  // col -> group -> state
    std::map<std::string, int64_t> counts;
    for (const auto& payload : t.payloads) {
        CsvRows it(payload);
        std::string_view raw;
        std::vector<std::string_view> fields;
        bool header = true;
        while (it.next(raw)) {
            if (header) {
                header = false;
                continue;
            }
            split_csv_row(raw, ',', fields);
            std::string g(fields[gidx]);
            ++counts[g];
            for (const auto& agg : aggs) {
                if (agg.func == AggFunc::Count) continue;
                std::size_t vidx = t.info.column_index(agg.column);
                double v = std::stod(std::string(fields[vidx]));
                Ref& r = per_column[agg.column][g];
                r.sum += v;
                ++r.count;
                r.mn = r.seen ? std::min(r.mn, v) : v;
                r.mx = r.seen ? std::max(r.mx, v) : v;
                r.seen = true;
            }
        }
    }
    std::multiset<std::string> out;
    for (const auto& [g, n] : counts) {
        std::string key = g + "\x1f";
        for (const auto& agg : aggs) {
            switch (agg.func) {
                case AggFunc::Count: key += std::to_string(n); break;
                case AggFunc::Sum: key += format_double(per_column[agg.column][g].sum); break;
                case AggFunc::Min: key += format_double(per_column[agg.column][g].mn); break;
                case AggFunc::Max: key += format_double(per_column[agg.column][g].mx); break;
                case AggFunc::Avg:
                    key += format_double(per_column[agg.column][g].sum /
                                         double(per_column[agg.column][g].count));
                    break;
            }
            key += "\x1f";
        }
        out.insert(key);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("groupby");

TEST_CASE("hand-computed sums over two groups") {
    ObjectStore store;
    store.put("g.0", "g,v\n0,1.5\n1,2\n0,0.5\n", {',', true});
    store.put("g.1", "g,v\n1,0.25\n0,1\n0,2\n", {',', true});
    TableInfo info;
    info.name = "g";
    info.columns = {"g", "v"};
    info.partitions = {"g.0", "g.1"};
    GroupBySpec spec{{"g"}, {{AggFunc::Sum, "v"}}};

    for (auto* fn : {groupby_server, groupby_filtered, groupby_pushed, groupby_hybrid}) {
        auto result = fn(store, info, spec, {});
        REQUIRE(result.rows.size() == 2);
        CHECK(result.rows[0][0] == Value::text("0"));
        CHECK(result.rows[0][1] == Value::real(5.0));
        CHECK(result.rows[1][0] == Value::text("1"));
        CHECK(result.rows[1][1] == Value::real(2.25));
    }
}

TEST_CASE("empty table yields zero groups") {
    ObjectStore store;
    store.put("e.0", "g,v\n", {',', true});
    TableInfo info;
    info.name = "e";
    info.columns = {"g", "v"};
    info.partitions = {"e.0"};
    GroupBySpec spec{{"g"}, {{AggFunc::Sum, "v"}}};
    for (auto* fn : {groupby_server, groupby_filtered, groupby_pushed, groupby_hybrid})
        CHECK(fn(store, info, spec, {}).rows.empty());
}

TEST_CASE("filtered ships roughly the referenced share of bytes") {
    GroupTableParams p;  // 20 columns, 4 referenced
    p.rows = 20000;
    p.partitions = 4;
    p.seed = 3;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    GroupBySpec spec{{"g3"}, {{AggFunc::Sum, "v1"}, {AggFunc::Sum, "v2"}, {AggFunc::Sum, "v3"}}};
    auto server = groupby_server(store, t.info, spec);
    auto filtered = groupby_filtered(store, t.info, spec);
    CHECK(row_multiset(server.rows) == row_multiset(filtered.rows));
    double ratio = double(filtered.report.meter.bytes_returned_select) /
                   double(server.report.meter.bytes_returned_select);
    // 4 of 20 columns, narrow ones; allow generous slack
    CHECK(ratio > 0.05);
    CHECK(ratio < 0.40);
}

TEST_CASE("four-way equivalence against the reference, uniform and skewed") {
    std::vector<GroupTableParams> tables;
    {
        GroupTableParams p;
        p.rows = 6000;
        p.partitions = 3;
        p.seed = 11;
        tables.push_back(p);
    }
    {
        GroupTableParams p;
        p.rows = 6000;
        p.partitions = 3;
        p.seed = 12;
        p.dist = GroupDist::Zipf;
        p.theta = 1.3;
        tables.push_back(p);
    }
    for (const auto& params : tables) {
        auto t = gen_group_table(params);
        ObjectStore store;
        t.load_into(store);
        GroupBySpec spec{{"g4"},
                         {{AggFunc::Sum, "v1"},
                          {AggFunc::Count, "v1"},
                          {AggFunc::Min, "v2"},
                          {AggFunc::Max, "v3"},
                          {AggFunc::Avg, "v4"}}};
        auto expected = oracle_groupby(t, "g4", spec.aggregates);
        GroupByOptions hybrid_opts;
        hybrid_opts.sample_fraction = 0.05;
        hybrid_opts.pushed_group_count = 5;
        auto server = groupby_server(store, t.info, spec);
        auto filtered = groupby_filtered(store, t.info, spec);
        auto pushed = groupby_pushed(store, t.info, spec);
        auto hybrid = groupby_hybrid(store, t.info, spec, hybrid_opts);
        CHECK(row_multiset(server.rows) == expected);
        CHECK(row_multiset(filtered.rows) == expected);
        CHECK(row_multiset(pushed.rows) == expected);
        CHECK(row_multiset(hybrid.rows) == expected);
    }
}

TEST_CASE("pushed phase-2 request carries one conditional slot per group") {
    ObjectStore store({.latency_ms = 0, .log_requests = true});
    store.put("n.0", "c_nationkey,c_acctbal\n0,10.5\n1,3\n0,2\n", {',', true});
    TableInfo info;
    info.name = "n";
    info.columns = {"c_nationkey", "c_acctbal"};
    info.partitions = {"n.0"};
    GroupBySpec spec{{"c_nationkey"}, {{AggFunc::Sum, "c_acctbal"}}};
    auto result = groupby_pushed(store, info, spec);
    REQUIRE(result.rows.size() == 2);
    CHECK(result.rows[0][1] == Value::real(12.5));
    CHECK(result.rows[1][1] == Value::real(3.0));

    std::string phase2_sql;
    for (const auto& r : store.take_log())
        if (r.kind == RequestRecord::Kind::Select && r.sql.find("CASE") != std::string::npos)
            phase2_sql = r.sql;
    CHECK(phase2_sql ==
          "SELECT SUM(CASE WHEN (c_nationkey = '0') THEN CAST(c_acctbal AS DECIMAL) ELSE 0 END), "
          "SUM(CASE WHEN (c_nationkey = '1') THEN CAST(c_acctbal AS DECIMAL) ELSE 0 END) "
          "FROM S3Object");
}

TEST_CASE("pushed phase-2 arity equals groups x aggregates") {
    GroupTableParams p;
    p.rows = 4000;
    p.partitions = 2;
    p.seed = 21;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    // g5 has 32 distinct values; 3 plain aggregates (no AVG expansion)
    GroupBySpec spec{{"g5"},
                     {{AggFunc::Sum, "v1"}, {AggFunc::Min, "v2"}, {AggFunc::Count, "v1"}}};
    auto pushed = groupby_pushed(store, t.info, spec);
    CHECK(pushed.phase2_slots == 32 * 3);
}

TEST_CASE("pushed propagates the request-size limit") {
    GroupTableParams p;
    p.rows = 4000;
    p.partitions = 2;
    p.seed = 23;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    // 1024 groups x 4 aggregates exceeds 256 KB of slot text
    GroupBySpec spec{{"g10"},
                     {{AggFunc::Sum, "v1"},
                      {AggFunc::Sum, "v2"},
                      {AggFunc::Sum, "v3"},
                      {AggFunc::Sum, "v4"}}};
    CHECK_THROWS_AS(groupby_pushed(store, t.info, spec), ExpressionTooLarge);
}

TEST_CASE("hybrid degenerate splits") {
    GroupTableParams p;
    p.rows = 5000;
    p.partitions = 4;
    p.seed = 31;
    p.dist = GroupDist::Zipf;
    p.theta = 1.0;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    GroupBySpec spec{{"g1"}, {{AggFunc::Sum, "v1"}}};

    // pushed_group_count = 0 behaves as the filtered strategy
    GroupByOptions none;
    none.pushed_group_count = 0;
    auto hybrid0 = groupby_hybrid(store, t.info, spec, none);
    auto filtered = groupby_filtered(store, t.info, spec);
    CHECK(row_multiset(hybrid0.rows) == row_multiset(filtered.rows));
    CHECK(hybrid0.q1_meter.select_requests == 0);
    CHECK(hybrid0.phase2_slots == 0);
    // Q2 ships the referenced columns of every row, as filtered does
    CHECK(hybrid0.q2_meter.bytes_returned_select ==
          filtered.report.meter.bytes_returned_select);

    // pushed_group_count covering every group matches the pushed strategy
    GroupByOptions all;
    all.pushed_group_count = 1000;
    all.sample_fraction = 1.0;
    auto hybrid_all = groupby_hybrid(store, t.info, spec, all);
    auto pushed = groupby_pushed(store, t.info, spec);
    CHECK(row_multiset(hybrid_all.rows) == row_multiset(pushed.rows));
    CHECK(hybrid_all.q2_meter.bytes_returned_select == 0);  // complement is empty
}

TEST_CASE("hybrid stays exact under an adversarial sample") {
    // Partition prefixes hold only the rarest groups, so phase 1 misranks
    // badly; results must not change.
    std::string header = "g,v\n";
    std::string p0 = header, p1 = header;
    // rare groups up front
    for (int i = 0; i < 6; ++i) {
        p0 += "rare" + std::to_string(i) + ",0.25\n";
        p1 += "rare" + std::to_string(i + 6) + ",0.5\n";
    }
    for (int i = 0; i < 300; ++i) {
        p0 += "big,1\n";
        p1 += "huge,2\n";
    }
    ObjectStore store;
    store.put("a.0", p0, {',', true});
    store.put("a.1", p1, {',', true});
    TableInfo info;
    info.name = "a";
    info.columns = {"g", "v"};
    info.partitions = {"a.0", "a.1"};
    GroupBySpec spec{{"g"}, {{AggFunc::Sum, "v"}, {AggFunc::Count, "v"}}};

    auto reference = groupby_server(store, info, spec);
    GroupByOptions opts;
    opts.sample_fraction = 0.02;  // sees only the rare groups
    opts.pushed_group_count = 4;
    auto hybrid = groupby_hybrid(store, info, spec, opts);
    CHECK(row_multiset(hybrid.rows) == row_multiset(reference.rows));
}

TEST_CASE("Q2 traffic shrinks as more groups are pushed") {
    GroupTableParams p;
    p.rows = 8000;
    p.partitions = 4;
    p.seed = 41;
    p.dist = GroupDist::Zipf;
    p.theta = 1.3;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    GroupBySpec spec{{"g1"}, {{AggFunc::Sum, "v1"}}};
    GroupByOptions opts;
    opts.sample_fraction = 0.2;
    uint64_t prev = UINT64_MAX;
    for (std::size_t count : {0u, 2u, 6u, 12u}) {
        opts.pushed_group_count = count;
        auto result = groupby_hybrid(store, t.info, spec, opts);
        CHECK(result.q2_meter.bytes_returned_select < prev);
        prev = result.q2_meter.bytes_returned_select;
    }
}

TEST_CASE("serial mode agrees with parallel mode") {
    GroupTableParams p;
    p.rows = 4000;
    p.partitions = 3;
    p.seed = 51;
    p.dist = GroupDist::Zipf;
    p.theta = 0.7;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    GroupBySpec spec{{"g2"}, {{AggFunc::Sum, "v5"}, {AggFunc::Avg, "v6"}}};
    GroupByOptions serial;
    serial.mode = ExecMode::Serial;
    serial.scan_mode = ScanMode::Serial;
    for (auto* fn : {groupby_server, groupby_filtered, groupby_pushed, groupby_hybrid}) {
        auto a = fn(store, t.info, spec, {});
        auto b = fn(store, t.info, spec, serial);
        CHECK(row_multiset(a.rows) == row_multiset(b.rows));
        CHECK(a.report.meter == b.report.meter);
    }
}

TEST_SUITE_END();
