#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "pushq/datagen.hpp"
#include "pushq/store.hpp"

using namespace pushq;

namespace {

// group-id -> row count over all partitions for one column
std::map<std::string, std::size_t> column_histogram(const TableData& t, const std::string& col) {
    std::size_t idx = t.info.column_index(col);
    std::map<std::string, std::size_t> hist;
    for (const auto& payload : t.payloads) {
        CsvRows rows(payload);
        std::string_view raw;
        std::vector<std::string_view> fields;
        bool header = true;
        while (rows.next(raw)) {
            if (header) {
                header = false;
                continue;
            }
            split_csv_row(raw, ',', fields);
            ++hist[std::string(fields[idx])];
        }
    }
    return hist;
}

}  // namespace

TEST_SUITE_BEGIN("datagen");

TEST_CASE("generators are deterministic per seed") {
    GroupTableParams p;
    p.rows = 2000;
    p.partitions = 3;
    p.seed = 77;
    auto a = gen_group_table(p);
    auto b = gen_group_table(p);
    REQUIRE(a.payloads.size() == b.payloads.size());
    for (std::size_t i = 0; i < a.payloads.size(); ++i) CHECK(a.payloads[i] == b.payloads[i]);
    p.seed = 78;
    auto c = gen_group_table(p);
    CHECK(a.payloads[0] != c.payloads[0]);
}

TEST_CASE("uniform variant balances group sizes") {
    GroupTableParams p;
    p.rows = 100000;
    p.partitions = 4;
    p.seed = 5;
    auto t = gen_group_table(p);
    for (const char* col : {"g1", "g5", "g10"}) {
        auto hist = column_histogram(t, col);
        CAPTURE(col);
        std::size_t expected_groups = col[1] == '1' && col[2] == '0' ? 1024 : (col[1] == '1' ? 2 : 32);
        CHECK(hist.size() == expected_groups);
        std::size_t mn = SIZE_MAX, mx = 0;
        for (auto& [_, n] : hist) {
            mn = std::min(mn, n);
            mx = std::max(mx, n);
        }
        CHECK(double(mx) / double(mn) <= 1.1);
    }
}

TEST_CASE("zipf skew: theta=1.3 concentrates ~59% in the top 4 groups") {
    GroupTableParams p;
    p.rows = 200000;
    p.dist = GroupDist::Zipf;
    p.theta = 1.3;
    p.partitions = 4;
    p.seed = 9;
    auto t = gen_group_table(p);
    auto hist = column_histogram(t, "g1");
    std::vector<std::size_t> counts;
    for (auto& [_, n] : hist) counts.push_back(n);
    std::sort(counts.rbegin(), counts.rend());
    REQUIRE(counts.size() >= 4);
    double top4 = double(counts[0] + counts[1] + counts[2] + counts[3]) / double(p.rows);
    CHECK(top4 > 0.56);
    CHECK(top4 < 0.62);
}

TEST_CASE("zipf theta=0 degenerates to uniform sampling") {
    GroupTableParams p;
    p.rows = 100000;
    p.dist = GroupDist::Zipf;
    p.theta = 0.0;
    p.partitions = 2;
    p.seed = 3;
    auto t = gen_group_table(p);
    auto hist = column_histogram(t, "g1");
    CHECK(hist.size() == 100);
    for (auto& [_, n] : hist) {
        CHECK(n > 700);
        CHECK(n < 1300);
    }
    GroupTableParams bad = p;
    bad.theta = -0.5;
    CHECK_THROWS_AS(gen_group_table(bad), InvalidTheta);
}

TEST_CASE("tpch-like tables keep referential integrity and sweep monotonicity") {
    TpchParams p;
    p.customers = 2000;
    p.orders = 10000;
    p.lineitems = 5000;
    p.partitions = 4;
    p.seed = 11;
    auto t = gen_tpch_like(p);

    // every o_custkey names an existing customer (keys are 1..C by construction)
    auto ohist = column_histogram(t.orders, "o_custkey");
    for (auto& [key, _] : ohist) {
        int64_t k = std::stoll(key);
        CHECK(k >= 1);
        CHECK(k <= int64_t(p.customers));
    }

    // widening the acctbal bound can only add matching customers
    auto ahist = column_histogram(t.customer, "c_acctbal");
    auto count_le = [&](double bound) {
        std::size_t n = 0;
        for (auto& [text, c] : ahist)
            if (std::stod(text) <= bound) n += c;
        return n;
    };
    std::size_t prev = 0;
    for (double bound : {-950, -850, -750, -650, -550, -450}) {
        std::size_t n = count_le(bound);
        CHECK(n >= prev);
        prev = n;
    }
    // ~1% of customers sit at or below -950
    double sel = double(count_le(-950)) / double(p.customers);
    CHECK(sel > 0.003);
    CHECK(sel < 0.03);
    CHECK(count_le(-950) > 0);
}

TEST_CASE("filter table match counts are exact for every bound") {
    FilterTableParams p;
    p.rows = 20000;
    p.partitions = 4;
    p.seed = 21;
    auto t = gen_filter_table(p);
    auto hist = column_histogram(t, "sel");
    CHECK(hist.size() == p.rows);  // a permutation: all values distinct
    for (double sel : {0.0, 0.001, 0.01, 0.1, 1.0}) {
        int64_t bound = filter_match_bound(p.rows, sel);
        std::size_t matches = 0;
        for (auto& [text, c] : hist)
            if (std::stoll(text) < bound) matches += c;
        CHECK(matches == std::size_t(bound));
    }
}

TEST_CASE("generated CSV round-trips through the emulator") {
    GroupTableParams p;
    p.rows = 3000;
    p.partitions = 3;
    p.seed = 31;
    auto t = gen_group_table(p);
    ObjectStore store;
    t.load_into(store);
    UsageMeter m;
    std::size_t rows = 0;
    for (const auto& part : t.info.partitions) {
        auto res = store.select(part, "SELECT COUNT(*) FROM S3Object", m);
        rows += std::stoull(res.payload);
        auto star = store.select(part, "SELECT * FROM S3Object", m);
        auto parsed = test::parse_rows(star.payload);
        for (const auto& row : parsed) CHECK(row.size() == t.info.columns.size());
    }
    CHECK(rows == p.rows);
    CHECK(t.info.rows == p.rows);
}

TEST_CASE("manifest round trip") {
    FilterTableParams p;
    p.rows = 1000;
    p.partitions = 2;
    auto t = gen_filter_table(p);
    auto info = table_info_from_manifest(t.manifest_json());
    CHECK(info.name == t.info.name);
    CHECK(info.rows == t.info.rows);
    CHECK(info.columns == t.info.columns);
    CHECK(info.partitions == t.info.partitions);
}

TEST_SUITE_END();
