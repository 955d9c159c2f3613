#include "pushq/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "pushq/value.hpp"

namespace pushq {

using nlohmann::json;

namespace {

std::string header_line(const std::vector<std::string>& columns) {
    std::string out;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out.push_back(',');
        out += columns[i];
    }
    out.push_back('\n');
    return out;
}

// Quarter-unit values keep double aggregation exact under any association.
std::string quarters(int64_t q) { return format_double(double(q) * 0.25); }

// Row ranges per partition: evenly split, first partitions take the slack.
std::vector<std::pair<std::size_t, std::size_t>> partition_ranges(std::size_t rows,
                                                                  std::size_t partitions) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t base = rows / partitions, extra = rows % partitions, begin = 0;
    for (std::size_t p = 0; p < partitions; ++p) {
        std::size_t len = base + (p < extra ? 1 : 0);
        out.emplace_back(begin, begin + len);
        begin += len;
    }
    return out;
}

void finalize(TableData& t, uint64_t seed, const json& params) {
    uint64_t bytes = 0, rows = t.info.rows;
    for (std::size_t p = 0; p < t.payloads.size(); ++p) {
        t.info.partitions.push_back(t.info.name + "." + std::to_string(p));
        bytes += t.payloads[p].size();
    }
    uint64_t header_bytes = t.payloads.size() * header_line(t.info.columns).size();
    t.info.avg_row_bytes = rows ? double(bytes - header_bytes) / double(rows) : 0.0;
    json j{{"name", t.info.name},
           {"rows", t.info.rows},
           {"columns", t.info.columns},
           {"partitions", t.info.partitions},
           {"avg_row_bytes", t.info.avg_row_bytes},
           {"seed", seed},
           {"params", params}};
    t.manifest_cache = j.dump();
}

std::string iso_date(int64_t day_index) {
    // days since 1992-01-01, Gregorian
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int year = 1992;
    int64_t d = day_index;
    while (true) {
        bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        int64_t in_year = leap ? 366 : 365;
        if (d < in_year) break;
        d -= in_year;
        ++year;
    }
    bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    int month = 0;
    while (true) {
        int64_t len = mdays[month] + (month == 1 && leap ? 1 : 0);
        if (d < len) break;
        d -= len;
        ++month;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month + 1, int(d) + 1);
    return buf;
}

}  // namespace

void TableData::load_into(ObjectStore& store) const {
    for (std::size_t p = 0; p < payloads.size(); ++p)
        store.put(info.partitions[p], payloads[p], info.format);
}

void TableData::write_dir(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (std::size_t p = 0; p < payloads.size(); ++p) {
        std::ofstream out(dir + "/" + info.partitions[p], std::ios::binary);
        out << payloads[p];
    }
}

std::string TableData::manifest_json() const { return manifest_cache; }

TableInfo table_info_from_manifest(const std::string& json_text) {
    json j = json::parse(json_text);
    TableInfo info;
    info.name = j.at("name");
    info.rows = j.at("rows");
    info.columns = j.at("columns").get<std::vector<std::string>>();
    info.partitions = j.at("partitions").get<std::vector<std::string>>();
    info.avg_row_bytes = j.at("avg_row_bytes");
    return info;
}

TableData gen_group_table(const GroupTableParams& params) {
    if (params.rows < 1000) throw InvalidParams("group tables need at least 10^3 rows");
    if (params.dist == GroupDist::Zipf && params.theta < 0)
        throw InvalidTheta("theta must be >= 0");
    if (params.partitions == 0) throw InvalidParams("at least one partition");

    TableData t;
    t.info.name = params.name;
    t.info.format = {',', true};
    t.info.rows = params.rows;
    for (std::size_t g = 1; g <= params.group_columns; ++g)
        t.info.columns.push_back("g" + std::to_string(g));
    for (std::size_t v = 1; v <= params.value_columns; ++v)
        t.info.columns.push_back("v" + std::to_string(v));

    std::mt19937_64 rng(params.seed);

    // Uniform variant: column i cycles through a shuffled alphabet of 2^i
    // group ids, giving exactly balanced group sizes. Zipf variant: inverse
    // CDF over p(r) ~ 1/r^theta, one shared rank stream reshuffled per column.
    std::vector<std::vector<uint32_t>> alphabets(params.group_columns);
    std::vector<uint64_t> rotations(params.group_columns, 0);
    std::vector<double> zipf_cdf;
    if (params.dist == GroupDist::Uniform) {
        for (std::size_t c = 0; c < params.group_columns; ++c) {
            std::size_t n_groups = std::size_t(1) << std::min<std::size_t>(c + 1, 20);
            alphabets[c].resize(n_groups);
            std::iota(alphabets[c].begin(), alphabets[c].end(), 0u);
            std::shuffle(alphabets[c].begin(), alphabets[c].end(), rng);
            rotations[c] = rng();
        }
    } else {
        zipf_cdf.resize(params.zipf_groups);
        double total = 0;
        for (std::size_t r = 1; r <= params.zipf_groups; ++r)
            total += 1.0 / std::pow(double(r), params.theta);
        double acc = 0;
        for (std::size_t r = 1; r <= params.zipf_groups; ++r) {
            acc += 1.0 / std::pow(double(r), params.theta) / total;
            zipf_cdf[r - 1] = acc;
        }
        zipf_cdf.back() = 1.0;
    }

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int64_t> value_q(0, 39999);  // 0 .. 9999.75

    auto ranges = partition_ranges(params.rows, params.partitions);
    std::string header = header_line(t.info.columns);
    for (auto [begin, end] : ranges) {
        std::string payload = header;
        for (std::size_t row = begin; row < end; ++row) {
            for (std::size_t c = 0; c < params.group_columns; ++c) {
                if (c) payload.push_back(',');
                uint32_t gid;
                if (params.dist == GroupDist::Uniform) {
                    const auto& alpha = alphabets[c];
                    gid = alpha[(row + rotations[c]) % alpha.size()];
                } else {
                    double u = unit(rng);
                    gid = uint32_t(std::upper_bound(zipf_cdf.begin(), zipf_cdf.end(), u) -
                                   zipf_cdf.begin());
                    if (gid >= params.zipf_groups) gid = uint32_t(params.zipf_groups - 1);
                }
                payload += std::to_string(gid);
            }
            for (std::size_t v = 0; v < params.value_columns; ++v) {
                payload.push_back(',');
                payload += quarters(value_q(rng));
            }
            payload.push_back('\n');
        }
        t.payloads.push_back(std::move(payload));
    }

    finalize(t, params.seed,
             json{{"dist", params.dist == GroupDist::Uniform ? "uniform" : "zipf"},
                  {"theta", params.theta},
                  {"zipf_groups", params.zipf_groups}});
    return t;
}

TpchTables gen_tpch_like(const TpchParams& params) {
    if (params.customers == 0 || params.orders == 0)
        throw InvalidParams("need at least one customer and order");
    TpchTables out;
    std::mt19937_64 rng(params.seed);

    static const char* segments[] = {"AUTOMOBILE", "BUILDING", "FURNITURE", "HOUSEHOLD",
                                     "MACHINERY"};
    static const char* priorities[] = {"1-URGENT", "2-HIGH", "3-MEDIUM", "4-NOT SPECIFIED",
                                       "5-LOW"};
    constexpr int64_t kDateSpanDays = 2405;  // 1992-01-01 .. 1998-08-02

    {
        TableData& t = out.customer;
        t.info.name = "customer";
        t.info.columns = {"c_custkey", "c_name", "c_nationkey", "c_acctbal", "c_mktsegment"};
        t.info.rows = params.customers;
        std::uniform_int_distribution<int> nation(0, 24);
        // quarters on [-1000, 4000]: P(<= -950) = 201/20001 ~ 1%
        std::uniform_int_distribution<int64_t> acct_q(-4000, 16000);
        std::uniform_int_distribution<int> seg(0, 4);
        auto ranges = partition_ranges(params.customers, params.partitions);
        std::string header = header_line(t.info.columns);
        for (auto [begin, end] : ranges) {
            std::string payload = header;
            for (std::size_t i = begin; i < end; ++i) {
                int64_t key = int64_t(i) + 1;
                payload += std::to_string(key);
                payload += ",Customer#";
                payload += std::to_string(key);
                payload.push_back(',');
                payload += std::to_string(nation(rng));
                payload.push_back(',');
                payload += quarters(acct_q(rng));
                payload.push_back(',');
                payload += segments[seg(rng)];
                payload.push_back('\n');
            }
            t.payloads.push_back(std::move(payload));
        }
        finalize(t, params.seed, json{{"kind", "customer"}});
    }

    {
        TableData& t = out.orders;
        t.info.name = "orders";
        t.info.columns = {"o_orderkey", "o_custkey", "o_orderdate", "o_totalprice",
                          "o_orderpriority"};
        t.info.rows = params.orders;
        std::uniform_int_distribution<int64_t> cust(1, int64_t(params.customers));
        std::uniform_int_distribution<int64_t> day(0, kDateSpanDays);
        std::uniform_int_distribution<int64_t> price_q(4000, 2'000'000);  // 1000 .. 500000
        std::uniform_int_distribution<int> prio(0, 4);
        auto ranges = partition_ranges(params.orders, params.partitions);
        std::string header = header_line(t.info.columns);
        for (auto [begin, end] : ranges) {
            std::string payload = header;
            for (std::size_t i = begin; i < end; ++i) {
                payload += std::to_string(int64_t(i) + 1);
                payload.push_back(',');
                payload += std::to_string(cust(rng));
                payload.push_back(',');
                payload += iso_date(day(rng));
                payload.push_back(',');
                payload += quarters(price_q(rng));
                payload.push_back(',');
                payload += priorities[prio(rng)];
                payload.push_back('\n');
            }
            t.payloads.push_back(std::move(payload));
        }
        finalize(t, params.seed, json{{"kind", "orders"}});
    }

    {
        TableData& t = out.lineitem;
        t.info.name = "lineitem";
        t.info.columns = {"l_orderkey", "l_partkey",       "l_suppkey", "l_linenumber",
                          "l_quantity", "l_extendedprice", "l_shipdate"};
        t.info.rows = params.lineitems;
        std::uniform_int_distribution<int64_t> order(1, int64_t(params.orders));
        std::uniform_int_distribution<int64_t> part(1, 20000);
        std::uniform_int_distribution<int64_t> supp(1, 1000);
        std::uniform_int_distribution<int> line(1, 7);
        std::uniform_int_distribution<int> qty(1, 50);
        std::uniform_int_distribution<int64_t> price_q(3600, 420'000);  // 900 .. 105000
        std::uniform_int_distribution<int64_t> day(0, kDateSpanDays);
        auto ranges = partition_ranges(params.lineitems, params.partitions);
        std::string header = header_line(t.info.columns);
        for (auto [begin, end] : ranges) {
            std::string payload = header;
            for (std::size_t i = begin; i < end; ++i) {
                payload += std::to_string(order(rng));
                payload.push_back(',');
                payload += std::to_string(part(rng));
                payload.push_back(',');
                payload += std::to_string(supp(rng));
                payload.push_back(',');
                payload += std::to_string(line(rng));
                payload.push_back(',');
                payload += std::to_string(qty(rng));
                payload.push_back(',');
                payload += quarters(price_q(rng));
                payload.push_back(',');
                payload += iso_date(day(rng));
                payload.push_back('\n');
            }
            t.payloads.push_back(std::move(payload));
        }
        finalize(t, params.seed, json{{"kind", "lineitem"}});
    }

    return out;
}

TableData gen_filter_table(const FilterTableParams& params) {
    if (params.rows == 0 || params.partitions == 0) throw InvalidParams("empty filter table");
    TableData t;
    t.info.name = params.name;
    t.info.rows = params.rows;
    t.info.columns = {"id", "sel"};
    for (std::size_t c = 1; c <= params.payload_columns; ++c)
        t.info.columns.push_back("pay" + std::to_string(c));

    std::mt19937_64 rng(params.seed);
    std::vector<uint64_t> selvals(params.rows);
    std::iota(selvals.begin(), selvals.end(), 0);
    std::shuffle(selvals.begin(), selvals.end(), rng);

    static const char alnum[] = "abcdefghijklmnopqrstuvwxyz0123456789";
    std::uniform_int_distribution<int> ch(0, 35);

    auto ranges = partition_ranges(params.rows, params.partitions);
    std::string header = header_line(t.info.columns);
    for (auto [begin, end] : ranges) {
        std::string payload = header;
        for (std::size_t i = begin; i < end; ++i) {
            payload += std::to_string(i);
            payload.push_back(',');
            payload += std::to_string(selvals[i]);
            for (std::size_t c = 0; c < params.payload_columns; ++c) {
                payload.push_back(',');
                for (int j = 0; j < 8; ++j) payload.push_back(alnum[ch(rng)]);
            }
            payload.push_back('\n');
        }
        t.payloads.push_back(std::move(payload));
    }
    finalize(t, params.seed, json{{"payload_columns", params.payload_columns}});
    return t;
}

}  // namespace pushq
