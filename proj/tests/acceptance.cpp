// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "pushq/bench.hpp"
#include "pushq/bloom.hpp"
#include "pushq/cost_model.hpp"
#include "pushq/datagen.hpp"
#include "pushq/filter_ops.hpp"
#include "pushq/groupby_ops.hpp"
#include "pushq/join_ops.hpp"
#include "pushq/sql_eval.hpp"
#include "pushq/sql_parser.hpp"
#include "pushq/topk_ops.hpp"

using namespace pushq;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& description, const std::function<bool(std::string&)>& fn) {
    std::string detail;
    bool ok = false;
    auto started = std::chrono::steady_clock::now();
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("%s  criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", number,
                description.c_str(), seconds, detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::multiset<std::string> row_set(const std::vector<Row>& rows) {
    std::multiset<std::string> out;
    for (const auto& row : rows) {
        std::string key;
        for (const auto& v : row) {
            key += v.to_string();
            key.push_back('\x1f');
        }
        out.insert(std::move(key));
    }
    return out;
}

Expr sel_below(int64_t bound) {
    return Expr::binary(BinOp::Lt, Expr::cast(CastType::Int, Expr::column("sel")),
                        Expr::lit(bound));
}

// data-row bytes of a generated table (payload minus header lines)
uint64_t data_bytes(const TableData& t) {
    uint64_t total = 0;
    for (std::size_t p = 0; p < t.payloads.size(); ++p) {
        std::string_view payload = t.payloads[p];
        total += payload.size() - skip_rows_offset(payload, 1);
    }
    return total;
}

// serialized bytes of the rows matching sel < bound, straight off the payloads
uint64_t matching_bytes(const TableData& t, int64_t bound) {
    std::size_t idx = t.info.column_index("sel");
    uint64_t total = 0;
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
            int64_t v = 0;
            parse_int64(fields[idx], v);
            if (v < bound) total += raw.size() + 1;
        }
    }
    return total;
}

struct JoinInstance {
    std::unique_ptr<ObjectStore> store;
    TpchTables tables;
    JoinSide build, probe;
    std::optional<double> acct;
    std::optional<std::string> date;
};

JoinInstance make_join_instance(std::size_t customers, std::size_t orders, uint64_t seed,
                                std::optional<double> acct, std::optional<std::string> date) {
    JoinInstance inst;
    inst.store = std::make_unique<ObjectStore>();
    TpchParams p;
    p.customers = customers;
    p.orders = orders;
    p.lineitems = 100;
    p.partitions = 3;
    p.seed = seed;
    inst.tables = gen_tpch_like(p);
    inst.tables.customer.load_into(*inst.store);
    inst.tables.orders.load_into(*inst.store);
    inst.acct = acct;
    inst.date = date;
    inst.build.table = inst.tables.customer.info;
    if (acct)
        inst.build.predicate =
            Expr::binary(BinOp::Le, Expr::cast(CastType::Decimal, Expr::column("c_acctbal")),
                         Expr::lit(*acct));
    inst.build.projection = {"c_custkey", "c_acctbal"};
    inst.build.key_column = "c_custkey";
    inst.probe.table = inst.tables.orders.info;
    if (date)
        inst.probe.predicate =
            Expr::binary(BinOp::Lt, Expr::column("o_orderdate"), Expr::lit(*date));
    inst.probe.projection = {"o_custkey", "o_totalprice"};
    inst.probe.key_column = "o_custkey";
    return inst;
}

// independent text-level reference join
std::multiset<std::string> reference_join(const JoinInstance& inst) {
    auto rows_of = [](const TableData& t) {
        std::vector<std::vector<std::string>> rows;
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
                std::vector<std::string> row;
                for (auto f : fields) row.emplace_back(f);
                rows.push_back(std::move(row));
            }
        }
        return rows;
    };
    auto customers = rows_of(inst.tables.customer);
    auto orders = rows_of(inst.tables.orders);
    std::multimap<std::string, const std::vector<std::string>*> by_key;
    for (const auto& c : customers) {
        if (inst.acct && std::stod(c[3]) > *inst.acct) continue;
        by_key.emplace(c[0], &c);
    }
    std::multiset<std::string> out;
    for (const auto& o : orders) {
        if (inst.date && !(o[2] < *inst.date)) continue;
        auto [lo, hi] = by_key.equal_range(o[1]);
        for (auto it = lo; it != hi; ++it)
            out.insert((*it->second)[0] + "\x1f" + (*it->second)[3] + "\x1f" + o[1] + "\x1f" +
                       o[3] + "\x1f");
    }
    return out;
}

std::multiset<double> topk_reference(const TableData& t, const std::string& col, std::size_t k,
                                     bool ascending) {
    std::size_t idx = t.info.column_index(col);
    std::vector<double> values;
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
            double v = 0;
            parse_double(fields[idx], v);
            values.push_back(v);
        }
    }
    if (ascending)
        std::sort(values.begin(), values.end());
    else
        std::sort(values.rbegin(), values.rend());
    values.resize(std::min(values.size(), k));
    return {values.begin(), values.end()};
}

std::multiset<double> topk_values(const TopKResult& r, const TableInfo& info,
                                  const std::string& col) {
    std::size_t idx = info.column_index(col);
    std::multiset<double> out;
    for (const auto& row : r.rows) {
        double v = 0;
        parse_double(row[idx].as_text(), v);
        out.insert(v);
    }
    return out;
}

}  // namespace

int main() {
    criterion(1, "filter tri-equivalence on 10 seeded tables, under 2 minutes", [](std::string& detail) {
        auto started = std::chrono::steady_clock::now();
        for (int i = 0; i < 10; ++i) {
            FilterTableParams params;
            params.rows = 100000 * std::size_t(i + 1);  // 1e5 .. 1e6
            params.partitions = 4;
            params.seed = 100 + uint64_t(i);
            auto t = gen_filter_table(params);
            ObjectStore store;
            t.load_into(store);
            build_index(store, t.info, "sel");
            Expr pred = sel_below(filter_match_bound(params.rows, 1e-3));
            auto server = filter_server_side(store, t.info, pred);
            auto pushed = filter_pushed(store, t.info, pred);
            auto indexed = filter_indexed(store, t.info, "sel", pred);
            if (row_set(server.rows) != row_set(pushed.rows) ||
                row_set(server.rows) != row_set(indexed.rows)) {
                detail = "strategy outputs differ at table " + std::to_string(i);
                return false;
            }
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        if (seconds >= 120) {
            detail = "took " + std::to_string(seconds) + "s";
            return false;
        }
        return true;
    });

    criterion(2, "filter traffic shape at selectivity 1e-4, bit-exact counters", [](std::string& detail) {
        FilterTableParams params;
        params.rows = 1000000;
        params.partitions = 4;
        params.seed = 424242;
        auto t = gen_filter_table(params);
        ObjectStore store;
        t.load_into(store);
        build_index(store, t.info, "sel");
        int64_t bound = filter_match_bound(params.rows, 1e-4);  // 100 matches
        Expr pred = sel_below(bound);

        auto server = filter_server_side(store, t.info, pred);
        auto pushed = filter_pushed(store, t.info, pred);
        auto indexed = filter_indexed(store, t.info, "sel", pred);
        FilterOptions multi;
        multi.multirange = true;
        auto multir = filter_indexed(store, t.info, "sel", pred, multi);

        uint64_t expected_server = data_bytes(t);
        uint64_t expected_pushed = matching_bytes(t, bound);
        std::ostringstream why;
        bool ok = true;
        if (server.report.meter.bytes_returned_select != expected_server) {
            why << "server bytes " << server.report.meter.bytes_returned_select << " != "
                << expected_server << "; ";
            ok = false;
        }
        if (pushed.report.meter.bytes_returned_select != expected_pushed) {
            why << "pushed bytes " << pushed.report.meter.bytes_returned_select << " != "
                << expected_pushed << "; ";
            ok = false;
        }
        if (!(pushed.report.meter.bytes_returned_select * 100 <=
              server.report.meter.bytes_returned_select)) {
            why << "pushed bytes above 1% of server; ";
            ok = false;
        }
        if (indexed.report.meter.get_requests != uint64_t(bound)) {
            why << "single-range GETs " << indexed.report.meter.get_requests << " != " << bound
                << "; ";
            ok = false;
        }
        if (multir.report.meter.get_requests != params.partitions) {
            why << "multi-range GETs " << multir.report.meter.get_requests << " != "
                << params.partitions << "; ";
            ok = false;
        }
        detail = why.str();
        return ok;
    });

    criterion(3, "bloom sizing formulas: k(0.01) = 7, m(1000, 0.01) = 9586", [](std::string& detail) {
        if (bloom_hash_count(0.01) != 7) {
            detail = "k = " + std::to_string(bloom_hash_count(0.01));
            return false;
        }
        if (bloom_bit_count(1000, 0.01) != 9586) {
            detail = "m = " + std::to_string(bloom_bit_count(1000, 0.01));
            return false;
        }
        return true;
    });

    criterion(4, "measured FPR within [p/3, 3p] across the rate sweep; zero false negatives",
              [](std::string& detail) {
        std::mt19937_64 rng(777);
        std::uniform_int_distribution<int64_t> key_gen(0, 2'000'000'000);
        std::set<int64_t> inserted;
        while (inserted.size() < 10000) inserted.insert(key_gen(rng));
        std::vector<int64_t> keys(inserted.begin(), inserted.end());
        std::vector<int64_t> probes;
        while (probes.size() < 100000) {
            int64_t k = key_gen(rng);
            if (!inserted.count(k)) probes.push_back(k);
        }
        for (double p : {0.0001, 0.001, 0.01, 0.1, 0.3, 0.5}) {
            auto filter = bloom_create(keys, p, 4242);
            for (int64_t k : keys) {
                if (!filter.query(k)) {
                    detail = "false negative at p=" + format_double(p);
                    return false;
                }
            }
            double rate = bloom_measure_fpr(filter, probes);
            if (rate < p / 3.0 || rate > p * 3.0) {
                detail = "p=" + format_double(p) + " measured " + format_double(rate);
                return false;
            }
        }
        return true;
    });

    criterion(5, "rendered predicate and direct bloom queries agree on 10^4 keys", [](std::string& detail) {
        std::mt19937_64 rng(31337);
        std::uniform_int_distribution<int64_t> key_gen(0, 500'000'000);
        std::vector<int64_t> keys;
        for (int i = 0; i < 2000; ++i) keys.push_back(key_gen(rng));
        auto filter = bloom_create(keys, 0.02, 99);
        auto q = parse_select("SELECT _1 FROM S3Object WHERE " + filter.to_sql_predicate("_1"));
        for (int i = 0; i < 10000; ++i) {
            int64_t key = key_gen(rng);
            std::vector<Value> row{Value::text(std::to_string(key))};
            if (evaluate_row(q, row).has_value() != filter.query(key)) {
                detail = "divergence at key " + std::to_string(key);
                return false;
            }
        }
        return true;
    });

    criterion(6, "join equivalence vs reference on 20 seeded instances; bloom beats filtered probe",
              [](std::string& detail) {
        struct Shape {
            std::size_t customers, orders;
            std::optional<double> acct;
            std::optional<std::string> date;
        };
        std::vector<Shape> shapes;
        for (int i = 0; i < 9; ++i)
            shapes.push_back({600 + std::size_t(i) * 120, 2500 + std::size_t(i) * 300,
                              -950.0 + 50.0 * i, std::nullopt});
        for (int i = 0; i < 5; ++i)
            shapes.push_back({800, 3200, -700.0,
                              std::string(i % 2 ? "1994-01-01" : "1992-06-01")});
        shapes.push_back({500, 2000, std::nullopt, std::nullopt});     // no predicates
        shapes.push_back({500, 2000, 4000.0, std::nullopt});           // all-match
        shapes.push_back({500, 2000, -2000.0, std::nullopt});          // empty build
        shapes.push_back({700, 2800, -950.0, std::string("none")});
        shapes.push_back({5000, 2000, std::nullopt, std::nullopt});    // ladder climb
        shapes.push_back({200000, 1500, std::nullopt, std::nullopt});  // DEGRADE-forced
        if (shapes.size() != 20) {
            detail = "instance count";
            return false;
        }
        bool saw_degrade = false;
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            auto& s = shapes[i];
            std::optional<std::string> date = s.date;
            if (date && *date == "none") date.reset();
            auto inst = make_join_instance(s.customers, s.orders, 9000 + i, s.acct, date);
            auto expected = reference_join(inst);
            auto baseline = join_baseline(*inst.store, inst.build, inst.probe);
            auto filtered = join_filtered(*inst.store, inst.build, inst.probe);
            auto bloom = join_bloom(*inst.store, inst.build, inst.probe);
            if (row_set(baseline.rows) != expected || row_set(filtered.rows) != expected ||
                row_set(bloom.rows) != expected) {
                detail = "mismatch on instance " + std::to_string(i);
                return false;
            }
            saw_degrade = saw_degrade || bloom.degraded;
            // build selectivity <= 1e-2 (the -950 bound): bloom ships less
            if (s.acct && *s.acct <= -950.0 && !bloom.degraded && !baseline.rows.empty()) {
                if (bloom.probe_meter.bytes_returned_select >=
                    filtered.probe_meter.bytes_returned_select) {
                    detail = "bloom probe not cheaper on instance " + std::to_string(i);
                    return false;
                }
            }
        }
        if (!saw_degrade) {
            detail = "no DEGRADE instance observed";
            return false;
        }
        return true;
    });

    criterion(7, "256KB ladder: oversized build raises p; hopeless build degrades serially",
              [](std::string& detail) {
        auto inst = make_join_instance(5000, 1200, 555, std::nullopt, std::nullopt);
        auto climbed = join_bloom(*inst.store, inst.build, inst.probe);
        if (climbed.degraded || climbed.fitted_fpr <= 0.01) {
            detail = "expected a fitted rate above 0.01, got " +
                     format_double(climbed.fitted_fpr);
            return false;
        }

        auto big = make_join_instance(200000, 1200, 556, std::nullopt, std::nullopt);
        big.store->set_logging(true);
        auto degraded = join_bloom(*big.store, big.build, big.probe);
        if (!degraded.degraded || degraded.fitted_fpr != 0) {
            detail = "expected DEGRADE";
            return false;
        }
        // serial execution: every build-side select precedes every probe-side
        // select in the request log
        uint64_t last_build = 0, first_probe = UINT64_MAX;
        for (const auto& r : big.store->take_log()) {
            if (r.kind != RequestRecord::Kind::Select) continue;
            if (r.object.rfind("customer.", 0) == 0) last_build = std::max(last_build, r.seq);
            if (r.object.rfind("orders.", 0) == 0) first_probe = std::min(first_probe, r.seq);
        }
        if (!(last_build < first_probe)) {
            detail = "table scans were not serial";
            return false;
        }
        auto filtered = join_filtered(*big.store, big.build, big.probe);
        if (row_set(degraded.rows) != row_set(filtered.rows)) {
            detail = "degraded result differs from filtered join";
            return false;
        }
        return true;
    });

    criterion(8, "group-by four-way equivalence on uniform and skewed tables", [](std::string& detail) {
        GroupByOptions opts;
        opts.sample_fraction = 0.1;
        opts.pushed_group_count = 6;
        // uniform group counts 2..32
        {
            GroupTableParams params;
            params.rows = 20000;
            params.partitions = 4;
            params.seed = 3131;
            auto t = gen_group_table(params);
            ObjectStore store;
            t.load_into(store);
            for (int col = 1; col <= 5; ++col) {
                GroupBySpec spec{{"g" + std::to_string(col)},
                                 {{AggFunc::Sum, "v1"}, {AggFunc::Count, "v2"},
                                  {AggFunc::Min, "v3"}, {AggFunc::Max, "v4"}}};
                auto server = groupby_server(store, t.info, spec, opts);
                auto filtered = groupby_filtered(store, t.info, spec, opts);
                auto pushed = groupby_pushed(store, t.info, spec, opts);
                auto hybrid = groupby_hybrid(store, t.info, spec, opts);
                if (row_set(server.rows) != row_set(filtered.rows) ||
                    row_set(server.rows) != row_set(pushed.rows) ||
                    row_set(server.rows) != row_set(hybrid.rows)) {
                    detail = "mismatch at g" + std::to_string(col);
                    return false;
                }
            }
        }
        // zipf thetas
        for (double theta : {0.0, 0.7, 1.3}) {
            GroupTableParams params;
            params.rows = 20000;
            params.partitions = 4;
            params.seed = 3141;
            params.dist = GroupDist::Zipf;
            params.theta = theta;
            auto t = gen_group_table(params);
            ObjectStore store;
            t.load_into(store);
            GroupBySpec spec{{"g1"},
                             {{AggFunc::Sum, "v1"}, {AggFunc::Avg, "v2"},
                              {AggFunc::Count, "v3"}}};
            auto server = groupby_server(store, t.info, spec, opts);
            auto filtered = groupby_filtered(store, t.info, spec, opts);
            auto pushed = groupby_pushed(store, t.info, spec, opts);
            auto hybrid = groupby_hybrid(store, t.info, spec, opts);
            if (row_set(server.rows) != row_set(filtered.rows) ||
                row_set(server.rows) != row_set(pushed.rows) ||
                row_set(server.rows) != row_set(hybrid.rows)) {
                detail = "mismatch at theta=" + format_double(theta);
                return false;
            }
        }
        return true;
    });

    criterion(9, "zipf generator: theta=1.3 puts 59% +/- 3% of 10^6 rows in the top 4 groups",
              [](std::string& detail) {
        GroupTableParams params;
        params.rows = 1000000;
        params.partitions = 8;
        params.seed = 2026;
        params.dist = GroupDist::Zipf;
        params.theta = 1.3;
        params.value_columns = 2;  // keep generation light; share depends on g1 only
        auto t = gen_group_table(params);
        std::map<std::string, std::size_t> hist;
        std::size_t gidx = t.info.column_index("g1");
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
                ++hist[std::string(fields[gidx])];
            }
        }
        std::vector<std::size_t> counts;
        for (auto& [_, n] : hist) counts.push_back(n);
        std::sort(counts.rbegin(), counts.rend());
        double share = double(counts[0] + counts[1] + counts[2] + counts[3]) / double(params.rows);
        detail = "top-4 share " + format_double(share);
        return share >= 0.56 && share <= 0.62;
    });

    criterion(10, "hybrid tuning curve: traffic minimum in [4, 10] pushed groups; Q2 non-increasing",
              [](std::string& detail) {
        ExperimentSpec spec;
        spec.id = "groupby-pushcount";
        spec.seed = 1;
        auto table = run_experiment(spec);
        std::vector<uint64_t> totals, q2;
        for (const auto& cell : table.cells) {
            if (!cell.error.empty()) {
                detail = "cell error: " + cell.error;
                return false;
            }
            totals.push_back(std::stoull(cell.extra.at("select_returned_total")));
            q2.push_back(std::stoull(cell.extra.at("q2_returned_bytes")));
        }
        for (std::size_t i = 1; i < q2.size(); ++i) {
            if (q2[i] > q2[i - 1]) {
                detail = "Q2 bytes increased at pushed=" + std::to_string(i);
                return false;
            }
        }
        std::size_t argmin =
            std::size_t(std::min_element(totals.begin(), totals.end()) - totals.begin());
        detail = "traffic minimum at pushed=" + std::to_string(argmin);
        return argmin >= 4 && argmin <= 10;
    });

    criterion(11, "top-K model: S* formula value; phase-2 volume; sweep minimum near S*",
              [](std::string& detail) {
        std::size_t s_star = optimal_sample_size(100, 60'000'000, 0.1);
        // sqrt(KN/alpha) = 244948.97...; the published 2.4e5 is this value to
        // two significant figures
        if (std::llabs(int64_t(s_star) - 244949) > 1) {
            detail = "S* = " + std::to_string(s_star);
            return false;
        }

        for (uint64_t seed = 1; seed <= 10; ++seed) {
            TpchParams params;
            params.customers = 100;
            params.orders = 100;
            params.lineitems = 50000;
            params.partitions = 50;
            params.seed = seed;
            auto t = gen_tpch_like(params).lineitem;
            ObjectStore store;
            t.load_into(store);
            TopKSpec tspec;
            tspec.k = 25;
            tspec.order_column = "l_extendedprice";
            auto r = topk_sampling(store, t.info, tspec);
            double model = 25.0 * double(t.info.rows) / double(r.sampled_rows);
            if (double(r.phase2_rows) < model / 3.0 || double(r.phase2_rows) > model * 3.0) {
                detail = "seed " + std::to_string(seed) + ": phase2 " +
                         std::to_string(r.phase2_rows) + " vs model " + format_double(model);
                return false;
            }
        }

        // S sweep on one fixed table: total returned bytes minimized within a
        // decade of the analytic optimum
        TpchParams params;
        params.customers = 100;
        params.orders = 100;
        params.lineitems = 200000;
        params.partitions = 200;
        params.seed = 4;
        auto t = gen_tpch_like(params).lineitem;
        ObjectStore store;
        t.load_into(store);
        double alpha = 0;
        std::vector<std::pair<std::size_t, uint64_t>> sweep;
        for (std::size_t s : {1000u, 10000u, 100000u, 200000u}) {
            TopKSpec tspec;
            tspec.k = 100;
            tspec.order_column = "l_extendedprice";
            tspec.sample_size = s;
            auto r = topk_sampling(store, t.info, tspec);
            alpha = r.alpha_used;
            uint64_t traffic = r.phase1_meter.bytes_returned_select +
                               r.phase1_meter.bytes_returned_get +
                               r.phase2_meter.bytes_returned_select;
            sweep.emplace_back(s, traffic);
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < sweep.size(); ++i)
            if (sweep[i].second < sweep[best].second) best = i;
        double s_opt = std::sqrt(100.0 * double(params.lineitems) / alpha);
        double decades = std::abs(std::log10(double(sweep[best].first) / s_opt));
        detail = "sweep argmin S=" + std::to_string(sweep[best].first) + ", S*=" +
                 format_double(s_opt);
        return decades <= 1.0;
    });

    criterion(12, "top-K oracle equality for K in {1, 10, 100, 1000} on 10^6 rows",
              [](std::string& detail) {
        TpchParams params;
        params.customers = 100;
        params.orders = 100;
        params.lineitems = 1000000;
        params.partitions = 1000;
        params.seed = 12;
        auto t = gen_tpch_like(params).lineitem;
        ObjectStore store;
        t.load_into(store);
        for (std::size_t k : {std::size_t(1), std::size_t(10), std::size_t(100),
                              std::size_t(1000)}) {
            TopKSpec tspec;
            tspec.k = k;
            tspec.order_column = "l_extendedprice";
            auto expected = topk_reference(t, "l_extendedprice", k, true);
            auto server = topk_server(store, t.info, tspec);
            auto sampled = topk_sampling(store, t.info, tspec);
            if (topk_values(server, t.info, "l_extendedprice") != expected ||
                topk_values(sampled, t.info, "l_extendedprice") != expected) {
                detail = "mismatch at K=" + std::to_string(k);
                return false;
            }
            // duplicate-heavy order column (integers 1..50)
            TopKSpec dup = tspec;
            dup.order_column = "l_quantity";
            auto dup_expected = topk_reference(t, "l_quantity", k, true);
            auto dup_sampled = topk_sampling(store, t.info, dup);
            if (topk_values(dup_sampled, t.info, "l_quantity") != dup_expected) {
                detail = "duplicate-column mismatch at K=" + std::to_string(k);
                return false;
            }
        }
        return true;
    });

    criterion(13, "cost model point values exact to 1e-9", [](std::string& detail) {
        MeterSnapshot m;
        m.bytes_scanned = uint64_t(1) << 30;
        double scan = price(m, 0).scan_cost;
        m = {};
        m.get_requests = 1000;
        double req = price(m, 0).request_cost;
        double compute = price({}, 3600).compute_cost;
        std::ostringstream why;
        if (std::abs(scan - 0.002) > 1e-9) why << "scan " << scan << "; ";
        if (std::abs(req - 0.0004) > 1e-9) why << "request " << req << "; ";
        if (std::abs(compute - 2.128) > 1e-9) why << "compute " << compute << "; ";
        detail = why.str();
        return detail.empty();
    });

    criterion(14, "suite: optimized geo-mean model cost below baseline, bytes down 3x+",
              [](std::string& detail) {
        ExperimentSpec spec;
        spec.id = "suite";
        spec.seed = 1;
        auto table = run_experiment(spec);
        const SweepCell* opt_mean = nullptr;
        for (const auto& cell : table.cells) {
            if (!cell.error.empty()) {
                detail = "cell error: " + cell.error;
                return false;
            }
            if (cell.param == "geo-mean" && cell.strategy == "optimized") opt_mean = &cell;
        }
        if (!opt_mean) {
            detail = "no geo-mean row";
            return false;
        }
        double cost_ratio = std::stod(opt_mean->extra.at("cost_ratio_vs_baseline"));
        double bytes_ratio = std::stod(opt_mean->extra.at("bytes_ratio_vs_baseline"));
        double runtime_ratio = std::stod(opt_mean->extra.at("runtime_ratio_vs_baseline"));
        std::ostringstream report;
        report << "cost ratio " << cost_ratio << "x, select-bytes ratio " << bytes_ratio
               << "x; measured runtime ratio " << runtime_ratio
               << "x (informational; wall clock here is not EC2 wall clock)";
        detail = report.str();
        return cost_ratio > 1.0 && bytes_ratio >= 3.0;
    });

    criterion(15, "engine invariants: serial==parallel, fused==unfused, meter additivity",
              [](std::string& detail) {
        ObjectStore store;
        int next = 0;
        for (int p = 0; p < 4; ++p) {
            std::string payload;
            for (int i = 0; i < 500; ++i, ++next)
                payload += std::to_string(next) + "," + std::to_string((next * 13) % 7) + "\n";
            store.put("t." + std::to_string(p), payload, {});
        }
        for (int p = 0; p < 2; ++p) {
            std::string payload;
            for (int i = 0; i < 60; ++i)
                payload += std::to_string((i * 5) % 40) + ",x\n";
            store.put("u." + std::to_string(p), payload, {});
        }

        auto scans_plan = [&](bool with_filter) {
            Plan plan;
            NodeId u = plan.add("union", std::make_shared<UnionOp>(), {"n", "m"});
            for (int p = 0; p < 4; ++p) {
                NodeId s = plan.add("scan" + std::to_string(p),
                                    std::make_shared<ScanSelectOp>("t." + std::to_string(p),
                                                                   "SELECT * FROM S3Object"),
                                    {"n", "m"});
                plan.connect(s, u);
            }
            if (!with_filter) return plan;
            NodeId f = plan.add("filter",
                                std::make_shared<FilterOp>(Expr::binary(
                                    BinOp::Ne, Expr::cast(CastType::Int, Expr::ordinal(2)),
                                    Expr::lit(int64_t(0)))),
                                {"n", "m"});
            plan.connect(u, f);
            return plan;
        };
        auto join_plan = [&]() {
            Plan plan;
            NodeId b = plan.add("bscan", std::make_shared<ScanSelectOp>("u.0",
                                                                        "SELECT * FROM S3Object"),
                                {"k", "x"});
            NodeId pr = plan.add("pscan", std::make_shared<ScanSelectOp>("t.0",
                                                                         "SELECT * FROM S3Object"),
                                 {"n", "m"});
            NodeId j = plan.add("join", std::make_shared<HashJoinOp>(0, 0), {"k", "x", "n", "m"});
            plan.connect(b, j);
            plan.connect(pr, j);
            return plan;
        };

        std::vector<std::function<Plan()>> corpus{
            [&] { return scans_plan(false); },
            [&] { return scans_plan(true); },
            join_plan,
        };
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            auto serial = run_plan(corpus[i](), store, {}, {.mode = ExecMode::Serial});
            auto parallel = run_plan(corpus[i](), store, {}, {.mode = ExecMode::Parallel});
            if (row_set(serial.rows) != row_set(parallel.rows) ||
                !(serial.report.meter == parallel.report.meter)) {
                detail = "serial/parallel mismatch on plan " + std::to_string(i);
                return false;
            }
        }

        // fused vs unfused: scan -> project -> filter chain
        auto chain = [&]() {
            Plan plan;
            NodeId s = plan.add("scan", std::make_shared<ScanSelectOp>("t.0",
                                                                       "SELECT * FROM S3Object"),
                                {"n", "m"});
            NodeId p = plan.add("project",
                                std::make_shared<ProjectOp>(std::vector<Expr>{
                                    Expr::cast(CastType::Int, Expr::ordinal(1)),
                                    Expr::ordinal(2)}),
                                {"n_int", "m"});
            NodeId f = plan.add("filter",
                                std::make_shared<FilterOp>(Expr::binary(
                                    BinOp::Eq,
                                    Expr::binary(BinOp::Mod, Expr::ordinal(1),
                                                 Expr::lit(int64_t(5))),
                                    Expr::lit(int64_t(0)))),
                                {"n_int", "m"});
            plan.connect(s, p);
            plan.connect(p, f);
            return std::make_pair(std::move(plan), std::vector<NodeId>{s, p, f});
        };
        auto [plain, path] = chain();
        auto plain_result = run_plan(plain, store);
        auto [to_fuse, path2] = chain();
        auto fused_result = run_plan(fuse(to_fuse, path2), store);
        if (row_set(plain_result.rows) != row_set(fused_result.rows) ||
            !(plain_result.report.meter == fused_result.report.meter)) {
            detail = "fused/unfused mismatch";
            return false;
        }

        // meter additivity across two disjoint plan runs
        UsageMeter a, b, both;
        run_plan(scans_plan(false), store, {}, {}, &a);
        run_plan(join_plan(), store, {}, {}, &b);
        run_plan(scans_plan(false), store, {}, {}, &both);
        run_plan(join_plan(), store, {}, {}, &both);
        if (!(a.snapshot() + b.snapshot() == both.snapshot())) {
            detail = "meter additivity violated";
            return false;
        }
        return true;
    });

    if (g_failures == 0) {
        std::printf("acceptance: all 15 criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return 1;
}
