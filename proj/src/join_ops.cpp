#include "pushq/join_ops.hpp"

#include <chrono>
#include <set>
#include <unordered_map>

#include "pushq/sql_eval.hpp"

namespace pushq {

namespace {

std::size_t key_slot(const JoinSide& side) {
    for (std::size_t i = 0; i < side.projection.size(); ++i)
        if (side.projection[i] == side.key_column) return i;
    throw InvalidParams("join projection must include the key column " + side.key_column);
}

std::string pushed_sql(const JoinSide& side, const std::string& extra_predicate = {}) {
    std::string sql = "SELECT ";
    for (std::size_t i = 0; i < side.projection.size(); ++i) {
        if (i) sql += ", ";
        sql += side.projection[i];
    }
    sql += " FROM S3Object";
    std::string where;
    if (side.predicate) where = "(" + render_expr(*side.predicate) + ")";
    if (!extra_predicate.empty()) {
        if (!where.empty()) where += " AND ";
        where += "(" + extra_predicate + ")";
    }
    if (!where.empty()) sql += " WHERE " + where;
    return sql;
}

// scans -> union, scans metered on `side_meter`; returns the subtree tail
NodeId add_scan_subtree(Plan& plan, const TableInfo& table, const std::string& sql,
                        const Schema& schema, UsageMeter* side_meter) {
    if (table.partitions.size() == 1)
        return plan.add("scan:" + table.partitions[0],
                        std::make_shared<ScanSelectOp>(table.partitions[0], sql, side_meter),
                        schema);
    NodeId u = plan.add("union:" + table.name, std::make_shared<UnionOp>(), schema);
    for (const auto& part : table.partitions) {
        NodeId s = plan.add("scan:" + part, std::make_shared<ScanSelectOp>(part, sql, side_meter),
                            schema);
        plan.connect(s, u);
    }
    return u;
}

// local filter + projection for the baseline path
NodeId add_local_shaping(Plan& plan, NodeId tail, const JoinSide& side) {
    if (side.predicate) {
        NodeId f = plan.add("filter:" + side.table.name,
                            std::make_shared<FilterOp>(bind_columns(*side.predicate,
                                                                    &side.table.columns)),
                            side.table.columns);
        plan.connect(tail, f);
        tail = f;
    }
    std::vector<Expr> cols;
    for (const auto& name : side.projection)
        cols.push_back(Expr::ordinal(int64_t(side.table.column_index(name)) + 1));
    NodeId p = plan.add("project:" + side.table.name, std::make_shared<ProjectOp>(std::move(cols)),
                        side.projection);
    plan.connect(tail, p);
    return p;
}

Schema joined_schema(const JoinSide& build, const JoinSide& probe) {
    Schema out = build.projection;
    out.insert(out.end(), probe.projection.begin(), probe.projection.end());
    return out;
}

JoinStrategyResult run_two_sided(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                                 const JoinOptions& opts, bool pushdown) {
    auto started = std::chrono::steady_clock::now();
    UsageMeter build_meter, probe_meter;
    Plan plan;
    NodeId build_tail, probe_tail;
    if (pushdown) {
        build_tail = add_scan_subtree(plan, build.table, pushed_sql(build), build.projection,
                                      &build_meter);
        probe_tail = add_scan_subtree(plan, probe.table, pushed_sql(probe), probe.projection,
                                      &probe_meter);
    } else {
        build_tail = add_scan_subtree(plan, build.table, "SELECT * FROM S3Object",
                                      build.table.columns, &build_meter);
        build_tail = add_local_shaping(plan, build_tail, build);
        probe_tail = add_scan_subtree(plan, probe.table, "SELECT * FROM S3Object",
                                      probe.table.columns, &probe_meter);
        probe_tail = add_local_shaping(plan, probe_tail, probe);
    }
    NodeId join = plan.add("hashjoin", std::make_shared<HashJoinOp>(key_slot(build), key_slot(probe)),
                           joined_schema(build, probe));
    plan.connect(build_tail, join);  // input 0 = build
    plan.connect(probe_tail, join);  // input 1 = probe

    RunOptions run;
    run.mode = opts.mode;
    run.scan_mode = opts.scan_mode;
    UsageMeter unused;
    auto result = run_plan(plan, store, {}, run, &unused);

    JoinStrategyResult out;
    out.rows = std::move(result.rows);
    out.schema = std::move(result.schema);
    out.build_meter = build_meter.snapshot();
    out.probe_meter = probe_meter.snapshot();
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(out.build_meter + out.probe_meter + unused.snapshot(), seconds);
    return out;
}

}  // namespace

JoinStrategyResult join_baseline(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                                 const JoinOptions& opts) {
    return run_two_sided(store, build, probe, opts, /*pushdown=*/false);
}

JoinStrategyResult join_filtered(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                                 const JoinOptions& opts) {
    return run_two_sided(store, build, probe, opts, /*pushdown=*/true);
}

JoinStrategyResult join_bloom(ObjectStore& store, const JoinSide& build, const JoinSide& probe,
                              const JoinOptions& opts) {
    auto started = std::chrono::steady_clock::now();
    UsageMeter build_meter, probe_meter;
    const std::size_t build_key = key_slot(build);
    const std::size_t probe_key = key_slot(probe);

    // Build phase: pushed scan of the first table, collected locally.
    Plan build_plan;
    add_scan_subtree(build_plan, build.table, pushed_sql(build), build.projection, &build_meter);
    RunOptions run;
    run.mode = opts.mode;
    run.scan_mode = opts.scan_mode;
    UsageMeter unused;
    auto build_rows = run_plan(build_plan, store, {}, run, &unused).rows;

    JoinStrategyResult out;
    out.schema = joined_schema(build, probe);

    auto finish = [&](std::vector<Row> rows) {
        out.rows = std::move(rows);
        out.build_meter = build_meter.snapshot();
        out.probe_meter = probe_meter.snapshot();
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.report = price(out.build_meter + out.probe_meter, seconds);
        return out;
    };

    // Empty build side: nothing can match, the probe scan is skipped.
    if (build_rows.empty()) return finish({});

    // Join keys must be integers; the hash functions support nothing else.
    std::set<int64_t> distinct_keys;
    for (const auto& row : build_rows) {
        int64_t key = 0;
        const Value& v = row[build_key];
        if (v.kind() != Value::Kind::Text || !parse_int64(v.as_text(), key) || key < 0)
            throw NonIntegerJoinKey("build-side join key '" + v.to_string() +
                                    "' is not a non-negative integer");
        distinct_keys.insert(key);
    }
    std::vector<int64_t> keys(distinct_keys.begin(), distinct_keys.end());

    // Size the filter against the full request text budget.
    std::string base_sql = pushed_sql(probe, "@");  // placeholder for the filter term
    std::size_t budget = base_sql.size() - 1 <= kSelectExpressionLimit
                             ? kSelectExpressionLimit - (base_sql.size() - 1)
                             : 0;
    auto fitted = bloom_fit_to_limit(keys.size(), opts.bloom_fpr, budget,
                                     probe.key_column.size(), keys.back());

    std::string probe_sql;
    if (fitted) {
        BloomFilter filter = bloom_create(keys, *fitted, opts.seed);
        probe_sql = pushed_sql(probe, filter.to_sql_predicate(probe.key_column));
        out.fitted_fpr = *fitted;
    } else {
        // No rate < 1 fits: plain filtered probe, scans already serialized.
        probe_sql = pushed_sql(probe);
        out.degraded = true;
    }

    // Probe phase: hash table over the build rows (read-only during probing),
    // one probe operator per partition scan.
    std::unordered_multimap<std::string, std::size_t> table;
    table.reserve(build_rows.size());
    for (std::size_t i = 0; i < build_rows.size(); ++i)
        table.emplace(build_rows[i][build_key].to_string(), i);

    auto probe_fn = [&table, &build_rows, probe_key](const TupleBatch& batch, Emitter& emit) {
        for (const auto& row : batch.rows) {
            auto [lo, hi] = table.equal_range(row[probe_key].to_string());
            for (auto it = lo; it != hi; ++it) {
                Row joined = build_rows[it->second];
                joined.insert(joined.end(), row.begin(), row.end());
                emit.emit_row(std::move(joined));
            }
        }
    };

    Plan probe_plan;
    NodeId u = probe_plan.add("union", std::make_shared<UnionOp>(), out.schema);
    for (const auto& part : probe.table.partitions) {
        NodeId s = probe_plan.add("scan:" + part,
                                  std::make_shared<ScanSelectOp>(part, probe_sql, &probe_meter),
                                  probe.projection);
        NodeId pr = probe_plan.add("probe:" + part, std::make_shared<MapOp>(probe_fn), out.schema);
        probe_plan.connect(s, pr);
        probe_plan.connect(pr, u);
    }
    auto probe_result = run_plan(probe_plan, store, {}, run, &unused);
    return finish(std::move(probe_result.rows));
}

}  // namespace pushq
