#include "pushq/groupby_ops.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>

#include "pushq/csv.hpp"
#include "pushq/sql_eval.hpp"

namespace pushq {

namespace {

using GroupKey = std::vector<std::string>;

const char* agg_name(AggFunc f) {
    switch (f) {
        case AggFunc::Sum: return "sum";
        case AggFunc::Min: return "min";
        case AggFunc::Max: return "max";
        case AggFunc::Count: return "count";
        case AggFunc::Avg: return "avg";
    }
    return "?";
}

Schema result_schema(const GroupBySpec& spec) {
    Schema out = spec.group_columns;
    for (const auto& agg : spec.aggregates)
        out.push_back(std::string(agg_name(agg.func)) + "_" + agg.column);
    return out;
}

// Aggregate accumulator shared by the local paths and the slot merge, so all
// strategies produce bit-identical values on identical inputs.
struct Accum {
    bool has = false;
    double sum = 0;
    int64_t count = 0;
    double extreme = 0;

    void feed(AggFunc f, double v) {
        switch (f) {
            case AggFunc::Count: ++count; break;
            case AggFunc::Sum:
            case AggFunc::Avg:
                sum += v;
                ++count;
                break;
            case AggFunc::Min:
                extreme = has ? std::min(extreme, v) : v;
                break;
            case AggFunc::Max: extreme = has ? std::max(extreme, v) : v; break;
        }
        has = true;
    }

    Value result(AggFunc f) const {
        switch (f) {
            case AggFunc::Count: return Value::integer(count);
            case AggFunc::Sum: return Value::real(sum);
            case AggFunc::Avg: return Value::real(sum / double(count));
            case AggFunc::Min:
            case AggFunc::Max: return Value::real(extreme);
        }
        return Value::null();
    }
};

using GroupMap = std::map<GroupKey, std::vector<Accum>>;

double numeric_field(const Value& v, const std::string& column) {
    double out = 0;
    if (v.kind() != Value::Kind::Text || !parse_double(v.as_text(), out))
        throw TypeError("column " + column + " is not numeric: '" + v.to_string() + "'");
    return out;
}

// Local aggregation over rows whose layout is given by the two index maps.
void aggregate_rows(GroupMap& groups, const std::vector<Row>& rows, const GroupBySpec& spec,
                    const std::vector<std::size_t>& group_idx,
                    const std::vector<std::size_t>& value_idx) {
    GroupKey key(group_idx.size());
    for (const auto& row : rows) {
        for (std::size_t g = 0; g < group_idx.size(); ++g) key[g] = row[group_idx[g]].to_string();
        auto it = groups.find(key);
        if (it == groups.end())
            it = groups.emplace(key, std::vector<Accum>(spec.aggregates.size())).first;
        for (std::size_t a = 0; a < spec.aggregates.size(); ++a) {
            const auto& agg = spec.aggregates[a];
            double v = agg.func == AggFunc::Count
                           ? 0.0
                           : numeric_field(row[value_idx[a]], agg.column);
            it->second[a].feed(agg.func, v);
        }
    }
}

GroupByResult assemble(const GroupMap& groups, const GroupBySpec& spec) {
    GroupByResult out;
    out.schema = result_schema(spec);
    for (const auto& [key, accums] : groups) {
        Row row;
        row.reserve(key.size() + accums.size());
        for (const auto& part : key) row.push_back(Value::text(part));
        for (std::size_t a = 0; a < accums.size(); ++a)
            row.push_back(accums[a].result(spec.aggregates[a].func));
        out.rows.push_back(std::move(row));
    }
    return out;
}

// Referenced columns: groups first, then aggregate inputs (deduped).
std::vector<std::string> referenced(const GroupBySpec& spec) {
    std::vector<std::string> out = spec.group_columns;
    for (const auto& agg : spec.aggregates)
        if (std::find(out.begin(), out.end(), agg.column) == out.end()) out.push_back(agg.column);
    return out;
}

std::vector<Row> run_scan_collect(ObjectStore& store, const TableInfo& table,
                                  const std::string& sql, const Schema& schema,
                                  const GroupByOptions& opts, UsageMeter& meter) {
    Plan plan;
    if (table.partitions.size() == 1) {
        plan.add("scan:" + table.partitions[0],
                 std::make_shared<ScanSelectOp>(table.partitions[0], sql), schema);
    } else {
        NodeId u = plan.add("union", std::make_shared<UnionOp>(), schema);
        for (const auto& part : table.partitions) {
            NodeId s =
                plan.add("scan:" + part, std::make_shared<ScanSelectOp>(part, sql), schema);
            plan.connect(s, u);
        }
    }
    RunOptions run;
    run.mode = opts.mode;
    run.scan_mode = opts.scan_mode;
    return run_plan(plan, store, {}, run, &meter).rows;
}

GroupByResult local_strategy(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts, bool push_projection) {
    auto started = std::chrono::steady_clock::now();
    UsageMeter meter;
    std::vector<std::string> needed = referenced(spec);
    std::vector<std::size_t> group_idx, value_idx;
    std::string sql;
    if (push_projection) {
        sql = "SELECT ";
        for (std::size_t i = 0; i < needed.size(); ++i) {
            if (i) sql += ", ";
            sql += needed[i];
        }
        sql += " FROM S3Object";
        auto pos = [&](const std::string& c) {
            return std::size_t(std::find(needed.begin(), needed.end(), c) - needed.begin());
        };
        for (const auto& g : spec.group_columns) group_idx.push_back(pos(g));
        for (const auto& a : spec.aggregates) value_idx.push_back(pos(a.column));
    } else {
        sql = "SELECT * FROM S3Object";
        for (const auto& g : spec.group_columns) group_idx.push_back(table.column_index(g));
        for (const auto& a : spec.aggregates) value_idx.push_back(table.column_index(a.column));
        // validate group column names eagerly
        for (const auto& g : spec.group_columns) (void)table.column_index(g);
    }
    auto rows = run_scan_collect(store, table, sql,
                                 push_projection ? Schema(needed) : table.columns, opts, meter);
    GroupMap groups;
    aggregate_rows(groups, rows, spec, group_idx, value_idx);
    GroupByResult out = assemble(groups, spec);
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(meter.snapshot(), seconds);
    return out;
}

Expr group_condition(const GroupBySpec& spec, const GroupKey& key) {
    Expr cond = Expr::binary(BinOp::Eq, Expr::column(spec.group_columns[0]),
                             Expr::lit(std::string(key[0])));
    for (std::size_t g = 1; g < spec.group_columns.size(); ++g)
        cond = Expr::binary(BinOp::And, std::move(cond),
                            Expr::binary(BinOp::Eq, Expr::column(spec.group_columns[g]),
                                         Expr::lit(std::string(key[g]))));
    return cond;
}

// Conditional aggregation slots for one group; AVG expands to SUM + COUNT.
void append_slots(std::vector<std::string>& slots, const GroupBySpec& spec, const GroupKey& key) {
    Expr cond = group_condition(spec, key);
    auto cast_col = [](const std::string& col) {
        return Expr::cast(CastType::Decimal, Expr::column(col));
    };
    for (const auto& agg : spec.aggregates) {
        switch (agg.func) {
            case AggFunc::Sum:
                slots.push_back("SUM(" +
                                render_expr(Expr::case_when(cond, cast_col(agg.column),
                                                            Expr::lit(int64_t(0)))) +
                                ")");
                break;
            case AggFunc::Count:
                slots.push_back("SUM(" +
                                render_expr(Expr::case_when(cond, Expr::lit(int64_t(1)),
                                                            Expr::lit(int64_t(0)))) +
                                ")");
                break;
            case AggFunc::Min:
            case AggFunc::Max:
                slots.push_back(std::string(agg.func == AggFunc::Min ? "MIN(" : "MAX(") +
                                render_expr(Expr::case_when(cond, cast_col(agg.column))) + ")");
                break;
            case AggFunc::Avg:
                slots.push_back("SUM(" +
                                render_expr(Expr::case_when(cond, cast_col(agg.column),
                                                            Expr::lit(int64_t(0)))) +
                                ")");
                slots.push_back("SUM(" +
                                render_expr(Expr::case_when(cond, Expr::lit(int64_t(1)),
                                                            Expr::lit(int64_t(0)))) +
                                ")");
                break;
        }
    }
}

std::string slot_query(const GroupBySpec& spec, const std::vector<GroupKey>& groups,
                       std::size_t* slot_count = nullptr) {
    std::vector<std::string> slots;
    for (const auto& key : groups) append_slots(slots, spec, key);
    if (slot_count) *slot_count = slots.size();
    std::string sql = "SELECT ";
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (i) sql += ", ";
        sql += slots[i];
    }
    sql += " FROM S3Object";
    return sql;
}

// Merges one partition's slot row into per-group accumulators.
void merge_slot_row(std::vector<std::vector<Accum>>& accums, const GroupBySpec& spec,
                    const std::vector<std::string_view>& fields) {
    std::size_t f = 0;
    for (std::size_t g = 0; g < accums.size(); ++g) {
        for (std::size_t a = 0; a < spec.aggregates.size(); ++a) {
            AggFunc func = spec.aggregates[a].func;
            Accum& acc = accums[g][a];
            auto next_field = [&]() -> std::string_view {
                if (f >= fields.size()) throw IndexCorrupt("slot row arity mismatch");
                return fields[f++];
            };
            switch (func) {
                case AggFunc::Sum:
                case AggFunc::Count: {
                    double v = 0;
                    std::string_view s = next_field();
                    if (!parse_double(s, v))
                        throw TypeError("bad slot value '" + std::string(s) + "'");
                    if (func == AggFunc::Sum)
                        acc.sum += v;
                    else
                        acc.count += int64_t(v);
                    acc.has = true;
                    break;
                }
                case AggFunc::Min:
                case AggFunc::Max: {
                    std::string_view s = next_field();
                    if (s.empty()) break;  // group absent in this partition
                    double v = 0;
                    if (!parse_double(s, v))
                        throw TypeError("bad slot value '" + std::string(s) + "'");
                    if (!acc.has)
                        acc.extreme = v;
                    else
                        acc.extreme = func == AggFunc::Min ? std::min(acc.extreme, v)
                                                           : std::max(acc.extreme, v);
                    acc.has = true;
                    break;
                }
                case AggFunc::Avg: {
                    double s_v = 0, c_v = 0;
                    std::string_view s1 = next_field();
                    std::string_view s2 = next_field();
                    if (!parse_double(s1, s_v) || !parse_double(s2, c_v))
                        throw TypeError("bad AVG slot pair");
                    acc.sum += s_v;
                    acc.count += int64_t(c_v);
                    acc.has = true;
                    break;
                }
            }
        }
    }
}

// Runs the same aggregate request against every partition concurrently and
// merges the slot rows in partition order.
void run_slot_queries(ObjectStore& store, const TableInfo& table, const std::string& sql,
                      const GroupBySpec& spec, std::vector<std::vector<Accum>>& accums,
                      const GroupByOptions& opts, UsageMeter& meter) {
    const std::size_t n = table.partitions.size();
    std::vector<std::string> payloads(n);
    std::vector<std::exception_ptr> errs(n);
    bool parallel = opts.mode == ExecMode::Parallel && n > 1;
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (std::size_t p = 0; p < n; ++p) {
        try {
            payloads[p] = store.select(table.partitions[p], sql, meter, opts.scan_mode).payload;
        } catch (...) {
            errs[p] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    std::vector<std::string_view> fields;
    for (std::size_t p = 0; p < n; ++p) {
        std::string_view row = payloads[p];
        if (!row.empty() && row.back() == '\n') row.remove_suffix(1);
        split_csv_row(row, ',', fields);
        merge_slot_row(accums, spec, fields);
    }
}

GroupByResult assemble_slots(const std::vector<GroupKey>& groups,
                             const std::vector<std::vector<Accum>>& accums,
                             const GroupBySpec& spec) {
    GroupMap merged;
    for (std::size_t g = 0; g < groups.size(); ++g) merged.emplace(groups[g], accums[g]);
    return assemble(merged, spec);
}

}  // namespace

GroupByResult groupby_server(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts) {
    return local_strategy(store, table, spec, opts, /*push_projection=*/false);
}

GroupByResult groupby_filtered(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                               const GroupByOptions& opts) {
    return local_strategy(store, table, spec, opts, /*push_projection=*/true);
}

GroupByResult groupby_pushed(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts) {
    auto started = std::chrono::steady_clock::now();
    UsageMeter meter;

    // Phase 1: pushed projection of the group columns, deduplicated locally.
    std::string phase1 = "SELECT ";
    for (std::size_t i = 0; i < spec.group_columns.size(); ++i) {
        if (i) phase1 += ", ";
        phase1 += spec.group_columns[i];
    }
    phase1 += " FROM S3Object";
    auto rows = run_scan_collect(store, table, phase1, spec.group_columns, opts, meter);
    std::set<GroupKey> distinct;
    GroupKey key(spec.group_columns.size());
    for (const auto& row : rows) {
        for (std::size_t g = 0; g < key.size(); ++g) key[g] = row[g].to_string();
        distinct.insert(key);
    }
    std::vector<GroupKey> groups(distinct.begin(), distinct.end());

    GroupByResult out;
    if (groups.empty()) {
        out.schema = result_schema(spec);
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        out.report = price(meter.snapshot(), seconds);
        return out;
    }

    // Phase 2: one conditional-slot request per partition.
    std::size_t slot_count = 0;
    std::string phase2 = slot_query(spec, groups, &slot_count);
    std::vector<std::vector<Accum>> accums(groups.size(),
                                           std::vector<Accum>(spec.aggregates.size()));
    run_slot_queries(store, table, phase2, spec, accums, opts, meter);

    out = assemble_slots(groups, accums, spec);
    out.phase2_slots = slot_count;
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(meter.snapshot(), seconds);
    return out;
}

GroupByResult groupby_hybrid(ObjectStore& store, const TableInfo& table, const GroupBySpec& spec,
                             const GroupByOptions& opts) {
    auto started = std::chrono::steady_clock::now();
    UsageMeter sample_meter, q1_meter, q2_meter;

    std::vector<std::size_t> group_pos;
    for (const auto& g : spec.group_columns) group_pos.push_back(table.column_index(g));

    // Phase 1: leading byte prefix of each partition, rounded down to a row
    // boundary, fetched by ranged GET; group frequencies counted locally.
    std::map<GroupKey, std::size_t> freq;
    for (const auto& part : table.partitions) {
        uint64_t size = store.object_size(part);
        uint64_t prefix = uint64_t(double(size) * opts.sample_fraction);
        if (prefix == 0) continue;
        std::string bytes = store.get_range(part, 0, prefix - 1, sample_meter);
        auto last_nl = bytes.rfind('\n');
        if (last_nl == std::string::npos) continue;  // no complete row sampled
        std::string_view data(bytes.data(), last_nl + 1);
        if (table.format.has_header) {
            std::size_t skip = skip_rows_offset(data, 1);
            data.remove_prefix(skip);
        }
        CsvRows it(data);
        std::string_view raw;
        std::vector<std::string_view> fields;
        GroupKey key(group_pos.size());
        while (it.next(raw)) {
            split_csv_row(raw, ',', fields);
            bool ok = true;
            for (std::size_t g = 0; g < group_pos.size(); ++g) {
                if (group_pos[g] >= fields.size()) {
                    ok = false;
                    break;
                }
                key[g] = std::string(fields[group_pos[g]]);
            }
            if (ok) ++freq[key];
        }
    }

    // Rank sampled groups by frequency (ties break on the group value).
    std::vector<std::pair<std::size_t, GroupKey>> ranked;
    for (auto& [key, count] : freq) ranked.emplace_back(count, key);
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<GroupKey> large;
    for (std::size_t i = 0; i < ranked.size() && i < opts.pushed_group_count; ++i)
        large.push_back(ranked[i].second);
    std::sort(large.begin(), large.end());

    // Phase 2. Q1: storage-side slots for the large groups. Q2: ship the
    // complement's rows. Both run concurrently across partitions.
    std::size_t slot_count = 0;
    std::string q1_sql = large.empty() ? std::string() : slot_query(spec, large, &slot_count);

    std::vector<std::string> needed = referenced(spec);
    std::string q2_sql = "SELECT ";
    for (std::size_t i = 0; i < needed.size(); ++i) {
        if (i) q2_sql += ", ";
        q2_sql += needed[i];
    }
    q2_sql += " FROM S3Object";
    if (!large.empty()) {
        q2_sql += " WHERE ";
        for (std::size_t i = 0; i < large.size(); ++i) {
            if (i) q2_sql += " AND ";
            if (spec.group_columns.size() == 1) {
                q2_sql += render_expr(Expr::binary(BinOp::Ne,
                                                   Expr::column(spec.group_columns[0]),
                                                   Expr::lit(std::string(large[i][0]))));
            } else {
                q2_sql += render_expr(Expr::negate(group_condition(spec, large[i])));
            }
        }
    }

    struct Task {
        std::size_t partition;
        bool is_q1;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < table.partitions.size(); ++p) {
        if (!large.empty()) tasks.push_back({p, true});
        tasks.push_back({p, false});
    }
    std::vector<std::string> q1_payloads(table.partitions.size());
    std::vector<std::string> q2_payloads(table.partitions.size());
    std::vector<std::exception_ptr> errs(tasks.size());
    bool parallel = opts.mode == ExecMode::Parallel && tasks.size() > 1;
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        try {
            const auto& task = tasks[t];
            const std::string& part = table.partitions[task.partition];
            if (task.is_q1)
                q1_payloads[task.partition] =
                    store.select(part, q1_sql, q1_meter, opts.scan_mode).payload;
            else
                q2_payloads[task.partition] =
                    store.select(part, q2_sql, q2_meter, opts.scan_mode).payload;
        } catch (...) {
            errs[t] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    // Merge Q1 slot rows.
    std::vector<std::vector<Accum>> accums(large.size(),
                                           std::vector<Accum>(spec.aggregates.size()));
    if (!large.empty()) {
        std::vector<std::string_view> fields;
        for (const auto& payload : q1_payloads) {
            std::string_view row = payload;
            if (!row.empty() && row.back() == '\n') row.remove_suffix(1);
            split_csv_row(row, ',', fields);
            merge_slot_row(accums, spec, fields);
        }
    }
    GroupMap merged;
    for (std::size_t g = 0; g < large.size(); ++g) merged.emplace(large[g], accums[g]);

    // Aggregate Q2 rows locally.
    std::vector<std::size_t> group_idx, value_idx;
    auto pos = [&](const std::string& c) {
        return std::size_t(std::find(needed.begin(), needed.end(), c) - needed.begin());
    };
    for (const auto& g : spec.group_columns) group_idx.push_back(pos(g));
    for (const auto& a : spec.aggregates) value_idx.push_back(pos(a.column));
    std::vector<Row> q2_rows;
    {
        std::vector<std::string_view> fields;
        for (const auto& payload : q2_payloads) {
            CsvRows it(payload);
            std::string_view raw;
            while (it.next(raw)) {
                split_csv_row(raw, ',', fields);
                Row row;
                row.reserve(fields.size());
                for (auto f : fields) row.push_back(Value::text(std::string(f)));
                q2_rows.push_back(std::move(row));
            }
        }
    }
    aggregate_rows(merged, q2_rows, spec, group_idx, value_idx);

    GroupByResult out = assemble(merged, spec);
    out.phase2_slots = slot_count;
    out.sample_meter = sample_meter.snapshot();
    out.q1_meter = q1_meter.snapshot();
    out.q2_meter = q2_meter.snapshot();
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(out.sample_meter + out.q1_meter + out.q2_meter, seconds);
    return out;
}

}  // namespace pushq
