#include "pushq/filter_ops.hpp"

#include <chrono>

#include "pushq/csv.hpp"
#include "pushq/sql_eval.hpp"

namespace pushq {

namespace {

Row parse_text_row(std::string_view raw, char delimiter) {
    std::vector<std::string_view> fields;
    split_csv_row(raw, delimiter, fields);
    Row row;
    row.reserve(fields.size());
    for (auto f : fields) {
        if (!f.empty() && f.front() == '"')
            row.push_back(Value::text(unquote_csv_field(f)));
        else
            row.push_back(Value::text(std::string(f)));
    }
    return row;
}

Plan scan_union_plan(const TableInfo& table, const std::string& sql, Schema out_schema) {
    Plan plan;
    if (table.partitions.size() == 1) {
        plan.add("scan:" + table.partitions[0], std::make_shared<ScanSelectOp>(table.partitions[0], sql),
                 out_schema);
        return plan;
    }
    NodeId u = plan.add("union", std::make_shared<UnionOp>(), out_schema);
    for (const auto& part : table.partitions) {
        NodeId s = plan.add("scan:" + part, std::make_shared<ScanSelectOp>(part, sql), out_schema);
        plan.connect(s, u);
    }
    return plan;
}

RunOptions run_options(const FilterOptions& opts) {
    RunOptions run;
    run.mode = opts.mode;
    run.scan_mode = opts.scan_mode;
    return run;
}

}  // namespace

std::vector<std::string> build_index(ObjectStore& store, const TableInfo& table,
                                     const std::string& column) {
    std::size_t col = table.column_index(column);  // throws NoSuchColumn
    std::vector<std::string> index_names;
    for (const auto& part : table.partitions) {
        const StoredObject& obj = store.object(part);
        std::string_view data = obj.bytes;
        std::size_t offset = 0;
        if (obj.format.has_header && !data.empty()) {
            std::size_t skip = skip_rows_offset(data, 1);
            offset = skip;
            data.remove_prefix(skip);
        }
        std::string index_payload;
        std::vector<std::string_view> fields;
        CsvRows rows(data);
        std::string_view raw;
        while (rows.next(raw)) {
            split_csv_row(raw, obj.format.delimiter, fields);
            if (col >= fields.size())
                throw NoSuchColumn("row in " + part + " is missing column " + column);
            // inclusive range covering the row and its newline
            std::size_t first = offset;
            std::size_t last = offset + raw.size();  // newline position
            if (last >= obj.bytes.size()) last = obj.bytes.size() - 1;  // no trailing newline
            std::string value = !fields[col].empty() && fields[col].front() == '"'
                                    ? unquote_csv_field(fields[col])
                                    : std::string(fields[col]);
            std::vector<std::string_view> out_fields{value, "", ""};
            std::string first_s = std::to_string(first), last_s = std::to_string(last);
            out_fields[1] = first_s;
            out_fields[2] = last_s;
            append_csv_row(index_payload, out_fields, ',');
            offset += raw.size() + 1;
        }
        std::string index_name = part + ".idx." + column;
        if (store.exists(index_name)) {
            if (store.object(index_name).bytes != index_payload)
                throw IndexCorrupt("existing index " + index_name + " does not match the data");
        } else {
            store.put(index_name, index_payload, {',', false});
        }
        index_names.push_back(std::move(index_name));
    }
    return index_names;
}

FilterStrategyResult filter_server_side(ObjectStore& store, const TableInfo& table,
                                        const Expr& predicate, const FilterOptions& opts) {
    Plan scans = scan_union_plan(table, "SELECT * FROM S3Object", table.columns);
    NodeId tail = scans.sink();
    NodeId filter = scans.add("filter", std::make_shared<FilterOp>(bind_columns(predicate, &table.columns)),
                              table.columns);
    scans.connect(tail, filter);
    UsageMeter meter;
    auto run = run_plan(scans, store, {}, run_options(opts), &meter);
    return {std::move(run.rows), std::move(run.schema), run.report};
}

FilterStrategyResult filter_pushed(ObjectStore& store, const TableInfo& table,
                                   const Expr& predicate, const FilterOptions& opts) {
    SelectQuery q;
    q.projections.push_back(Expr::star());
    q.where = predicate;
    Plan scans = scan_union_plan(table, render_sql(q), table.columns);
    UsageMeter meter;
    auto run = run_plan(scans, store, {}, run_options(opts), &meter);
    return {std::move(run.rows), std::move(run.schema), run.report};
}

FilterStrategyResult filter_indexed(ObjectStore& store, const TableInfo& table,
                                    const std::string& column, const Expr& predicate,
                                    const FilterOptions& opts) {
    for (const auto& ref : referenced_columns(predicate))
        if (ref != column)
            throw InvalidParams("indexed filter predicate may reference only " + column +
                                ", found " + ref);
    auto started = std::chrono::steady_clock::now();
    UsageMeter meter;

    // Phase 1: push the predicate to each partition's index object. The
    // index stores the value in field 1 and offsets in fields 2..3.
    SelectQuery q;
    q.projections.push_back(Expr::star());
    q.where = rewrite_columns(predicate, column, Expr::ordinal(1));
    std::string phase1_sql = render_sql(q);

    struct RowRange {
        std::size_t partition;
        uint64_t first, last;
    };
    std::vector<RowRange> ranges;
    for (std::size_t p = 0; p < table.partitions.size(); ++p) {
        const std::string index_name = table.partitions[p] + ".idx." + column;
        SelectResult res;
        try {
            res = store.select(index_name, phase1_sql, meter, opts.scan_mode);
        } catch (const TypeError& e) {
            // the pushed predicate could not evaluate over the index rows
            throw IndexCorrupt("index " + index_name + " is unusable: " + e.what());
        } catch (const ColumnOutOfRange& e) {
            throw IndexCorrupt("index " + index_name + " is unusable: " + e.what());
        }
        uint64_t object_size = store.object_size(table.partitions[p]);
        CsvRows rows(res.payload);
        std::string_view raw;
        std::vector<std::string_view> fields;
        while (rows.next(raw)) {
            split_csv_row(raw, ',', fields);
            int64_t first = 0, last = 0;
            if (fields.size() != 3 || !parse_int64(fields[1], first) ||
                !parse_int64(fields[2], last) || first < 0 || last < first ||
                uint64_t(last) >= object_size)
                throw IndexCorrupt("malformed index row in " + index_name + ": " +
                                   std::string(raw));
            ranges.push_back({p, uint64_t(first), uint64_t(last)});
        }
    }

    // Phase 2: fetch each selected row by byte range.
    std::vector<Row> rows(ranges.size());
    std::vector<std::exception_ptr> errors;
    if (opts.multirange) {
        // one multi-range GET per partition that has matches
        for (std::size_t p = 0; p < table.partitions.size(); ++p) {
            std::vector<std::pair<uint64_t, uint64_t>> spans;
            std::vector<std::size_t> slots;
            for (std::size_t i = 0; i < ranges.size(); ++i) {
                if (ranges[i].partition != p) continue;
                spans.emplace_back(ranges[i].first, ranges[i].last);
                slots.push_back(i);
            }
            if (spans.empty()) continue;
            auto chunks = store.get_multirange(table.partitions[p], spans, meter);
            for (std::size_t j = 0; j < chunks.size(); ++j) {
                std::string_view body = chunks[j];
                if (!body.empty() && body.back() == '\n') body.remove_suffix(1);
                rows[slots[j]] = parse_text_row(body, table.format.delimiter);
            }
        }
    } else {
        const std::size_t n = ranges.size();
        std::mutex error_mutex;
        int threads = int(std::min<std::size_t>(opts.max_parallel_gets, n ? n : 1));
        bool parallel = opts.mode == ExecMode::Parallel && n > 1;
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads) if (parallel)
        for (std::size_t i = 0; i < n; ++i) {
            try {
                auto body = store.get_range(table.partitions[ranges[i].partition],
                                            ranges[i].first, ranges[i].last, meter);
                std::string_view view = body;
                if (!view.empty() && view.back() == '\n') view.remove_suffix(1);
                rows[i] = parse_text_row(view, table.format.delimiter);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                errors.push_back(std::current_exception());
            }
        }
        if (!errors.empty()) std::rethrow_exception(errors.front());
    }

    for (const auto& row : rows)
        if (row.size() != table.columns.size())
            throw IndexCorrupt("fetched row arity does not match the table schema");

    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    FilterStrategyResult out;
    out.rows = std::move(rows);
    out.schema = table.columns;
    out.report = price(meter.snapshot(), seconds);
    return out;
}

}  // namespace pushq
