#include "pushq/store.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "pushq/sql_eval.hpp"
#include "pushq/sql_parser.hpp"

namespace pushq {

namespace {

// Deterministic chunking: boundaries depend only on the payload, never on the
// thread count, so serial and parallel scans produce identical bytes.
constexpr std::size_t kScanChunkBytes = 1 << 18;

std::vector<std::size_t> chunk_boundaries(std::string_view data) {
    std::vector<std::size_t> bounds{0};
    std::size_t target = kScanChunkBytes;
    while (target < data.size()) {
        auto nl = data.find('\n', target);
        if (nl == std::string_view::npos) break;
        if (nl + 1 < data.size()) bounds.push_back(nl + 1);
        target = std::max(target + kScanChunkBytes, nl + 1);
    }
    bounds.push_back(data.size());
    return bounds;
}

struct ChunkOutput {
    std::string payload;
    std::size_t rows = 0;
};

// Row loop shared by the serial and parallel scan paths.
ChunkOutput scan_chunk(std::string_view chunk, const SelectQuery& bound, char delimiter) {
    ChunkOutput out;
    const bool star = bound.is_star();
    std::vector<std::string_view> fields;
    std::vector<Value> row;
    std::vector<std::string> texts;
    std::vector<std::string_view> projected;
    CsvRows rows(chunk);
    std::string_view raw;
    while (rows.next(raw)) {
        split_csv_row(raw, delimiter, fields);
        row.clear();
        for (auto f : fields) {
            if (!f.empty() && f.front() == '"')
                row.push_back(Value::text(unquote_csv_field(f)));
            else
                row.push_back(Value::text(std::string(f)));
        }
        auto result = evaluate_row(bound, row);
        if (!result) continue;
        ++out.rows;
        if (star) {
            // Qualifying rows pass through byte-for-byte.
            out.payload.append(raw);
            out.payload.push_back('\n');
            continue;
        }
        texts.clear();
        projected.clear();
        for (const auto& v : *result) texts.push_back(v.to_string());
        for (const auto& t : texts) projected.push_back(t);
        append_csv_row(out.payload, projected, delimiter);
    }
    return out;
}

AggregateEvaluator scan_chunk_aggregate(std::string_view chunk, const SelectQuery& bound,
                                        char delimiter) {
    AggregateEvaluator agg(bound);
    std::vector<std::string_view> fields;
    std::vector<Value> row;
    CsvRows rows(chunk);
    std::string_view raw;
    while (rows.next(raw)) {
        split_csv_row(raw, delimiter, fields);
        row.clear();
        for (auto f : fields) {
            if (!f.empty() && f.front() == '"')
                row.push_back(Value::text(unquote_csv_field(f)));
            else
                row.push_back(Value::text(std::string(f)));
        }
        agg.feed(row);
    }
    return agg;
}

}  // namespace

void ObjectStore::put(std::string name, std::string bytes, CsvFormat format) {
    if (objects_.count(name)) throw DuplicateName("object already exists: " + name);
    StoredObject obj;
    obj.name = name;
    obj.bytes = std::move(bytes);
    obj.format = format;
    objects_.emplace(std::move(name), std::move(obj));
}

void ObjectStore::put_file(const std::string& name, const std::string& path, CsvFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    put(name, std::move(buf).str(), format);
}

const StoredObject& ObjectStore::find(const std::string& name) const {
    auto it = objects_.find(name);
    if (it == objects_.end()) throw NoSuchObject("no such object: " + name);
    return it->second;
}

std::vector<std::string> ObjectStore::partitions_of(const std::string& table) const {
    // Names sort as "<table>.<k>"; collect and order numerically by k.
    std::vector<std::pair<long, std::string>> found;
    std::string prefix = table + ".";
    for (auto it = objects_.lower_bound(prefix); it != objects_.end(); ++it) {
        const std::string& name = it->first;
        if (name.compare(0, prefix.size(), prefix) != 0) break;
        std::string_view rest = std::string_view(name).substr(prefix.size());
        long idx = 0;
        bool numeric = !rest.empty();
        for (char c : rest) {
            if (c < '0' || c > '9') {
                numeric = false;
                break;
            }
            idx = idx * 10 + (c - '0');
        }
        if (numeric) found.emplace_back(idx, name);
    }
    std::sort(found.begin(), found.end());
    std::vector<std::string> out;
    out.reserve(found.size());
    for (auto& [_, name] : found) out.push_back(std::move(name));
    return out;
}

void ObjectStore::log(RequestRecord::Kind kind, const std::string& object, uint64_t returned,
                      std::string_view sql) const {
    uint64_t seq = seq_.fetch_add(1, std::memory_order_relaxed);
    if (!opts_.log_requests) return;
    std::lock_guard<std::mutex> lock(log_mutex_);
    log_.push_back({seq, kind, object, returned, std::string(sql)});
}

std::vector<RequestRecord> ObjectStore::take_log() {
    std::lock_guard<std::mutex> lock(log_mutex_);
    return std::exchange(log_, {});
}

void ObjectStore::apply_latency() const {
    if (opts_.latency_ms > 0)
        std::this_thread::sleep_for(std::chrono::milliseconds(opts_.latency_ms));
}

std::string ObjectStore::get_range(const std::string& name, uint64_t first_byte,
                                   uint64_t last_byte, UsageMeter& meter) const {
    const StoredObject& obj = find(name);
    if (first_byte > last_byte || last_byte >= obj.bytes.size())
        throw RangeOutOfBounds("range [" + std::to_string(first_byte) + ", " +
                               std::to_string(last_byte) + "] out of bounds for " + name + " (" +
                               std::to_string(obj.bytes.size()) + " bytes)");
    apply_latency();
    uint64_t len = last_byte - first_byte + 1;
    meter.add_get_request();
    meter.add_scanned(len);
    meter.add_returned_get(len);
    log(RequestRecord::Kind::Get, name, len);
    return obj.bytes.substr(first_byte, len);
}

std::vector<std::string> ObjectStore::get_multirange(
    const std::string& name, std::span<const std::pair<uint64_t, uint64_t>> ranges,
    UsageMeter& meter) const {
    const StoredObject& obj = find(name);
    for (const auto& [first, last] : ranges) {
        if (first > last || last >= obj.bytes.size())
            throw RangeOutOfBounds("multi-range request out of bounds for " + name);
    }
    apply_latency();
    std::vector<std::string> out;
    out.reserve(ranges.size());
    uint64_t total = 0;
    for (const auto& [first, last] : ranges) {
        uint64_t len = last - first + 1;
        total += len;
        out.push_back(obj.bytes.substr(first, len));
    }
    meter.add_get_request();  // one request regardless of range count
    meter.add_scanned(total);
    meter.add_returned_get(total);
    log(RequestRecord::Kind::MultiGet, name, total);
    return out;
}

SelectResult ObjectStore::select(const std::string& name, std::string_view sql, UsageMeter& meter,
                                 ScanMode mode) const {
    if (sql.size() > kSelectExpressionLimit)
        throw ExpressionTooLarge("SQL text of " + std::to_string(sql.size()) +
                                 " bytes exceeds the " +
                                 std::to_string(kSelectExpressionLimit) + "-byte limit");
    const StoredObject& obj = find(name);
    apply_latency();
    meter.add_select_request();
    meter.add_scanned(obj.bytes.size());

    SelectQuery query = parse_select(sql);

    std::string_view data = obj.bytes;
    ColumnMap header;
    if (obj.format.has_header && !data.empty()) {
        std::string_view header_row;
        CsvRows rows(data);
        rows.next(header_row);
        std::vector<std::string_view> fields;
        split_csv_row(header_row, obj.format.delimiter, fields);
        for (auto f : fields) header.emplace_back(unquote_csv_field(f));
        data.remove_prefix(std::min(data.size(), header_row.size() + 1));
    }
    SelectQuery bound = bind_columns(query, obj.format.has_header ? &header : nullptr);

    auto bounds = chunk_boundaries(data);
    const std::size_t n_chunks = bounds.size() - 1;
    SelectResult result;

    if (bound.is_aggregate()) {
        std::vector<std::optional<AggregateEvaluator>> parts(n_chunks);
        if (mode == ScanMode::Parallel && n_chunks > 1) {
            std::vector<std::exception_ptr> errs(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
            for (std::size_t i = 0; i < n_chunks; ++i) {
                try {
                    parts[i] = scan_chunk_aggregate(
                        data.substr(bounds[i], bounds[i + 1] - bounds[i]), bound,
                        obj.format.delimiter);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
            for (auto& e : errs)
                if (e) std::rethrow_exception(e);
        } else {
            for (std::size_t i = 0; i < n_chunks; ++i)
                parts[i] = scan_chunk_aggregate(data.substr(bounds[i], bounds[i + 1] - bounds[i]),
                                                bound, obj.format.delimiter);
        }
        // Merge chunk accumulators in chunk order so results do not depend on
        // the execution mode.
        AggregateEvaluator total(bound);
        for (const auto& p : parts) total.merge(*p);
        auto row = total.finish();
        std::vector<std::string> texts;
        std::vector<std::string_view> views;
        for (const auto& v : row) texts.push_back(v.to_string());
        for (const auto& t : texts) views.push_back(t);
        append_csv_row(result.payload, views, obj.format.delimiter);
        result.row_count = 1;
    } else {
        std::vector<ChunkOutput> parts(n_chunks);
        if (mode == ScanMode::Parallel && n_chunks > 1) {
            std::vector<std::exception_ptr> errs(n_chunks);
#pragma omp parallel for schedule(dynamic, 1)
            for (std::size_t i = 0; i < n_chunks; ++i) {
                try {
                    parts[i] = scan_chunk(data.substr(bounds[i], bounds[i + 1] - bounds[i]),
                                          bound, obj.format.delimiter);
                } catch (...) {
                    errs[i] = std::current_exception();
                }
            }
            for (auto& e : errs)
                if (e) std::rethrow_exception(e);
        } else {
            for (std::size_t i = 0; i < n_chunks; ++i)
                parts[i] = scan_chunk(data.substr(bounds[i], bounds[i + 1] - bounds[i]), bound,
                                      obj.format.delimiter);
        }
        std::size_t total_bytes = 0;
        for (const auto& p : parts) total_bytes += p.payload.size();
        result.payload.reserve(total_bytes);
        for (auto& p : parts) {
            result.payload.append(p.payload);
            result.row_count += p.rows;
        }
    }

    meter.add_returned_select(result.payload.size());
    log(RequestRecord::Kind::Select, name, result.payload.size(), sql);
    return result;
}

void ObjectStore::drop_all() { objects_.clear(); }

}  // namespace pushq
