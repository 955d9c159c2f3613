#include "pushq/topk_ops.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "pushq/csv.hpp"
#include "pushq/sql_eval.hpp"

namespace pushq {

namespace {

double order_value(const Row& row, std::size_t col, const std::string& name) {
    double v = 0;
    const Value& field = row[col];
    if (field.kind() != Value::Kind::Text || !parse_double(field.as_text(), v))
        throw TypeError("column " + name + " is not numeric: '" + field.to_string() + "'");
    return v;
}

// Bounded selection heap. Keeps the K best rows; ties at the boundary keep
// the first-encountered row.
class SelectionHeap {
  private:
    bool better(double a, double worst) const { return ascending_ ? a < worst : a > worst; }
    auto cmp() const {
        bool asc = ascending_;
        // heap top = worst kept entry
        return [asc](const auto& a, const auto& b) {
            return asc ? a.first < b.first : a.first > b.first;
        };
    }

  public:
    SelectionHeap(std::size_t k, bool ascending) : k_(k), ascending_(ascending) {}

    void offer(double value, Row row) {
        if (k_ == 0) return;
        if (entries_.size() < k_) {
            entries_.emplace_back(value, std::move(row));
            std::push_heap(entries_.begin(), entries_.end(), cmp());
            return;
        }
        if (!better(value, entries_.front().first)) return;
        std::pop_heap(entries_.begin(), entries_.end(), cmp());
        entries_.back() = {value, std::move(row)};
        std::push_heap(entries_.begin(), entries_.end(), cmp());
    }

    void merge(SelectionHeap&& other) {
        for (auto& [v, row] : other.entries_) offer(v, std::move(row));
    }

    std::vector<std::pair<double, Row>> take_sorted() {
        std::sort(entries_.begin(), entries_.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return ascending_ ? a.first < b.first : a.first > b.first;
            return false;
        });
        return std::move(entries_);
    }

  private:
    std::size_t k_;
    bool ascending_;
    std::vector<std::pair<double, Row>> entries_;
};

std::vector<Row> parse_payload_rows(const std::string& payload) {
    std::vector<Row> rows;
    CsvRows it(payload);
    std::string_view raw;
    std::vector<std::string_view> fields;
    while (it.next(raw)) {
        split_csv_row(raw, ',', fields);
        Row row;
        row.reserve(fields.size());
        for (auto f : fields) {
            if (!f.empty() && f.front() == '"')
                row.push_back(Value::text(unquote_csv_field(f)));
            else
                row.push_back(Value::text(std::string(f)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Per-partition scans feeding per-partition heaps, merged in partition order.
TopKResult heap_over_scans(ObjectStore& store, const TableInfo& table, const TopKSpec& spec,
                           const TopKOptions& opts, const std::string& sql, UsageMeter& meter,
                           std::size_t* qualifying_rows) {
    const std::size_t col = table.column_index(spec.order_column);
    const std::size_t n = table.partitions.size();
    std::vector<std::optional<SelectionHeap>> heaps(n);
    std::vector<std::size_t> counts(n, 0);
    std::vector<std::exception_ptr> errs(n);
    bool parallel = opts.mode == ExecMode::Parallel && n > 1;
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
    for (std::size_t p = 0; p < n; ++p) {
        try {
            auto res = store.select(table.partitions[p], sql, meter, opts.scan_mode);
            SelectionHeap heap(spec.k, spec.ascending);
            auto rows = parse_payload_rows(res.payload);
            counts[p] = rows.size();
            for (auto& row : rows) {
                double v = order_value(row, col, spec.order_column);
                heap.offer(v, std::move(row));
            }
            heaps[p].emplace(std::move(heap));
        } catch (...) {
            errs[p] = std::current_exception();
        }
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);

    SelectionHeap total(spec.k, spec.ascending);
    std::size_t qualifying = 0;
    for (std::size_t p = 0; p < n; ++p) {
        total.merge(std::move(*heaps[p]));
        qualifying += counts[p];
    }
    if (qualifying_rows) *qualifying_rows = qualifying;

    TopKResult out;
    out.schema = table.columns;
    for (auto& [v, row] : total.take_sorted()) out.rows.push_back(std::move(row));
    out.clipped_k = out.rows.size() < spec.k;
    return out;
}

}  // namespace

std::size_t optimal_sample_size(std::size_t k, std::size_t n, double alpha) {
    if (k < 1 || n < k || !(alpha > 0.0) || alpha > 1.0)
        throw InvalidParams("need 1 <= K <= N and alpha in (0, 1]");
    double s = std::sqrt(double(k) * double(n) / alpha);
    auto rounded = std::size_t(std::llround(s));
    return std::min<std::size_t>(std::max<std::size_t>(rounded, k + 1), n);
}

TopKResult topk_server(ObjectStore& store, const TableInfo& table, const TopKSpec& spec,
                       const TopKOptions& opts) {
    if (spec.k < 1) throw InvalidParams("K must be at least 1");
    auto started = std::chrono::steady_clock::now();
    UsageMeter meter;
    auto out = heap_over_scans(store, table, spec, opts, "SELECT * FROM S3Object", meter, nullptr);
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(meter.snapshot(), seconds);
    return out;
}

TopKResult topk_sampling(ObjectStore& store, const TableInfo& table, const TopKSpec& spec,
                         const TopKOptions& opts) {
    if (spec.k < 1) throw InvalidParams("K must be at least 1");
    if (table.rows == 0) throw InvalidParams("table row count unknown");
    auto started = std::chrono::steady_clock::now();
    UsageMeter phase1, phase2;
    const std::size_t col = table.column_index(spec.order_column);

    // Probe the first partition for row geometry (and alpha when not given).
    double alpha = spec.alpha;
    double avg_row_bytes = table.avg_row_bytes;
    {
        uint64_t size = store.object_size(table.partitions[0]);
        uint64_t probe_len = std::min<uint64_t>(size, 64 * 1024);
        if (probe_len == 0) throw SampleTooSmall("first partition is empty");
        std::string bytes = store.get_range(table.partitions[0], 0, probe_len - 1, phase1);
        auto last_nl = bytes.rfind('\n');
        if (last_nl == std::string::npos) throw SampleTooSmall("no complete row in the probe");
        std::string_view data(bytes.data(), last_nl + 1);
        if (table.format.has_header) data.remove_prefix(skip_rows_offset(data, 1));
        CsvRows it(data);
        std::string_view raw;
        std::vector<std::string_view> fields;
        std::size_t rows = 0;
        uint64_t row_bytes = 0, field_bytes = 0;
        while (it.next(raw) && rows < 1000) {
            split_csv_row(raw, ',', fields);
            if (col >= fields.size()) throw SampleTooSmall("probe rows narrower than schema");
            row_bytes += raw.size() + 1;
            field_bytes += fields[col].size() + 1;
            ++rows;
        }
        if (rows == 0) throw SampleTooSmall("no complete row in the probe");
        avg_row_bytes = double(row_bytes) / double(rows);
        if (alpha <= 0) alpha = double(field_bytes) / double(row_bytes);
    }

    std::size_t want = spec.sample_size ? spec.sample_size
                                        : optimal_sample_size(spec.k, table.rows, alpha);
    if (want <= spec.k) throw InvalidParams("sample size must exceed K");

    // Phase 1: collect at least `want` order values.
    std::vector<double> sample;
    sample.reserve(want);
    if (spec.row_random) {
        // Leading rows are random: pushed projection of the order column over
        // as many leading partitions as needed.
        std::string sql = "SELECT " + spec.order_column + " FROM S3Object";
        for (const auto& part : table.partitions) {
            if (sample.size() >= want) break;
            auto res = store.select(part, sql, phase1, opts.scan_mode);
            CsvRows it(res.payload);
            std::string_view raw;
            while (it.next(raw)) {
                double v = 0;
                if (!parse_double(raw, v))
                    throw TypeError("column " + spec.order_column + " is not numeric: '" +
                                    std::string(raw) + "'");
                sample.push_back(v);
            }
        }
    } else {
        // Random byte-offset chunks rounded to row boundaries; the first
        // (possibly partial) line of every chunk is discarded and rows are
        // deduplicated by absolute offset.
        std::mt19937_64 rng(opts.seed);
        std::size_t chunk_bytes = std::max<std::size_t>(std::size_t(avg_row_bytes * 24), 512);
        std::set<std::pair<std::size_t, uint64_t>> seen;
        std::size_t attempts = 0;
        const std::size_t max_attempts = 40 + 20 * (want / std::max<std::size_t>(
                                                               std::size_t(double(chunk_bytes) /
                                                                           avg_row_bytes),
                                                               1));
        std::uniform_int_distribution<std::size_t> pick_part(0, table.partitions.size() - 1);
        while (sample.size() < want && attempts < max_attempts) {
            ++attempts;
            std::size_t p = pick_part(rng);
            uint64_t size = store.object_size(table.partitions[p]);
            if (size < 2) continue;
            uint64_t span = std::min<uint64_t>(chunk_bytes, size);
            std::uniform_int_distribution<uint64_t> pick_off(0, size - span);
            uint64_t off = pick_off(rng);
            std::string bytes = store.get_range(table.partitions[p], off, off + span - 1, phase1);
            std::string_view data = bytes;
            // drop the leading partial line (also skips any header at off 0)
            auto first_nl = data.find('\n');
            if (first_nl == std::string_view::npos) continue;
            uint64_t row_off = off + first_nl + 1;
            data.remove_prefix(first_nl + 1);
            auto last_nl = data.rfind('\n');
            if (last_nl == std::string_view::npos) continue;
            data = data.substr(0, last_nl + 1);
            CsvRows it(data);
            std::string_view raw;
            std::vector<std::string_view> fields;
            while (it.next(raw)) {
                if (seen.emplace(p, row_off).second) {
                    split_csv_row(raw, ',', fields);
                    if (col < fields.size()) {
                        double v = 0;
                        if (parse_double(fields[col], v)) sample.push_back(v);
                    }
                }
                row_off += raw.size() + 1;
            }
        }
        if (sample.size() < want && sample.size() < spec.k)
            throw SampleTooSmall("could not gather " + std::to_string(want) + " sampled rows");
    }
    if (sample.size() < spec.k)
        throw SampleTooSmall("sample holds " + std::to_string(sample.size()) + " rows, K = " +
                             std::to_string(spec.k));

    // Threshold: K-th best sampled value. The sample already contains K rows
    // at or inside it, so no true top-K row can be excluded.
    std::size_t kth = spec.k - 1;
    if (spec.ascending)
        std::nth_element(sample.begin(), sample.begin() + kth, sample.end());
    else
        std::nth_element(sample.begin(), sample.begin() + kth, sample.end(),
                         std::greater<double>());
    double threshold = sample[kth];

    // Phase 2: non-strict threshold predicate pushed to every partition.
    std::string sql = "SELECT * FROM S3Object WHERE CAST(" + spec.order_column + " AS DECIMAL) " +
                      (spec.ascending ? "<= " : ">= ") + format_double(threshold);
    std::size_t qualifying = 0;
    TopKOptions phase2_opts = opts;
    auto out = heap_over_scans(store, table, spec, phase2_opts, sql, phase2, &qualifying);

    out.threshold = threshold;
    out.sampled_rows = sample.size();
    out.phase2_rows = qualifying;
    out.alpha_used = alpha;
    out.phase1_meter = phase1.snapshot();
    out.phase2_meter = phase2.snapshot();
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.report = price(out.phase1_meter + out.phase2_meter, seconds);
    return out;
}

}  // namespace pushq
