#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pushq/common.hpp"
#include "pushq/csv.hpp"

namespace pushq {

// Hard cap on the SQL text accepted by a Select request, applied to the whole
// query string.
inline constexpr std::size_t kSelectExpressionLimit = 256 * 1024;

enum class ScanMode : uint8_t { Serial, Parallel };

// Per-query counters. Select-returned and GET-returned bytes are tracked
// separately because only Select traffic is priced for transfer.
struct MeterSnapshot {
    uint64_t bytes_scanned = 0;
    uint64_t bytes_returned_select = 0;
    uint64_t bytes_returned_get = 0;
    uint64_t get_requests = 0;
    uint64_t select_requests = 0;

    uint64_t bytes_returned() const { return bytes_returned_select + bytes_returned_get; }

    MeterSnapshot& operator+=(const MeterSnapshot& o) {
        bytes_scanned += o.bytes_scanned;
        bytes_returned_select += o.bytes_returned_select;
        bytes_returned_get += o.bytes_returned_get;
        get_requests += o.get_requests;
        select_requests += o.select_requests;
        return *this;
    }
    friend MeterSnapshot operator+(MeterSnapshot a, const MeterSnapshot& b) { return a += b; }
    bool operator==(const MeterSnapshot&) const = default;
};

// Atomic counters shared by every worker of one query.
class UsageMeter {
  public:
    UsageMeter() = default;

    void add_scanned(uint64_t n) { bytes_scanned_.fetch_add(n, std::memory_order_relaxed); }
    void add_returned_select(uint64_t n) {
        bytes_returned_select_.fetch_add(n, std::memory_order_relaxed);
    }
    void add_returned_get(uint64_t n) {
        bytes_returned_get_.fetch_add(n, std::memory_order_relaxed);
    }
    void add_get_request() { get_requests_.fetch_add(1, std::memory_order_relaxed); }
    void add_select_request() { select_requests_.fetch_add(1, std::memory_order_relaxed); }

    MeterSnapshot snapshot() const {
        MeterSnapshot s;
        s.bytes_scanned = bytes_scanned_.load(std::memory_order_relaxed);
        s.bytes_returned_select = bytes_returned_select_.load(std::memory_order_relaxed);
        s.bytes_returned_get = bytes_returned_get_.load(std::memory_order_relaxed);
        s.get_requests = get_requests_.load(std::memory_order_relaxed);
        s.select_requests = select_requests_.load(std::memory_order_relaxed);
        return s;
    }

  private:
    std::atomic<uint64_t> bytes_scanned_{0};
    std::atomic<uint64_t> bytes_returned_select_{0};
    std::atomic<uint64_t> bytes_returned_get_{0};
    std::atomic<uint64_t> get_requests_{0};
    std::atomic<uint64_t> select_requests_{0};
};

struct StoredObject {
    std::string name;
    std::string bytes;  // immutable after put
    CsvFormat format;
};

struct StoreOptions {
    // Fixed per-request latency for qualitative runtime-shape experiments.
    // Byte counters, not wall clock, are the fidelity surface; default off.
    int latency_ms = 0;
    bool log_requests = false;
};

struct RequestRecord {
    enum class Kind : uint8_t { Get, MultiGet, Select };
    uint64_t seq;
    Kind kind;
    std::string object;
    uint64_t bytes_returned;
    std::string sql;  // Select requests only
};

struct SelectResult {
    std::string payload;  // CSV-serialized qualifying (or aggregated) rows
    std::size_t row_count = 0;
};

// In-process object store exposing exactly three request types: ranged GET,
// multi-range GET, and Select over one object. Objects are write-once; the
// store is safe for concurrent reads after the load phase.
class ObjectStore {
  public:
    explicit ObjectStore(StoreOptions opts = {}) : opts_(opts) {}

    void put(std::string name, std::string bytes, CsvFormat format);
    void put_file(const std::string& name, const std::string& path, CsvFormat format);
    bool exists(const std::string& name) const { return objects_.count(name) > 0; }
    std::size_t object_size(const std::string& name) const { return find(name).bytes.size(); }

    // Offline access for loaders and index builders; not a metered request.
    const StoredObject& object(const std::string& name) const { return find(name); }

    // Partition objects of a table, named "<table>.<index>", sorted by index.
    std::vector<std::string> partitions_of(const std::string& table) const;

    // Inclusive byte range [first_byte, last_byte].
    std::string get_range(const std::string& name, uint64_t first_byte, uint64_t last_byte,
                          UsageMeter& meter) const;

    // One request regardless of range count.
    std::vector<std::string> get_multirange(const std::string& name,
                                            std::span<const std::pair<uint64_t, uint64_t>> ranges,
                                            UsageMeter& meter) const;

    // Scans the whole object, evaluates the restricted-SQL text, returns the
    // qualifying (or aggregated) rows serialized as CSV. bytes_scanned grows
    // by the full object size regardless of selectivity.
    SelectResult select(const std::string& name, std::string_view sql, UsageMeter& meter,
                        ScanMode mode = ScanMode::Serial) const;

    void set_logging(bool on) { opts_.log_requests = on; }
    std::vector<RequestRecord> take_log();

    void drop_all();  // reset between experiments; not a request type

  private:
    const StoredObject& find(const std::string& name) const;
    void log(RequestRecord::Kind kind, const std::string& object, uint64_t returned,
             std::string_view sql = {}) const;
    void apply_latency() const;

    StoreOptions opts_;
    std::map<std::string, StoredObject> objects_;
    mutable std::mutex log_mutex_;
    mutable std::vector<RequestRecord> log_;
    mutable std::atomic<uint64_t> seq_{0};
};

}  // namespace pushq
