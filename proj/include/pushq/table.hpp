#pragma once

#include <string>
#include <vector>

#include "pushq/common.hpp"
#include "pushq/csv.hpp"
#include "pushq/store.hpp"

namespace pushq {

// Planning-side description of a partitioned table: what a catalog would
// know. Byte payloads live in the store; this is metadata only.
struct TableInfo {
    std::string name;
    std::vector<std::string> columns;
    CsvFormat format{',', true};
    std::vector<std::string> partitions;  // object names, partition order
    uint64_t rows = 0;
    double avg_row_bytes = 0;

    std::size_t column_index(const std::string& column) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == column) return i;
        throw NoSuchColumn("table " + name + " has no column " + column);
    }
    bool has_column(const std::string& column) const {
        for (const auto& c : columns)
            if (c == column) return true;
        return false;
    }
};

}  // namespace pushq
