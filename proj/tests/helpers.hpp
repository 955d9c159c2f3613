#pragma once

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pushq/exec.hpp"
#include "pushq/store.hpp"
#include "pushq/value.hpp"

namespace pushq::test {

// Canonical text form of a row for order-insensitive comparison.
inline std::string row_key(const std::vector<Value>& row) {
    std::string key;
    for (const auto& v : row) {
        key += v.to_string();
        key.push_back('\x1f');
    }
    return key;
}

inline std::multiset<std::string> row_multiset(const std::vector<std::vector<Value>>& rows) {
    std::multiset<std::string> out;
    for (const auto& r : rows) out.insert(row_key(r));
    return out;
}

inline std::vector<std::vector<Value>> parse_rows(const std::string& payload) {
    std::vector<std::vector<Value>> out;
    CsvRows it(payload);
    std::string_view raw;
    std::vector<std::string_view> fields;
    while (it.next(raw)) {
        split_csv_row(raw, ',', fields);
        std::vector<Value> row;
        for (auto f : fields) row.push_back(Value::text(unquote_csv_field(f)));
        out.push_back(std::move(row));
    }
    return out;
}

// Builds a headerless CSV payload from text cells.
inline std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    std::vector<std::string_view> views;
    for (const auto& row : rows) {
        views.assign(row.begin(), row.end());
        append_csv_row(out, views, ',');
    }
    return out;
}

}  // namespace pushq::test
