#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pushq {

struct CsvFormat {
    char delimiter = ',';
    bool has_header = false;
};

// Splits one payload row into fields. Handles RFC-4180 style quoting; fields
// never contain newlines (store invariant: a row never spans a line).
void split_csv_row(std::string_view row, char delimiter, std::vector<std::string_view>& out);

// Appends one serialized row (fields joined by delimiter, '\n' terminated).
// Quotes a field only when it contains the delimiter, a quote, or a newline.
void append_csv_row(std::string& out, const std::vector<std::string_view>& fields, char delimiter);
void append_csv_field(std::string& out, std::string_view field, char delimiter);

// Unquotes a single raw field ("" -> ").
std::string unquote_csv_field(std::string_view field);

// Iterates newline-terminated rows of a CSV payload without copying.
// A missing trailing newline still yields the final row.
class CsvRows {
  public:
    explicit CsvRows(std::string_view payload) : rest_(payload) {}
    // Returns false at end of payload; otherwise sets `row` (no newline).
    bool next(std::string_view& row) {
        if (rest_.empty()) return false;
        auto nl = rest_.find('\n');
        if (nl == std::string_view::npos) {
            row = rest_;
            rest_ = {};
        } else {
            row = rest_.substr(0, nl);
            rest_.remove_prefix(nl + 1);
        }
        return true;
    }

  private:
    std::string_view rest_;
};

// Byte offset of the first row after skipping `n` rows (0 if n == 0).
std::size_t skip_rows_offset(std::string_view payload, std::size_t n);

// Number of newline-terminated rows in a payload.
std::size_t count_rows(std::string_view payload);

}  // namespace pushq
