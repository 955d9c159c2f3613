#include "pushq/csv.hpp"

namespace pushq {

void split_csv_row(std::string_view row, char delimiter, std::vector<std::string_view>& out) {
    out.clear();
    std::size_t i = 0;
    const std::size_t n = row.size();
    while (true) {
        if (i < n && row[i] == '"') {
            // Quoted field: scan to the closing quote, honoring "" escapes.
            std::size_t j = i + 1;
            while (j < n) {
                if (row[j] == '"') {
                    if (j + 1 < n && row[j + 1] == '"') {
                        j += 2;
                        continue;
                    }
                    break;
                }
                ++j;
            }
            std::size_t end = (j < n) ? j + 1 : n;
            out.push_back(row.substr(i, end - i));
            i = end;
            if (i < n && row[i] == delimiter) {
                ++i;
                continue;
            }
            break;
        }
        auto d = row.find(delimiter, i);
        if (d == std::string_view::npos) {
            out.push_back(row.substr(i));
            break;
        }
        out.push_back(row.substr(i, d - i));
        i = d + 1;
    }
}

std::string unquote_csv_field(std::string_view field) {
    if (field.size() < 2 || field.front() != '"' || field.back() != '"')
        return std::string(field);
    std::string out;
    out.reserve(field.size() - 2);
    for (std::size_t i = 1; i + 1 < field.size(); ++i) {
        if (field[i] == '"' && i + 2 < field.size() && field[i + 1] == '"') ++i;
        out.push_back(field[i]);
    }
    return out;
}

void append_csv_field(std::string& out, std::string_view field, char delimiter) {
    bool needs_quote = false;
    for (char c : field) {
        if (c == delimiter || c == '"' || c == '\n' || c == '\r') {
            needs_quote = true;
            break;
        }
    }
    if (!needs_quote) {
        out.append(field);
        return;
    }
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
}

void append_csv_row(std::string& out, const std::vector<std::string_view>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(delimiter);
        append_csv_field(out, fields[i], delimiter);
    }
    out.push_back('\n');
}

std::size_t skip_rows_offset(std::string_view payload, std::size_t n) {
    std::size_t off = 0;
    while (n-- > 0 && off < payload.size()) {
        auto nl = payload.find('\n', off);
        if (nl == std::string_view::npos) return payload.size();
        off = nl + 1;
    }
    return off;
}

std::size_t count_rows(std::string_view payload) {
    std::size_t rows = 0;
    CsvRows it(payload);
    std::string_view row;
    while (it.next(row)) ++rows;
    return rows;
}

}  // namespace pushq
