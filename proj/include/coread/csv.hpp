#pragma once

// Minimal RFC-4180-style CSV reader/writer. Quoted fields may contain
// commas, escaped quotes ("") and newlines. All files are UTF-8 with a
// header row.

#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "coread/errors.hpp"

namespace coread {

using CsvRow = std::vector<std::string>;

// Reads a whole CSV stream. Rows are records, not physical lines; the
// first record is the header. Error messages index data records from 1.
inline std::vector<CsvRow> read_csv(std::istream& in, const std::string& name) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    char c;
    // tolerate a UTF-8 byte-order mark
    if (in.peek() == 0xEF) {
        char bom[3];
        in.read(bom, 3);
        if (in.gcount() != 3 || bom[1] != '\xBB' || bom[2] != '\xBF')
            throw DataError(name + ": malformed byte-order mark");
    }
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_started = true;
            break;
        case ',':
            row.push_back(std::move(field));
            field.clear();
            row_started = true;
            break;
        case '\r':
            break;
        case '\n':
            if (row_started || !field.empty() || !row.empty()) {
                row.push_back(std::move(field));
                field.clear();
                rows.push_back(std::move(row));
                row.clear();
                row_started = false;
            }
            break;
        default:
            field.push_back(c);
            row_started = true;
            break;
        }
    }
    if (in_quotes) throw DataError(name + ": unterminated quoted field");
    if (row_started || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<CsvRow> read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    return read_csv(in, path);
}

inline std::string csv_escape(const std::string& s) {
    bool need = false;
    for (char c : s)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') { need = true; break; }
    if (!need) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

inline void write_csv_row(std::ostream& out, const CsvRow& row) {
    for (size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(row[i]);
    }
    out << '\n';
}

namespace detail {

inline void require_header(const std::vector<CsvRow>& rows,
                           const std::vector<std::string>& expected,
                           const std::string& path) {
    if (rows.empty())
        throw DataError(path + ": missing header row (expected " +
                        std::to_string(expected.size()) + " columns)");
    const CsvRow& h = rows.front();
    if (h.size() != expected.size())
        throw DataError(path + ": header has " + std::to_string(h.size()) +
                        " columns, expected " + std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (h[i] != expected[i])
            throw DataError(path + ": header column " + std::to_string(i + 1) +
                            " is '" + h[i] + "', expected '" + expected[i] + "'");
}

inline void require_width(const CsvRow& row, std::size_t width,
                          const std::string& path, std::size_t record) {
    if (row.size() != width)
        throw DataError(path + ": row " + std::to_string(record) + " has " +
                        std::to_string(row.size()) + " fields, expected " +
                        std::to_string(width));
}

} // namespace detail

} // namespace coread
