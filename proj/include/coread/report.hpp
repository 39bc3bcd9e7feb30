#pragma once

// Deterministic CSV table emission. Callers provide pre-sorted rows;
// every row must match the header width. Numeric cells are formatted
// with fixed decimal places by the helpers below so that re-parsing a
// report recovers the in-memory value to formatting precision.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "coread/csv.hpp"
#include "coread/errors.hpp"
#include "coread/numeric.hpp"

namespace coread {

struct Table {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
};

inline void emit_table(const Table& table, std::ostream& out) {
    if (table.header.empty()) throw DataError("emit_table: empty header");
    write_csv_row(out, table.header);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != table.header.size())
            throw DataError("emit_table: row " + std::to_string(i + 1) + " has " +
                            std::to_string(table.rows[i].size()) + " cells, schema has " +
                            std::to_string(table.header.size()));
        write_csv_row(out, table.rows[i]);
    }
}

inline void emit_table_file(const Table& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    emit_table(table, out);
}

// Cell formatters. Ranks, divergences and other unit-interval statistics
// use 4 decimal places; coreness uses 3.
inline std::string cell_rank(double v) { return format_fixed(v, 4); }
inline std::string cell_coreness(double v) { return format_fixed(v, 3); }
inline std::string cell_centrality(double v) { return format_fixed(v, 6); }
inline std::string cell_int(std::int64_t v) { return std::to_string(v); }

inline std::string cell_opt_rank(const std::optional<double>& v) {
    return v ? cell_rank(*v) : std::string();
}

// Integral values print without a decimal point; .5 medians keep one.
inline std::string cell_year(double v) {
    if (v == static_cast<double>(static_cast<long long>(v)))
        return std::to_string(static_cast<long long>(v));
    return format_fixed(v, 1);
}

} // namespace coread
