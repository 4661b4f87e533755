#pragma once

#include <string>
#include <vector>

#include "epf/time_utils.hpp"

namespace epf {

// Timestamp-indexed CSV: header row, ISO-8601 UTC first column, numeric
// cells, empty cell = missing (NaN).
struct CsvTable {
    std::vector<std::string> column_names;  // excludes the timestamp column
    std::vector<UtcSeconds> timestamps;
    std::vector<std::vector<double>> columns;  // column-major

    std::size_t rows() const { return timestamps.size(); }
};

// Throws std::runtime_error naming the file and 1-based line of the first
// violation.
CsvTable read_timestamp_csv(const std::string& path);

// Fixed "%.10g" cell formatting so identical data round-trips byte-identically.
std::string format_csv_number(double v);

// Writes via a temp file + rename so a failed stage leaves nothing behind.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_text_file(const std::string& path);

}  // namespace epf
