#include "epf/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "epf/panel.hpp"

namespace epf {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

CsvTable read_timestamp_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");

    CsvTable table;
    std::string line;
    std::size_t lineno = 0;

    if (!std::getline(in, line)) fail(path, 1, "empty file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line);
    if (header.size() < 2) fail(path, lineno, "header needs a timestamp and at least one column");
    table.column_names.assign(header.begin() + 1, header.end());
    table.columns.resize(table.column_names.size());

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            fail(path, lineno, "expected " + std::to_string(header.size()) + " cells, got " +
                                   std::to_string(cells.size()));
        UtcSeconds t;
        try {
            t = parse_utc_timestamp(cells[0]);
        } catch (const std::exception& e) {
            fail(path, lineno, e.what());
        }
        if (!table.timestamps.empty() && t <= table.timestamps.back())
            fail(path, lineno, "timestamps must be strictly increasing");
        table.timestamps.push_back(t);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            if (cell.empty()) {
                table.columns[c - 1].push_back(missing_value());
                continue;
            }
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end != cell.c_str() + cell.size() || errno == ERANGE)
                fail(path, lineno, "cell '" + cell + "' in column '" +
                                       table.column_names[c - 1] + "' is not numeric");
            table.columns[c - 1].push_back(v);
        }
    }
    if (table.timestamps.empty()) fail(path, lineno, "no data rows");
    return table;
}

std::string format_csv_number(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace epf
