// csv.cpp — Minimal numeric CSV reader/writer

#include "sdfkit/csv.hpp"

#include "sdfkit/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sdfkit::csv {

std::size_t Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    throw InputError("csv: no column named '" + name + "'");
}

std::vector<double> Table::column_values(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(c));
    return out;
}

std::string format(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("csv: cannot open '" + path.string() + "' for writing");
    return os;
}

void write_header(std::ostream& os, const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) os << ',';
        os << header[i];
    }
    os << '\n';
}

double parse(const std::string& cell, const std::filesystem::path& path) {
    if (cell == "nan") return std::nan("");
    if (cell == "inf") return INFINITY;
    if (cell == "-inf") return -INFINITY;
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first < last && *first == ' ') ++first;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw InputError("csv: cannot parse '" + cell + "' in " + path.string());
    }
    return v;
}

} // namespace

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns) {
    if (columns.size() != header.size()) throw InputError("csv: header/column count mismatch");
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns) {
        if (c.size() != n) throw InputError("csv: ragged columns");
    }
    auto os = open_out(path);
    write_header(os, header);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) os << ',';
            os << format(columns[c][r]);
        }
        os << '\n';
    }
}

void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
    auto os = open_out(path);
    write_header(os, header);
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw InputError("csv: row width mismatch");
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) os << ',';
            os << format(row[c]);
        }
        os << '\n';
    }
}

Table read(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("csv: cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw InputError("csv: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        row.reserve(t.header.size());
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            row.push_back(parse(line.substr(start, comma - start), path));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != t.header.size()) {
            throw InputError("csv: row width does not match header in " + path.string());
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace sdfkit::csv
