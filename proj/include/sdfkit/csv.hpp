// csv.hpp — Minimal numeric CSV reader/writer ('.' decimal, ',' delimiter, header row)

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace sdfkit::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;
    std::vector<double> column_values(const std::string& name) const;
};

// Shortest representation that round-trips to the same double.
std::string format(double x);

void write(const std::filesystem::path& path, const std::vector<std::string>& header,
           const std::vector<std::vector<double>>& columns);
void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows);

Table read(const std::filesystem::path& path);

} // namespace sdfkit::csv
