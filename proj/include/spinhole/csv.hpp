#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace spinhole {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;
    std::vector<double> numeric(std::string_view name) const;
    std::vector<std::string> text(std::string_view name) const;
    void add_row(std::vector<std::string> row);
};

/// Shortest text that reads back to the same double.
std::string format_number(double value);

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace spinhole
