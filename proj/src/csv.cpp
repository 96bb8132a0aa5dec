#include "spinhole/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    fail(ErrorCategory::io, fmt::format("CSV has no column '{}'", name));
}

std::vector<double> CsvTable::numeric(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) {
        const std::string& cell = row.at(c);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(cell.c_str(), &end);
        if (cell.empty() || end != cell.c_str() + cell.size() || (errno == ERANGE && std::isinf(v))) {
            fail(ErrorCategory::io, fmt::format("column '{}': '{}' is not a number", name, cell));
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> CsvTable::text(std::string_view name) const {
    const std::size_t c = column(name);
    std::vector<std::string> out;
    for (const auto& row : rows) out.push_back(row.at(c));
    return out;
}

void CsvTable::add_row(std::vector<std::string> row) {
    if (row.size() != header.size()) {
        fail(ErrorCategory::invalid_state, fmt::format("row has {} cells, header has {}", row.size(), header.size()));
    }
    rows.push_back(std::move(row));
}

std::string format_number(double value) { return fmt::format("{:.17g}", value); }

namespace {

std::string quote_cell(const std::string& cell) {
    const bool padded = !cell.empty() && (cell.front() == ' ' || cell.back() == ' ');
    if (!padded && cell.find_first_of(",\"\r\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::string csv_line(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += quote_cell(cells[i]);
    }
    return out + '\n';
}

std::string trim(const std::string& cell) {
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
}

}  // namespace

std::string to_csv(const CsvTable& table) {
    std::string out = csv_line(table.header);
    for (const auto& row : table.rows) out += csv_line(row);
    return out;
}

// Quoted cells may hold commas, doubled quotes and newlines; unquoted cells
// are trimmed. Blank lines are skipped.
CsvTable parse_csv(std::string_view text) {
    CsvTable table;
    bool have_header = false;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false, in_quotes = false, row_has_content = false;
    std::size_t line_no = 1, row_line = 1;

    auto end_cell = [&] {
        cells.push_back(quoted ? cell : trim(cell));
        cell.clear();
        quoted = false;
    };
    auto end_row = [&] {
        end_cell();
        if (row_has_content) {
            if (!have_header) {
                table.header = std::move(cells);
                have_header = true;
            } else if (cells.size() != table.header.size()) {
                fail(ErrorCategory::io, fmt::format("CSV line {} has {} cells, header has {}", row_line, cells.size(),
                                                    table.header.size()));
            } else {
                table.rows.push_back(std::move(cells));
            }
        }
        cells.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                in_quotes = false;
            } else {
                if (c == '\n') ++line_no;
                cell += c;
            }
            continue;
        }
        if (!row_has_content && c != '\n' && c != '\r') {
            row_has_content = true;
            row_line = line_no;
        }
        if (c == '"' && trim(cell).empty() && !quoted) {
            cell.clear();
            quoted = in_quotes = true;
        } else if (c == ',') {
            end_cell();
        } else if (c == '\n') {
            end_row();
            ++line_no;
        } else if (c == '\r') {
            continue;
        } else if (quoted) {
            if (c != ' ' && c != '\t') fail(ErrorCategory::io, fmt::format("CSV line {}: text after a quoted cell", line_no));
        } else {
            cell += c;
        }
    }
    if (in_quotes) fail(ErrorCategory::io, "CSV ends inside a quoted cell");
    if (row_has_content || !cells.empty()) end_row();
    if (!have_header) fail(ErrorCategory::io, "CSV is empty");
    return table;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCategory::io, fmt::format("cannot open {} for writing", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(ErrorCategory::io, fmt::format("write to {} failed", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCategory::io, fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) { write_file_atomic(path, to_csv(table)); }

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, fmt::format("cannot read {}", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

}  // namespace spinhole
