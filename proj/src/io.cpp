#include "quantcorr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "quantcorr/error.hpp"

namespace quantcorr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_missing(const std::string& cell) { return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan"; }

}  // namespace

IngestResult ingest(const std::string& path, const std::vector<std::string>& columns,
                    const std::vector<std::string>& binary_columns) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw IngestError("'" + path + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);
    std::vector<std::size_t> positions;
    for (const auto& c : columns) {
        auto it = std::find(header.begin(), header.end(), c);
        if (it == header.end()) throw IngestError("'" + path + "' has no column '" + c + "'");
        positions.push_back(static_cast<std::size_t>(it - header.begin()));
    }

    IngestResult result;
    std::vector<std::vector<double>> values(columns.size());
    std::vector<std::size_t> ids;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw IngestError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(header.size()));
        }
        std::vector<double> parsed(columns.size());
        bool missing = false;
        for (std::size_t k = 0; k < columns.size(); ++k) {
            const std::string cell = trim(cells[positions[k]]);
            if (is_missing(cell)) {
                missing = true;
                continue;
            }
            double v = 0.0;
            const char* first = cell.data();
            const char* last = first + cell.size();
            if (*first == '+') ++first;
            const auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
                throw IngestError("cannot parse '" + cell + "' as a number at row " + std::to_string(row) +
                                  ", column '" + columns[k] + "'");
            }
            if (std::find(binary_columns.begin(), binary_columns.end(), columns[k]) != binary_columns.end() &&
                v != 0.0 && v != 1.0) {
                throw IngestError("binary column '" + columns[k] + "' holds " + cell + " at row " +
                                  std::to_string(row));
            }
            parsed[k] = v;
        }
        if (missing) {
            result.dropped_rows.push_back(row);
            continue;
        }
        for (std::size_t k = 0; k < columns.size(); ++k) values[k].push_back(parsed[k]);
        ids.push_back(row);
    }
    if (row == 0) throw IngestError("'" + path + "' has a header but no data rows");

    result.rows_read = row;
    result.data.source = path;
    for (std::size_t k = 0; k < columns.size(); ++k) result.data.add_column(columns[k], std::move(values[k]));
    result.data.set_row_ids(std::move(ids));
    return result;
}

std::string format_full(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_short(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    if (std::string(buf) == "-0.000") return "0.000";
    return buf;
}

void write_csv(std::ostream& out, const Dataset& data) {
    for (std::size_t c = 0; c < data.cols(); ++c) out << (c ? "," : "") << data.names()[c];
    out << '\n';
    for (std::size_t i = 0; i < data.rows(); ++i) {
        for (std::size_t c = 0; c < data.cols(); ++c) out << (c ? "," : "") << format_full(data.column(c)[i]);
        out << '\n';
    }
}

}  // namespace quantcorr
