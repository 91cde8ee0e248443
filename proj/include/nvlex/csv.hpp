#pragma once

// Minimal CSV ingestion/emission for the CLI: header row required, columns
// matched by name, numeric cells, line-numbered diagnostics.

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nvlex::csv {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Table {
    std::string source;                // path, for diagnostics
    std::vector<std::string> headers;  // as in the file
    std::vector<std::vector<double>> columns;

    std::optional<std::size_t> find(const std::string& name) const {
        for (std::size_t i = 0; i < headers.size(); ++i)
            if (headers[i] == name) return i;
        return std::nullopt;
    }

    // column by required header name
    const std::vector<double>& column(const std::string& name) const {
        const auto i = find(name);
        if (!i) throw CsvError(source + ": missing required column '" + name + "'");
        return columns[*i];
    }

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
    return s.substr(a, b - a);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_number(const std::string& cell, const std::string& source, std::size_t line,
                           const std::string& header) {
    const char* first = cell.data();
    const char* last = first + cell.size();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw CsvError(source + ":" + std::to_string(line) + ": non-numeric value '" + cell +
                       "' in column '" + header + "'");
    return value;
}

}  // namespace detail

inline Table read_table(std::istream& in, const std::string& source) {
    Table t;
    t.source = source;
    std::string line;
    std::size_t line_no = 0;

    // header
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        break;
    }
    if (line_no == 0 || detail::trim(line).empty()) throw CsvError(source + ": empty file");
    t.headers = detail::split(line);
    for (std::size_t i = 0; i < t.headers.size(); ++i) {
        if (t.headers[i].empty())
            throw CsvError(source + ":" + std::to_string(line_no) + ": empty header name");
        for (std::size_t j = i + 1; j < t.headers.size(); ++j)
            if (t.headers[i] == t.headers[j])
                throw CsvError(source + ":" + std::to_string(line_no) + ": duplicate header '" +
                               t.headers[i] + "'");
    }
    t.columns.assign(t.headers.size(), {});

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split(line);
        if (cells.size() != t.headers.size())
            throw CsvError(source + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(t.headers.size()) + " cells, found " +
                           std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c)
            t.columns[c].push_back(detail::parse_number(cells[c], source, line_no, t.headers[c]));
    }
    if (t.rows() == 0) throw CsvError(source + ": no data rows");
    return t;
}

inline Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ": cannot open file");
    return read_table(in, path);
}

inline void write_table(std::ostream& out, const std::vector<std::string>& headers,
                        const std::vector<std::vector<double>>& columns) {
    char buf[64];
    for (std::size_t i = 0; i < headers.size(); ++i)
        out << (i ? "," : "") << headers[i];
    out << '\n';
    const std::size_t rows = columns.empty() ? 0 : columns.front().size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, columns[c][r],
                                                 std::chars_format::general, 17);
            out << (c ? "," : "") << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        out << '\n';
    }
}

inline void write_table(const std::string& path, const std::vector<std::string>& headers,
                        const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out) throw CsvError(path + ": cannot open file for writing");
    write_table(out, headers, columns);
}

}  // namespace nvlex::csv
