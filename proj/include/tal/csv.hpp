#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tal/matrix.hpp"

namespace tal {

/// Shortest round-trip decimal form of a double (locale-free).
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error(context + ": cannot parse number '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::runtime_error(context + ": cannot parse integer '" + std::string(s) + "'");
    return v;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

/// Splits one CSV line into trimmed fields. Commas inside double quotes or
/// inside [...] lists do not split; both styles appear in label tables.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string current;
    bool in_quotes = false;
    int bracket_depth = 0;
    for (char c : line) {
        if (c == '"') {
            in_quotes = !in_quotes;
            continue;  // quotes delimit, they are not content
        }
        if (!in_quotes) {
            if (c == '[') ++bracket_depth;
            if (c == ']' && bracket_depth > 0) --bracket_depth;
            if (c == ',' && bracket_depth == 0) {
                fields.emplace_back(trim(current));
                current.clear();
                continue;
            }
        }
        current.push_back(c);
    }
    fields.emplace_back(trim(current));
    return fields;
}

/// Reads a headerless numeric CSV into a Matrix. Ragged rows are an error.
inline Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Matrix m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (m.cols == 0) m.cols = fields.size();
        if (fields.size() != m.cols)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(m.cols) + " columns, got " +
                                     std::to_string(fields.size()));
        for (const auto& f : fields)
            m.data.push_back(parse_double(f, path + ":" + std::to_string(line_no)));
        ++m.rows;
    }
    return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            if (c) out << ',';
            out << format_double(m.at(r, c));
        }
        out << '\n';
    }
}

/// Minimal writer for the plot-ready CSV artifacts: comma delimiter, header
/// row, '.' decimal point.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out_ << ',';
            out_ << header[i];
        }
        out_ << '\n';
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

private:
    std::ostream& out_;
};

}  // namespace tal
