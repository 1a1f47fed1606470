#pragma once

// Minimal CSV helpers shared by the loaders and writers. Not part of the public API.

#include "graphcp/error.hpp"

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace graphcp::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

/// Reads the header line and checks it matches `expected` (case-sensitive, trimmed).
inline void expect_header(std::istream& in, std::string_view expected, std::string_view what) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::MalformedRow, std::string(what) + ": missing header");
    if (trim(line) != expected)
        throw Error(ErrorKind::MalformedRow,
                    std::string(what) + ": expected header '" + std::string(expected) + "', got '" + line + "'");
}

/// Next non-blank line; false at end of stream.
inline bool next_row(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) return true;
    }
    return false;
}

inline bool parse_int(std::string_view s, std::int64_t& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && !s.empty();
}

inline bool parse_double(std::string_view s, double& out) {
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end && !s.empty();
}

/// Shortest representation that parses back to the same double.
inline std::string format(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string row_error(std::string_view what, std::size_t line_no, std::string_view detail) {
    return std::string(what) + " line " + std::to_string(line_no) + ": " + std::string(detail);
}

} // namespace graphcp::csv
