#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fracact/errors.hpp"

namespace fracact {

/// Shortest decimal string that round-trips to the same double, so CSV
/// output is bit-faithful and byte-stable across runs. Non-finite values
/// spell out as nan / inf / -inf.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[64];
    const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& what) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    double v = 0.0;
    const std::from_chars_result res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        throw ParseError(what + ": cannot parse '" + text + "' as a number");
    return v;
}

/// Joins one CSV row; fields are written verbatim (no quoting — every
/// emitted field is numeric or a bare identifier).
inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ',';
        row += fields[i];
    }
    row += '\n';
    return row;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Write-temp-then-rename so readers never observe a half-written file.
/// Creates missing parent directories.
inline void write_text_file_atomic(const std::filesystem::path& path,
                                   const std::string& content) {
    const std::filesystem::path parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ParseError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw ParseError("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw ParseError("cannot rename " + tmp.string() + " to " +
                         path.string() + ": " + ec.message());
}

/// Splits one CSV line; no quoting rules, matching csv_row.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

/// Reads a CSV written by this library back into rows of fields.
inline std::vector<std::vector<std::string>> read_csv_rows(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(split_csv_line(line));
    }
    return rows;
}

} // namespace fracact
