#ifndef MUHS_IO_HPP
#define MUHS_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace muhs::io {

/// 17 significant digits: round-trips any IEEE double.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes `contents` to a sibling temporary and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos)
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

/// Parses a headed CSV into rows of doubles, checking the header verbatim.
inline std::vector<std::vector<double>> read_numeric_csv(std::string_view text,
                                                         const std::vector<std::string>& header) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (split(line, ',') != header) throw std::invalid_argument("unexpected CSV header: " + line);
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size())
            throw std::invalid_argument("line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(header.size()) + " columns");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                row.push_back(parse_double(c));
            } catch (const std::exception&) {
                throw std::invalid_argument("line " + std::to_string(lineno) + ": not a number: '" + c + "'");
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace muhs::io

#endif  // MUHS_IO_HPP
