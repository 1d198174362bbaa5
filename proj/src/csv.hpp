#pragma once

// Minimal CSV plumbing shared by the loaders and writers. Not part of the public API.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankarb/core.hpp"

namespace rankarb::csv {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(trim(line.substr(start, i - start)));
            start = i + 1;
        }
    }
    return out;
}

inline std::string at_row(std::size_t row) { return "row " + std::to_string(row) + ": "; }

/// Empty field -> nullopt; anything unparsable is a DataError naming the row.
inline std::optional<double> parse_optional_double(std::string_view field, std::size_t row,
                                                   std::string_view column) {
    if (field.empty() || field == "NA" || field == "nan" || field == "NaN") {
        return std::nullopt;
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size() || !std::isfinite(v)) {
        throw DataError(at_row(row) + "cannot parse " + std::string(column) + " '" +
                        std::string(field) + "'");
    }
    return v;
}

inline long parse_long(std::string_view field, std::size_t row, std::string_view column) {
    long v = 0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size()) {
        throw DataError(at_row(row) + "cannot parse " + std::string(column) + " '" +
                        std::string(field) + "'");
    }
    return v;
}

/// Line reader that skips blank lines and '#' comments, tracking 1-based line numbers.
class Reader {
public:
    explicit Reader(const std::filesystem::path& path) : in_(path), path_(path) {
        if (!in_) {
            throw DataError("cannot open '" + path.string() + "'");
        }
    }

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_;
            auto t = trim(line);
            if (t.empty() || t.front() == '#') {
                continue;
            }
            return true;
        }
        return false;
    }

    std::size_t line() const { return line_; }
    const std::filesystem::path& path() const { return path_; }

    void expect_header(std::string_view header) {
        std::string line;
        if (!next(line)) {
            throw DataError("'" + path_.string() + "' is empty (expected header '" +
                            std::string(header) + "')");
        }
        auto got = split(line);
        auto want = split(header);
        if (got != want) {
            throw DataError(at_row(line_) + "schema violation in '" + path_.string() +
                            "': expected header '" + std::string(header) + "'");
        }
    }

private:
    std::ifstream in_;
    std::filesystem::path path_;
    std::size_t line_ = 0;
};

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path.string() + "'");
    }
    out.precision(17);
    return out;
}

inline void write_preamble(std::ostream& out, std::string_view preamble) {
    if (!preamble.empty()) {
        out << "# " << preamble << '\n';
    }
}

}  // namespace rankarb::csv
