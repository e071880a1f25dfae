#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <vector>

#include "ursa/error.hpp"

namespace ursa::detail {

struct CsvRow {
    std::size_t line = 0;  // 1-based
    std::vector<std::string> fields;
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

/// Splits simple comma-separated text (no quoting). Blank lines and lines
/// starting with '#' are skipped. When `header` is non-empty the first row
/// must match it and is dropped.
inline std::vector<CsvRow> read_csv(std::string_view text, std::string_view header = {}) {
    std::vector<CsvRow> rows;
    std::size_t line_no = 0;
    bool header_seen = header.empty();
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != header) {
                throw Error(ErrorCode::parse_error, "expected header '" + std::string(header) + "'",
                            "line " + std::to_string(line_no));
            }
            header_seen = true;
            continue;
        }
        CsvRow row{line_no, {}};
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            row.fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Int>
Int parse_int(std::string_view s, const std::string& where) {
    Int value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::parse_error, "expected an integer, got '" + std::string(s) + "'", where);
    }
    return value;
}

inline double parse_double(std::string_view s, const std::string& where) {
    try {
        std::size_t used = 0;
        const std::string str(s);
        const double v = std::stod(str, &used);
        if (used != str.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::parse_error, "expected a number, got '" + std::string(s) + "'", where);
    }
}

}  // namespace ursa::detail
