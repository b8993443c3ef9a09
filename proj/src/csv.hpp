#pragma once

// Minimal reader for the comma-separated tables used by the library: no
// quoting, '#' comment lines, one header line.

#include <charconv>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "idmfit/diagnostics.hpp"

namespace idmfit::csv {

struct Row {
    std::size_t number = 0; // 1-based data row
    std::vector<std::string_view> fields;
};

struct Document {
    std::vector<std::string> comments; // text after '#', trimmed
    std::vector<std::string> header;
    std::vector<std::string> lines;    // storage for Row::fields
    std::vector<Row> rows;
};

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

/// Reads the whole stream. Throws ParseError(empty_table) when no header is
/// present and ParseError(bad_header) when it differs from `expected`.
inline Document read(std::istream& in, const std::vector<std::string>& expected) {
    Document doc;
    std::string line;
    bool have_header = false;
    std::size_t row_number = 0;
    while (std::getline(in, line)) {
        auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            doc.comments.emplace_back(trim(view.substr(1)));
            continue;
        }
        if (!have_header) {
            if (view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF)
                view.remove_prefix(3); // UTF-8 BOM
            for (auto f : split(view)) doc.header.emplace_back(f);
            if (doc.header != expected) {
                std::string want;
                for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
                throw ParseError(ParseError::Kind::bad_header, 0,
                                 "expected header '" + want + "'");
            }
            have_header = true;
            continue;
        }
        doc.lines.emplace_back(view);
    }
    if (!have_header)
        throw ParseError(ParseError::Kind::empty_table, 0, "empty table");
    doc.rows.reserve(doc.lines.size());
    for (const auto& l : doc.lines) {
        Row row{++row_number, split(l)};
        if (row.fields.size() != expected.size())
            throw ParseError(ParseError::Kind::malformed_number, row.number,
                             "expected " + std::to_string(expected.size()) +
                                 " fields at row " + std::to_string(row.number));
        doc.rows.push_back(std::move(row));
    }
    return doc;
}

inline double to_double(std::string_view field, std::size_t row, std::string_view name) {
    double value = 0.0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end)
        throw ParseError(ParseError::Kind::malformed_number, row,
                         "malformed number '" + std::string(field) + "' in column " +
                             std::string(name) + " at row " + std::to_string(row));
    return value;
}

inline std::int64_t to_count(std::string_view field, std::size_t row, std::string_view name) {
    std::int64_t value = 0;
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (field.empty() || ec != std::errc() || ptr != end)
        throw ParseError(ParseError::Kind::malformed_number, row,
                         "malformed count '" + std::string(field) + "' in column " +
                             std::string(name) + " at row " + std::to_string(row));
    if (value < 0)
        throw ParseError(ParseError::Kind::negative_value, row,
                         "negative count in column " + std::string(name) + " at row " +
                             std::to_string(row));
    return value;
}

} // namespace idmfit::csv
