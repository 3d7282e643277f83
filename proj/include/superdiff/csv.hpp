#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace superdiff {

// RFC-4180 tables: '.' decimal, LF line endings, UTF-8, header row.
// Numeric cells are rendered with %.17g so identical runs are
// byte-identical.
struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    static std::string cell(double v) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static std::string cell(std::size_t v) { return std::to_string(v); }

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

inline std::string csv_escape(const std::string& field) {
    const bool needs_quote = field.find_first_of(",\"\n") != std::string::npos;
    if (!needs_quote) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_csv(std::ostream& os, const Table& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(table.columns[i]);
    }
    os << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << csv_escape(row[i]);
        }
        os << '\n';
    }
}

}  // namespace superdiff
