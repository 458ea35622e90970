// io.hpp: TimeSeries container and the CSV dialect used for every data file.
//
// CSV dialect: comma separated, '.' decimal point, '#'-prefixed header comment lines
// ("# key: value"), one header row of column names, LF line endings. Numbers are printed
// with 17 significant digits ("%.17g"), which round-trips doubles and is byte-stable.

#pragma once

#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlwg/types.hpp"

namespace nlwg {

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0"; // also folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

struct CsvTable {
    Metadata comments;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void write(std::ostream& os) const {
        for (const auto& [k, v] : comments) os << "# " << k << ": " << v << '\n';
        for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
        os << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
            os << '\n';
        }
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io", "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw Error("io", "failed writing " + path.string());
}

// Time grid plus named observable columns of equal length.
struct TimeSeries {
    std::vector<double> times;
    std::deque<std::pair<std::string, std::vector<double>>> columns; // stable references from add_column
    Metadata metadata;
    std::vector<std::string> warnings;

    std::vector<double>& add_column(const std::string& name) {
        columns.emplace_back(name, std::vector<double>{});
        columns.back().second.reserve(times.capacity());
        return columns.back().second;
    }

    bool has(const std::string& name) const {
        for (const auto& c : columns)
            if (c.first == name) return true;
        return false;
    }

    const std::vector<double>& column(const std::string& name) const {
        for (const auto& c : columns)
            if (c.first == name) return c.second;
        throw Error("validation", "TimeSeries: no column '" + name + "'");
    }

    std::vector<double>& column(const std::string& name) {
        for (auto& c : columns)
            if (c.first == name) return c.second;
        throw Error("validation", "TimeSeries: no column '" + name + "'");
    }

    // Monotone time grid, equal column lengths, all values finite.
    bool valid() const {
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1])) return false;
        for (const auto& [name, v] : columns) {
            if (v.size() != times.size()) return false;
            for (double x : v)
                if (!std::isfinite(x)) return false;
        }
        return true;
    }

    CsvTable to_csv() const {
        CsvTable t;
        t.comments = metadata;
        t.header.push_back("t");
        for (const auto& c : columns) t.header.push_back(c.first);
        for (std::size_t i = 0; i < times.size(); ++i) {
            std::vector<double> row{times[i]};
            for (const auto& c : columns) row.push_back(c.second.at(i));
            t.rows.push_back(std::move(row));
        }
        return t;
    }
};

} // namespace nlwg
