#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "barbench/errors.hpp"
#include "barbench/version.hpp"

namespace barbench {

// Shortest round-trip decimal representation; keeps re-runs byte-identical.
inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    // prefer the shortest representation that still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof probe, "%.*g", prec, x);
        double back = 0.0;
        std::sscanf(probe, "%lf", &back);
        if (back == x) return probe;
    }
    return buf;
}

inline std::string format_number(long long x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }
inline std::string format_number(std::size_t x) { return std::to_string(x); }
inline std::string format_number(const std::string& x) { return x; }

// Every output CSV starts with a comment line recording the tool version,
// the resolved-config hash, and the seed.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::string& provenance,
              const std::vector<std::string>& columns) {
        std::filesystem::create_directories(path.parent_path());
        out_.open(path, std::ios::binary);
        if (!out_) throw ConfigError("cannot open output file " + path.string());
        out_ << "# barbench " << kVersion << " " << provenance << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << (i ? "," : "") << columns[i];
        out_ << "\n";
    }

    template <typename... Ts>
    void row(const Ts&... values) {
        bool first = true;
        ((out_ << (first ? "" : ","), out_ << format_number(values), first = false), ...);
        out_ << "\n";
    }

    void raw_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

}  // namespace barbench
