#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "gridcast/tensor.hpp"

namespace gridcast {

// Grid tensor file ("GPT1"): a line-oriented text header
//
//   GPT1
//   dims <n> <h> <w> <c>
//   dtype f64|f32
//   channels <name...>        (omitted when unnamed)
//   endian little
//   end_header
//
// followed by the row-major little-endian payload. f32 payloads widen
// exactly to f64 on read.
void write_grid(const std::string& path, const Tensor4& t, bool as_f32 = false);
Tensor4 read_grid(const std::string& path);

// Deterministic CSV: fixed column order, doubles rendered with nine
// significant digits.
struct Report {
    using Cell = std::variant<std::int64_t, double, std::string>;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row);
};

void write_report(const std::string& path, const Report& report);

// Minimal reader for the library's own score CSVs (used by the report
// command); all cells come back as doubles.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
CsvTable read_csv_numeric(const std::string& path);

// Dataset manifest: file roles, split index, and the generation-config
// hash, as a sectioned text file.
struct Manifest {
    std::string name;
    std::string family;
    std::uint64_t config_hash = 0;
    std::map<std::string, std::string> files;  // role -> relative path
    int n_days = 0;
    int train_end = 0;  // train = [0, train_end), test = [train_end, n_days)

    void validate_against_dir(const std::string& dir) const;
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace gridcast
