#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fpeproj::cli {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Shortest form that round-trips at 17 significant digits, locale independent.
std::string format_number(double v);

/// Writes `header` and `rows` with `\n` line endings. Throws InvalidArgument on
/// arity mismatch and IoError when the file cannot be written.
void emit_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
              const std::filesystem::path& path);

/// Numeric CSV reader for files produced by emit_csv.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace fpeproj::cli
