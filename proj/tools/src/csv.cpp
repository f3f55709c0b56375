#include "fpeproj/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fpeproj/errors.hpp"

namespace fpeproj::cli {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void emit_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows,
              const std::filesystem::path& path) {
    if (header.empty()) fail(ErrorKind::InvalidArgument, "CSV header is empty");
    for (const auto& row : rows)
        if (row.size() != header.size())
            fail(ErrorKind::InvalidArgument, "CSV row has " + std::to_string(row.size()) + " fields, header has " +
                                                 std::to_string(header.size()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
        out << '\n';
    }
    if (!out) fail(ErrorKind::IoError, "write to " + path.string() + " failed");
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::IoError, path.string() + " is empty");
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != t.header.size()) fail(ErrorKind::IoError, "ragged CSV row in " + path.string());
        std::vector<double> row;
        for (const auto& c : cells) {
            double v = 0.0;
            if (c == "nan") v = std::nan("");
            else if (c == "inf") v = INFINITY;
            else if (c == "-inf") v = -INFINITY;
            else {
                const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
                if (res.ec != std::errc() || res.ptr != c.data() + c.size())
                    fail(ErrorKind::IoError, "bad number '" + c + "' in " + path.string());
            }
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace fpeproj::cli
