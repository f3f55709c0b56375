#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fpeproj::cli {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotOptions {
    std::string title;
    std::string x_label = "t";
    std::string y_label;
    int width = 720;
    int height = 440;
};

/// Self-contained SVG line chart; byte-identical output for identical input.
std::string render_plot(const std::vector<PlotSeries>& series, const PlotOptions& opts = {});

void emit_plot(const std::vector<PlotSeries>& series, const std::filesystem::path& path,
               const PlotOptions& opts = {});

}  // namespace fpeproj::cli
