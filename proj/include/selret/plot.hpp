#pragma once

#include <string>
#include <utility>
#include <vector>

namespace selret::plot {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool diagonal = false;  // y = x reference line
    int width = 720;
    int height = 480;
};

// Multi-series line chart with axes, ticks and a legend. Non-finite
// points break the polyline.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

// Correlation heatmap in [-1, 1] with cell values and optional group
// separator lines after the given label indices.
std::string heatmap(const std::vector<std::string>& labels,
                    const std::vector<std::vector<double>>& matrix,
                    const std::vector<std::size_t>& group_boundaries,
                    const std::string& title);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace selret::plot
