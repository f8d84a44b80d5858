#include "selret/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "selret/errors.hpp"

namespace selret::plot {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range tidy_range(double lo, double hi) {
    if (!(lo < hi)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = (hi - lo) * 0.04;
    return {lo - pad, hi + pad};
}

std::vector<double> ticks(const Range& r, int count) {
    const double raw_step = (r.hi - r.lo) / count;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag * 10.0;
    for (double mult : {1.0, 2.0, 2.5, 5.0, 10.0}) {
        if (mag * mult >= raw_step) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> out;
    double t = std::ceil(r.lo / step) * step;
    for (; t <= r.hi + step * 1e-9; t += step)
        out.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    return out;
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
    const int width = options.width;
    const int height = options.height;
    const double left = 62, right = width - 18, top = 42, bottom = height - 46;

    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    bool any = false;
    for (const Series& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x_lo = std::min(x_lo, x);
            x_hi = std::max(x_hi, x);
            y_lo = std::min(y_lo, y);
            y_hi = std::max(y_hi, y);
            any = true;
        }
    }
    if (!any) {
        x_lo = y_lo = 0.0;
        x_hi = y_hi = 1.0;
    }
    if (options.diagonal) {
        y_lo = std::min(y_lo, x_lo);
        y_hi = std::max(y_hi, x_hi);
    }
    const Range xr = tidy_range(x_lo, x_hi);
    const Range yr = tidy_range(y_lo, y_hi);
    auto sx = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * (right - left); };
    auto sy = [&](double y) { return bottom - (y - yr.lo) / (yr.hi - yr.lo) * (bottom - top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    if (!options.title.empty())
        svg << "<text x=\"" << width / 2
            << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"15\">"
            << escape(options.title) << "</text>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double t : ticks(xr, 6)) {
        const double px = sx(t);
        svg << "<line x1=\"" << num(px) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px)
            << "\" y2=\"" << num(bottom) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(px) << "\" y=\"" << num(bottom + 16)
            << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    }
    for (double t : ticks(yr, 6)) {
        const double py = sy(t);
        svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(py) << "\" x2=\""
            << num(right) << "\" y2=\"" << num(py)
            << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py + 4)
            << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    }
    svg << "</g>\n";

    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(bottom) << "\" x2=\""
        << num(right) << "\" y2=\"" << num(bottom)
        << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
        << "\" y2=\"" << num(bottom) << "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    if (!options.x_label.empty())
        svg << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 10
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << escape(options.x_label) << "</text>\n";
    if (!options.y_label.empty())
        svg << "<text x=\"16\" y=\"" << (top + bottom) / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "transform=\"rotate(-90 16 "
            << (top + bottom) / 2 << ")\">" << escape(options.y_label) << "</text>\n";

    if (options.diagonal) {
        const double lo = std::max(xr.lo, yr.lo);
        const double hi = std::min(xr.hi, yr.hi);
        svg << "<line x1=\"" << num(sx(lo)) << "\" y1=\"" << num(sy(lo)) << "\" x2=\""
            << num(sx(hi)) << "\" y2=\"" << num(sy(hi))
            << "\" stroke=\"#888\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
    }

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        std::ostringstream pts;
        bool started = false;
        for (const auto& [x, y] : series[i].points) {
            if (!std::isfinite(x) || !std::isfinite(y)) {
                if (started) {
                    svg << "<polyline fill=\"none\" stroke=\"" << color
                        << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
                    pts.str("");
                    started = false;
                }
                continue;
            }
            pts << num(sx(x)) << ',' << num(sy(y)) << ' ';
            started = true;
        }
        if (started)
            svg << "<polyline fill=\"none\" stroke=\"" << color
                << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
    }

    const double legend_x = right - 170;
    double legend_y = top + 8;
    svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % kPaletteSize];
        svg << "<line x1=\"" << num(legend_x) << "\" y1=\"" << num(legend_y - 4)
            << "\" x2=\"" << num(legend_x + 22) << "\" y2=\"" << num(legend_y - 4)
            << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << num(legend_x + 28) << "\" y=\"" << num(legend_y) << "\">"
            << escape(series[i].label) << "</text>\n";
        legend_y += 16;
    }
    svg << "</g>\n</svg>\n";
    return svg.str();
}

namespace {

// Diverging map: -1 blue, 0 white, +1 red; NaN gray.
std::string correlation_color(double rho) {
    if (std::isnan(rho)) return "#bdbdbd";
    rho = std::clamp(rho, -1.0, 1.0);
    int r, g, b;
    if (rho >= 0) {
        r = 178 + static_cast<int>((247 - 178) * (1.0 - rho));
        g = 24 + static_cast<int>((247 - 24) * (1.0 - rho));
        b = 43 + static_cast<int>((247 - 43) * (1.0 - rho));
    } else {
        r = 33 + static_cast<int>((247 - 33) * (1.0 + rho));
        g = 102 + static_cast<int>((247 - 102) * (1.0 + rho));
        b = 172 + static_cast<int>((247 - 172) * (1.0 + rho));
    }
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace

std::string heatmap(const std::vector<std::string>& labels,
                    const std::vector<std::vector<double>>& matrix,
                    const std::vector<std::size_t>& group_boundaries,
                    const std::string& title) {
    const std::size_t k = labels.size();
    if (matrix.size() != k)
        throw DomainError("heatmap: matrix/label size mismatch");
    const double cell = k <= 8 ? 52.0 : (k <= 14 ? 40.0 : 30.0);
    const double left = 140, top = 64;
    const int width = static_cast<int>(left + cell * static_cast<double>(k) + 30);
    const int height = static_cast<int>(top + cell * static_cast<double>(k) + 130);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
        << "\">\n<rect width=\"" << width << "\" height=\"" << height
        << "\" fill=\"white\"/>\n";
    if (!title.empty())
        svg << "<text x=\"" << width / 2
            << "\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"15\">"
            << escape(title) << "</text>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"10\">\n";
    for (std::size_t row = 0; row < k; ++row) {
        if (matrix[row].size() != k)
            throw DomainError("heatmap: matrix is not square");
        for (std::size_t col = 0; col < k; ++col) {
            const double x = left + cell * static_cast<double>(col);
            const double y = top + cell * static_cast<double>(row);
            const double rho = matrix[row][col];
            svg << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
                << num(cell) << "\" height=\"" << num(cell) << "\" fill=\""
                << correlation_color(rho) << "\" stroke=\"white\" stroke-width=\"1\"/>\n";
            const bool dark = std::isfinite(rho) && std::abs(rho) > 0.55;
            char text[16];
            if (std::isnan(rho))
                std::snprintf(text, sizeof(text), "--");
            else
                std::snprintf(text, sizeof(text), "%.2f", rho);
            svg << "<text x=\"" << num(x + cell / 2) << "\" y=\""
                << num(y + cell / 2 + 3.5) << "\" text-anchor=\"middle\" fill=\""
                << (dark ? "white" : "#333") << "\">" << text << "</text>\n";
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        svg << "<text x=\"" << num(left - 8) << "\" y=\""
            << num(top + cell * static_cast<double>(i) + cell / 2 + 3.5)
            << "\" text-anchor=\"end\">" << escape(labels[i]) << "</text>\n";
        const double cx = left + cell * static_cast<double>(i) + cell / 2;
        const double cy = top + cell * static_cast<double>(k) + 10;
        svg << "<text x=\"" << num(cx) << "\" y=\"" << num(cy)
            << "\" text-anchor=\"end\" transform=\"rotate(-55 " << num(cx) << ' '
            << num(cy) << ")\">" << escape(labels[i]) << "</text>\n";
    }
    svg << "</g>\n";

    for (std::size_t boundary : group_boundaries) {
        if (boundary == 0 || boundary >= k) continue;
        const double offset = cell * static_cast<double>(boundary);
        svg << "<line x1=\"" << num(left + offset) << "\" y1=\"" << num(top) << "\" x2=\""
            << num(left + offset) << "\" y2=\""
            << num(top + cell * static_cast<double>(k))
            << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        svg << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + offset) << "\" x2=\""
            << num(left + cell * static_cast<double>(k)) << "\" y2=\""
            << num(top + offset) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open SVG for writing: " + path);
    out << svg;
    if (!out) throw IoError("write failure on SVG: " + path);
}

}  // namespace selret::plot
