#pragma once

#include <string>
#include <vector>

namespace auvgp {

struct SvgSeries {
    std::vector<double> x, y;
    std::string color = "#1f6fb8";
    std::string label;
    double width = 1.2;
};

/// Shaded region between lo(x) and hi(x), drawn behind the series.
struct SvgBand {
    std::vector<double> x, lo, hi;
    std::string color = "#1f6fb8";
    double opacity = 0.18;
    std::string label;
};

/// Self-contained SVG line chart: axes, ticks, legend, optional bands.
/// Coordinates are emitted with fixed precision so identical inputs give
/// identical bytes.
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgBand>& bands,
                      const std::vector<SvgSeries>& series, int width = 880,
                      int height = 300);

}  // namespace auvgp
