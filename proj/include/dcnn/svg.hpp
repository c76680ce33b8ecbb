#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dcnn {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
  std::string color = "#1f6fb2";
  bool draw_line = true;
  bool draw_points = false;
};

/// Static SVG 1.1 polyline chart: axes, ticks, legend, no interactivity.
std::string render_svg_chart(const std::string& title, const std::string& x_label,
                             const std::string& y_label, const std::vector<SvgSeries>& series);

void write_svg_chart(const std::string& path, const std::string& title, const std::string& x_label,
                     const std::string& y_label, const std::vector<SvgSeries>& series);

}  // namespace dcnn
