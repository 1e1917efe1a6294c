#pragma once

#include <string>
#include <vector>

namespace l1pen {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct ChartLabels {
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Self-contained SVG line chart with one polyline per series and a legend.
/// The root element carries data-x-min/-max, data-y-min/-max and the plot
/// box (data-plot-left/-top/-width/-height) so coordinates can be inverted.
/// Point coordinates are written with two decimals.
std::string render_svg_line(const std::vector<Series>& series, const ChartLabels& labels);

}  // namespace l1pen
