#pragma once

#include <string>
#include <vector>

namespace hoif {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  /// Category labels for the x axis (used instead of numeric ticks when non-empty;
  /// series x values are then category indices).
  std::vector<std::string> x_categories;
};

/// Minimal standalone SVG line chart: frame, axis labels, ticks, one polyline per
/// series, legend.
std::string line_plot_svg(const PlotSpec& spec);

}  // namespace hoif
