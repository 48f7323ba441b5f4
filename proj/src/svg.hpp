#pragma once

// Small static SVG renderer for the report charts.

#include <string>
#include <utility>
#include <vector>

namespace emdot::svg {

struct Series {
  std::string name;
  std::vector<double> x;  // empty: 0..n-1
  std::vector<double> y;  // NaN breaks the line
  bool heavy = false;
  bool dashed = false;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;  // label for x = 0..n-1
  std::vector<Series> series;
  /// Shaded x-intervals drawn behind the data.
  std::vector<std::pair<double, double>> bands;
};

std::string render(const LineChart& chart);

struct Heatmap {
  std::string title;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  /// values[r][c] in [0,1]; darker means larger.
  std::vector<std::vector<double>> values;
};

std::string render(const Heatmap& map);

/// Grey level (0-255) used for a heatmap cell of value v in [0,1].
int shade(double v);

}  // namespace emdot::svg
