#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace berrylab::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_y = false;
};

/// Axes, ticks and one polyline per series.
std::string render(const LinePlot& plot);

/// One coloured cell per matrix entry (row 0 at the bottom) with a min/max legend.
std::string render_heat_strip(const Eigen::MatrixXd& values, const std::string& title);

}  // namespace berrylab::svg
