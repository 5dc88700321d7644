#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace stable_opinf {

struct PlotSeries {
  std::string label;
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  int width = 720;
  int height = 360;
};

/// Standalone SVG line plot with axes, five ticks per axis and a legend.
/// Non-finite samples break the polyline.
std::string render_line_plot(const PlotSpec& spec,
                             const std::vector<PlotSeries>& series);

}  // namespace stable_opinf
