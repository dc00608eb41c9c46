#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace magspec::svg {

// Row-major field: values[iy * nx + ix], sampled at x_lo + ix dx, y_lo + iy dy.
struct Field {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  std::vector<double> values;
};

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false;
};

struct Marker {
  double x;
  double y;
};

struct Circle {
  double x;
  double y;
  double r;
};

// Each plot is a standalone SVG with its data echoed in a comment.
std::string heatmap(const Field& f, const std::string& title, bool log_scale = false);
std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label, bool log_y = false);
// Contour lines of log10(field) at the given levels (marching squares), with
// optional point markers.
std::string contour(const Field& f, const std::vector<double>& levels, const std::string& title,
                    const std::vector<Marker>& markers = {});
std::string circles(const std::vector<Circle>& circles, double x_lo, double x_hi, double y_lo, double y_hi,
                    const std::string& title);

} // namespace magspec::svg
