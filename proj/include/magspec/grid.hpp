#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "magspec/potential.hpp"
#include "magspec/sampling.hpp"

namespace magspec {

// Interior nodes of a uniform Dirichlet grid on the box prod_j [lo_j, hi_j]:
// node k_j on axis j sits at lo_j + (k_j + 1) h_j with h_j = (hi_j - lo_j)/(n_j + 1).
// Linear index runs with axis 0 fastest.
class GridSpec {
public:
  GridSpec() = default;
  GridSpec(Point lo, Point hi, std::vector<std::size_t> n);

  static GridSpec cube(std::size_t dimension, double lo, double hi, std::size_t n);

  std::size_t dimension() const noexcept { return lo_.size(); }
  const Point& lo() const noexcept { return lo_; }
  const Point& hi() const noexcept { return hi_; }
  const std::vector<std::size_t>& n() const noexcept { return n_; }
  const std::vector<double>& h() const noexcept { return h_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(std::size_t axis) const { return stride_[axis]; }

  double coordinate(std::size_t axis, long long k) const { return lo_[axis] + static_cast<double>(k + 1) * h_[axis]; }
  std::vector<std::size_t> multi_index(std::size_t index) const;
  Point node(std::size_t index) const;
  // Distance in cells from the node to the nearest boundary (outside) node.
  std::size_t cells_from_boundary(std::size_t index) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
  Point lo_;
  Point hi_;
  std::vector<std::size_t> n_;
  std::vector<double> h_;
  std::vector<std::size_t> stride_;
  std::size_t size_ = 0;
};

// Spacing bound h <= (1/8) min(1, 1 / max(1, sup_box |W|^(1/2))) with |W|
// sampled on a 33-point-per-axis lattice of the box.
double resolution_spacing(const PotentialSystem& sys, const Point& lo, const Point& hi);
GridSpec default_grid(const PotentialSystem& sys, const Point& lo, const Point& hi);

} // namespace magspec
