#include "magspec/grid.hpp"

#include <algorithm>
#include <cmath>

#include "magspec/error.hpp"

namespace magspec {

GridSpec::GridSpec(Point lo, Point hi, std::vector<std::size_t> n)
    : lo_(std::move(lo)), hi_(std::move(hi)), n_(std::move(n)) {
  if (lo_.empty() || lo_.size() != hi_.size() || lo_.size() != n_.size())
    throw DimensionError("grid bounds and counts have mismatched lengths");
  size_ = 1;
  for (std::size_t j = 0; j < lo_.size(); ++j) {
    if (n_[j] < 2) throw InputError("grid needs at least 2 interior points per axis");
    if (!(hi_[j] > lo_[j])) throw InputError("grid box must have hi > lo on every axis");
    h_.push_back((hi_[j] - lo_[j]) / static_cast<double>(n_[j] + 1));
    stride_.push_back(size_);
    size_ *= n_[j];
  }
}

GridSpec GridSpec::cube(std::size_t dimension, double lo, double hi, std::size_t n) {
  return GridSpec(Point(dimension, lo), Point(dimension, hi), std::vector<std::size_t>(dimension, n));
}

std::vector<std::size_t> GridSpec::multi_index(std::size_t index) const {
  std::vector<std::size_t> k(dimension());
  for (std::size_t j = 0; j < k.size(); ++j) {
    k[j] = index % n_[j];
    index /= n_[j];
  }
  return k;
}

Point GridSpec::node(std::size_t index) const {
  const auto k = multi_index(index);
  Point x(k.size());
  for (std::size_t j = 0; j < k.size(); ++j) x[j] = coordinate(j, static_cast<long long>(k[j]));
  return x;
}

std::size_t GridSpec::cells_from_boundary(std::size_t index) const {
  const auto k = multi_index(index);
  std::size_t best = static_cast<std::size_t>(-1);
  for (std::size_t j = 0; j < k.size(); ++j) best = std::min({best, k[j] + 1, n_[j] - k[j]});
  return best;
}

double resolution_spacing(const PotentialSystem& sys, const Point& lo, const Point& hi) {
  if (lo.size() != sys.dimension() || hi.size() != sys.dimension())
    throw DimensionError("box dimension does not match the system");
  const std::size_t d = sys.dimension();
  const std::size_t per_axis = 33;
  std::size_t total = 1;
  for (std::size_t j = 0; j < d; ++j) total *= per_axis;
  double sup_w = 0.0;
  Point x(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = lo[j] + (hi[j] - lo[j]) * static_cast<double>(rest % per_axis) / static_cast<double>(per_axis - 1);
      rest /= per_axis;
    }
    sup_w = std::max(sup_w, std::hypot(sys.real_potential(x), sys.imag_potential(x)));
  }
  return 0.125 * std::min(1.0, 1.0 / std::max(1.0, std::sqrt(sup_w)));
}

GridSpec default_grid(const PotentialSystem& sys, const Point& lo, const Point& hi) {
  const double h = resolution_spacing(sys, lo, hi);
  std::vector<std::size_t> n(lo.size());
  for (std::size_t j = 0; j < n.size(); ++j)
    n[j] = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil((hi[j] - lo[j]) / h)) - 1);
  return GridSpec(lo, hi, n);
}

} // namespace magspec
