#include "magspec/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "magspec/error.hpp"

namespace magspec {

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::size_t Rng::index(std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<Point> sphere_directions(std::size_t dimension, std::size_t count) {
  if (dimension == 0) throw DimensionError("dimension must be positive");
  std::vector<Point> dirs;
  if (dimension == 1) return {{1.0}, {-1.0}};
  if (dimension == 2) {
    const std::size_t n = std::max<std::size_t>(4, (count + 3) / 4 * 4);
    for (std::size_t k = 0; k < n; ++k) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      // multiples of pi/2 land exactly on the axes
      if (4 * k % n == 0) {
        const std::size_t quarter = 4 * k / n;
        const double c[] = {1.0, 0.0, -1.0, 0.0};
        const double s[] = {0.0, 1.0, 0.0, -1.0};
        dirs.push_back({c[quarter], s[quarter]});
      } else {
        dirs.push_back({std::cos(theta), std::sin(theta)});
      }
    }
    return dirs;
  }
  for (std::size_t j = 0; j < dimension; ++j) {
    for (double sign : {1.0, -1.0}) {
      Point e(dimension, 0.0);
      e[j] = sign;
      dirs.push_back(std::move(e));
    }
  }
  if (dimension == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (std::size_t k = 0; k < count; ++k) {
      const double z = 1.0 - 2.0 * (static_cast<double>(k) + 0.5) / static_cast<double>(count);
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(k);
      dirs.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return dirs;
  }
  Rng rng(0x5eed0001ULL + dimension);
  for (std::size_t k = 0; k < count; ++k) {
    Point p(dimension);
    double n2 = 0.0;
    for (auto& c : p) {
      c = rng.normal();
      n2 += c * c;
    }
    const double n = std::sqrt(n2);
    for (auto& c : p) c /= n;
    dirs.push_back(std::move(p));
  }
  return dirs;
}

std::vector<double> geometric_radii(double inner, double outer, unsigned shells_per_doubling) {
  if (!(inner > 0.0) || !(outer >= inner) || shells_per_doubling == 0)
    throw DomainError("invalid radial shell specification");
  const double s = shells_per_doubling;
  const long k0 = static_cast<long>(std::ceil(std::log2(inner) * s - 1e-9));
  std::vector<double> radii;
  radii.push_back(inner);
  for (long k = k0;; ++k) {
    const double r = std::exp2(static_cast<double>(k) / s);
    if (r > outer * (1.0 + 1e-12)) break;
    if (r > radii.back() * (1.0 + 1e-12)) radii.push_back(r);
  }
  if (outer > radii.back() * (1.0 + 1e-12)) radii.push_back(outer);
  return radii;
}

Point uniform_in_ball(Rng& rng, std::size_t dimension) {
  Point p(dimension);
  double n2 = 0.0;
  for (auto& c : p) {
    c = rng.normal();
    n2 += c * c;
  }
  const double n = std::sqrt(n2);
  const double radius = std::pow(rng.uniform(), 1.0 / static_cast<double>(dimension));
  for (auto& c : p) c = n > 0.0 ? c / n * radius : 0.0;
  return p;
}

double norm(const Point& x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

double distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

} // namespace magspec
