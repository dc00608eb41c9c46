#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace magspec {

using Point = std::vector<double>;

// Portable random source: mt19937_64 output is fixed by the standard, and the
// conversions below avoid the implementation-defined std distributions, so a
// seed gives the same numbers on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                        // [0, 1)
  double uniform(double lo, double hi);    // [lo, hi)
  double normal();                         // standard normal (Box-Muller)
  std::size_t index(std::size_t n);        // [0, n)
  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Seed for the i-th independent stream derived from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Unit directions for radial sampling in dimension d. Always contains the
// coordinate directions +-e_j; d = 2 uses equally spaced angles, d = 3 a
// Fibonacci sphere, higher d a seeded quasi-uniform set.
std::vector<Point> sphere_directions(std::size_t dimension, std::size_t count);

// Radii 2^(k/shells_per_doubling) between inner and outer (both included);
// anchored at powers of two so r = 1 is always a shell.
std::vector<double> geometric_radii(double inner, double outer, unsigned shells_per_doubling);

// Uniform point in the unit ball of dimension d.
Point uniform_in_ball(Rng& rng, std::size_t dimension);

double norm(const Point& x);
double distance(const Point& a, const Point& b);

} // namespace magspec
