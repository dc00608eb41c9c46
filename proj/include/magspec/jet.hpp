#pragma once

#include <cstddef>
#include <vector>

namespace magspec {

// Value, gradient and Hessian of a scalar function of d variables, propagated
// through arithmetic by the chain rule (second-order forward mode).
class Jet2 {
public:
  Jet2() = default;
  explicit Jet2(std::size_t dimension, double value = 0.0)
      : d_(dimension), value_(value), grad_(dimension, 0.0), hess_(dimension * dimension, 0.0) {}

  std::size_t dimension() const noexcept { return d_; }
  double value() const noexcept { return value_; }
  double grad(std::size_t i) const { return grad_[i]; }
  double hess(std::size_t i, std::size_t j) const { return hess_[i * d_ + j]; }
  double& grad(std::size_t i) { return grad_[i]; }
  double& hess(std::size_t i, std::size_t j) { return hess_[i * d_ + j]; }
  double& value() noexcept { return value_; }

  Jet2& operator+=(const Jet2& o);
  Jet2& operator*=(double c);
  friend Jet2 operator*(const Jet2& a, const Jet2& b);

  // g(this) for a scalar g with g(v), g'(v), g''(v) given.
  Jet2 compose(double g0, double g1, double g2) const;

private:
  std::size_t d_ = 0;
  double value_ = 0.0;
  std::vector<double> grad_;
  std::vector<double> hess_;
};

// Plateau bump profile built from exp(-1/s) splines:
//   bump(rho) = 1 on [0, 1/2], 0 on [1, inf), strictly positive on [0, 1).
struct BumpValue {
  double value;
  double d1;
  double d2;
};
BumpValue bump_profile(double rho);

// Upper bounds of |bump'| and |bump''| over [0, inf).
inline constexpr double kBumpMaxSlope = 4.0;
inline constexpr double kBumpMaxCurvature = 39.37;

} // namespace magspec
