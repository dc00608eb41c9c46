#include "magspec/jet.hpp"

#include <cmath>

namespace magspec {

Jet2& Jet2::operator+=(const Jet2& o) {
  value_ += o.value_;
  for (std::size_t i = 0; i < grad_.size(); ++i) grad_[i] += o.grad_[i];
  for (std::size_t i = 0; i < hess_.size(); ++i) hess_[i] += o.hess_[i];
  return *this;
}

Jet2& Jet2::operator*=(double c) {
  value_ *= c;
  for (auto& g : grad_) g *= c;
  for (auto& h : hess_) h *= c;
  return *this;
}

Jet2 operator*(const Jet2& a, const Jet2& b) {
  const std::size_t d = a.d_;
  Jet2 out(d, a.value_ * b.value_);
  for (std::size_t i = 0; i < d; ++i) out.grad_[i] = a.grad_[i] * b.value_ + a.value_ * b.grad_[i];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out.hess_[i * d + j] = a.hess_[i * d + j] * b.value_ + a.value_ * b.hess_[i * d + j] +
                             a.grad_[i] * b.grad_[j] + a.grad_[j] * b.grad_[i];
  return out;
}

Jet2 Jet2::compose(double g0, double g1, double g2) const {
  Jet2 out(d_, g0);
  for (std::size_t i = 0; i < d_; ++i) out.grad_[i] = g1 * grad_[i];
  for (std::size_t i = 0; i < d_; ++i)
    for (std::size_t j = 0; j < d_; ++j)
      out.hess_[i * d_ + j] = g1 * hess_[i * d_ + j] + g2 * grad_[i] * grad_[j];
  return out;
}

namespace {

// f(s) = exp(-1/s) for s > 0, else 0, with two derivatives.
BumpValue edge(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0};
  const double f = std::exp(-1.0 / s);
  const double s2 = s * s;
  return {f, f / s2, f * (1.0 / (s2 * s2) - 2.0 / (s2 * s))};
}

} // namespace

BumpValue bump_profile(double rho) {
  if (rho <= 0.5) return {1.0, 0.0, 0.0};
  if (rho >= 1.0) return {0.0, 0.0, 0.0};
  // step(s) = f(s) / (f(s) + f(1-s)) at s = 2 - 2 rho
  const double s = 2.0 - 2.0 * rho;
  const BumpValue a = edge(s);
  const BumpValue b0 = edge(1.0 - s);
  const BumpValue b{b0.value, -b0.d1, b0.d2};  // d/ds of f(1-s)
  const double den = a.value + b.value;
  const double den1 = a.d1 + b.d1;
  const double den2 = a.d2 + b.d2;
  const double q = a.value / den;
  const double q1 = (a.d1 - q * den1) / den;
  const double q2 = (a.d2 - 2.0 * q1 * den1 - q * den2) / den;
  // ds/drho = -2
  return {q, -2.0 * q1, 4.0 * q2};
}

} // namespace magspec
