#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls the assembly code under test.

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magspec/grid.hpp"
#include "magspec/polynomial.hpp"
#include "magspec/potential.hpp"
#include "magspec/sampling.hpp"

namespace oracle {

using Complex = std::complex<double>;
using magspec::GridSpec;
using magspec::Point;
using magspec::Polynomial;
using magspec::PotentialSystem;
using magspec::Rng;
using Vec = Eigen::VectorXcd;

inline magspec::Rational small_rational(Rng& rng) {
  const long num = static_cast<long>(rng.index(7)) - 3;
  const long den = 1 + static_cast<long>(rng.index(4));
  magspec::Rational q(num, den);
  q.canonicalize();
  return q;
}

// Random polynomial of total degree <= degree with small rational coefficients.
inline Polynomial random_polynomial(Rng& rng, std::size_t d, unsigned degree) {
  Polynomial p(d);
  for (unsigned q = 0; q <= degree; ++q)
    for (const auto& a : magspec::multi_indices_of_order(d, q))
      if (rng.uniform() < 0.6) p.add_term(a, small_rational(rng));
  return p;
}

inline PotentialSystem random_system(Rng& rng, std::size_t d) {
  std::vector<Polynomial> a, u;
  for (std::size_t j = 0; j < d; ++j) a.push_back(random_polynomial(rng, d, 2));
  const std::size_t nu = 1 + rng.index(2);
  for (std::size_t l = 0; l < nu; ++l) u.push_back(random_polynomial(rng, d, 2));
  return PotentialSystem(d, a, u, random_polynomial(rng, d, 2));
}

inline Vec random_vector(Rng& rng, std::size_t n) {
  Vec v(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = Complex(rng.normal(), rng.normal());
  return v;
}

// Edge values of X_j u, straight from the stencil: edge e on a line joins
// node e-1 (tail) and node e (head); nodes -1 and n_j are the zero boundary.
inline std::vector<Complex> edge_derivative(const PotentialSystem& sys, const GridSpec& g, std::size_t j,
                                            const Vec& u) {
  const std::size_t d = g.dimension();
  const std::size_t nj = g.n()[j];
  const double h = g.h()[j];
  const Complex i_unit(0.0, 1.0);
  std::vector<Complex> out;
  for (std::size_t base = 0; base < g.size(); ++base) {
    const auto mi = g.multi_index(base);
    if (mi[j] != 0) continue;  // one pass per grid line
    for (std::size_t e = 0; e <= nj; ++e) {
      Point mid(d);
      for (std::size_t a = 0; a < d; ++a) mid[a] = g.coordinate(a, static_cast<long long>(mi[a]));
      mid[j] = g.lo()[j] + (static_cast<double>(e) + 0.5) * h;
      const Complex tail = e == 0 ? Complex(0.0) : u[static_cast<Eigen::Index>(base + (e - 1) * g.stride(j))];
      const Complex head = e == nj ? Complex(0.0) : u[static_cast<Eigen::Index>(base + e * g.stride(j))];
      const double aj = sys.magnetic_potential()[j].eval(mid);
      out.push_back((head - tail) / (i_unit * h) - aj * (tail + head) / 2.0);
    }
  }
  return out;
}

// sum_j X_j^H X_j u + W u, computed edge by edge in the same line order as
// edge_derivative.
inline Vec apply_P(const PotentialSystem& sys, const GridSpec& g, const Vec& u) {
  const std::size_t d = g.dimension();
  const Complex i_unit(0.0, 1.0);
  Vec out = Vec::Zero(u.size());
  for (std::size_t j = 0; j < d; ++j) {
    const std::vector<Complex> xu = edge_derivative(sys, g, j, u);
    const std::size_t nj = g.n()[j];
    const double h = g.h()[j];
    std::size_t edge = 0;
    for (std::size_t base = 0; base < g.size(); ++base) {
      const auto mi = g.multi_index(base);
      if (mi[j] != 0) continue;
      for (std::size_t e = 0; e <= nj; ++e, ++edge) {
        Point mid(d);
        for (std::size_t a = 0; a < d; ++a) mid[a] = g.coordinate(a, static_cast<long long>(mi[a]));
        mid[j] = g.lo()[j] + (static_cast<double>(e) + 0.5) * h;
        const double aj = sys.magnetic_potential()[j].eval(mid);
        // coefficients of tail and head in the edge value, conjugated
        const Complex c_tail = std::conj(-1.0 / (i_unit * h) - aj / 2.0);
        const Complex c_head = std::conj(1.0 / (i_unit * h) - aj / 2.0);
        if (e > 0) out[static_cast<Eigen::Index>(base + (e - 1) * g.stride(j))] += c_tail * xu[edge];
        if (e < nj) out[static_cast<Eigen::Index>(base + e * g.stride(j))] += c_head * xu[edge];
      }
    }
  }
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.node(k);
    out[static_cast<Eigen::Index>(k)] += Complex(sys.real_potential(x), sys.imag_potential(x)) *
                                         u[static_cast<Eigen::Index>(k)];
  }
  return out;
}

// m^r(x) summed straight from the definition: all partial derivatives listed
// by brute force over exponent vectors.
inline double weight_by_definition(const PotentialSystem& sys, unsigned r, const Point& x, unsigned order) {
  const std::size_t d = sys.dimension();
  auto derivatives_of_order = [&](const Polynomial& p, unsigned q) {
    double s = 0.0;
    std::vector<unsigned> e(d, 0);
    // enumerate all exponent vectors with entries <= q and total q
    std::size_t total = 1;
    for (std::size_t a = 0; a < d; ++a) total *= (q + 1);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      unsigned sum = 0;
      for (std::size_t a = 0; a < d; ++a) {
        e[a] = static_cast<unsigned>(c % (q + 1));
        c /= (q + 1);
        sum += e[a];
      }
      if (sum != q) continue;
      s += std::abs(p.derive(magspec::MultiIndex(e)).eval(x));
    }
    return s;
  };
  auto m_q = [&](unsigned q) {
    double s = 0.0;
    for (const auto& u : sys.electric_factors()) s += derivatives_of_order(u, q);
    if (q >= 1) {
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = j + 1; k < d; ++k) s += derivatives_of_order(sys.field()(j, k), q - 1);
      s += derivatives_of_order(sys.imaginary_potential(), q - 1);
    }
    return s;
  };
  if (order != r) return m_q(order);  // a single order
  double total = 1.0;
  for (unsigned q = 0; q <= r; ++q) total += m_q(q);
  return total;
}

// Dense matrix of a sparse operator.
template <class Sparse>
Eigen::MatrixXcd dense(const Sparse& m) {
  return Eigen::MatrixXcd(m);
}

// Smallest singular value of a dense matrix by a full SVD.
inline double dense_smin(const Eigen::MatrixXcd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
  return svd.singularValues().minCoeff();
}

} // namespace oracle
