#include "magspec/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include "magspec/error.hpp"
#include "magspec/parallel.hpp"
#include "magspec/sampling.hpp"

namespace magspec {

namespace {

using SparseLU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;

bool by_real_part(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

SparseMatrix shifted(const SparseMatrix& p, Complex z) {
  SparseMatrix identity(p.rows(), p.cols());
  identity.setIdentity();
  SparseMatrix a = p - z * identity;
  a.makeCompressed();
  return a;
}

// Factorizes P - z; false on breakdown.
bool factorize(SparseLU& lu, const SparseMatrix& p, Complex z) {
  const SparseMatrix a = shifted(p, z);
  lu.analyzePattern(a);
  lu.factorize(a);
  return lu.info() == Eigen::Success;
}

ComplexVector random_vector(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ComplexVector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(rng.normal(), rng.normal());
  return v / v.norm();
}

bool finite(const ComplexVector& v) { return v.allFinite(); }

double residual(const SparseMatrix& p, Complex lambda, const ComplexVector& v) {
  return (p * v - lambda * v).norm() / v.norm();
}

} // namespace

std::vector<Complex> dense_eigenvalues(const SparseMatrix& p) {
  const Eigen::MatrixXcd dense(p);
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(dense, false);
  if (schur.info() != Eigen::Success) throw SolverError("dense Schur decomposition did not converge");
  const auto& t = schur.matrixT();
  std::vector<Complex> out(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) out[static_cast<std::size_t>(i)] = t(i, i);
  return out;
}

double refine_residual(const SparseMatrix& p, Complex lambda, std::size_t steps) {
  SparseLU lu;
  Complex z = lambda;
  // an exactly singular pivot is possible when lambda is exact; nudge it
  const double scale = std::max(1.0, std::abs(lambda));
  for (int attempt = 0; !factorize(lu, p, z); ++attempt) {
    if (attempt == 3) return std::numeric_limits<double>::infinity();
    z = lambda + Complex(1e-13 * scale * std::pow(10.0, attempt), 0.0);
  }
  ComplexVector v = random_vector(static_cast<std::size_t>(p.rows()), 7);
  for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
    ComplexVector w = lu.solve(v);
    if (!finite(w) || w.norm() == 0.0) return std::numeric_limits<double>::infinity();
    v = w / w.norm();
  }
  return residual(p, lambda, v);
}

SpectrumResult eigs_dense(const DiscreteOperator& op, std::size_t k) {
  const std::size_t n = op.size();
  if (n > kDenseLimit)
    throw InputError("matrix dimension " + std::to_string(n) + " exceeds the dense limit " +
                     std::to_string(kDenseLimit) + "; use eigs_sparse");
  if (k == 0 || k > n) throw InputError("requested eigenvalue count must lie in [1, matrix size]");
  auto all = dense_eigenvalues(op.P());
  std::sort(all.begin(), all.end(), by_real_part);
  SpectrumResult out;
  out.method = "dense";
  out.dimension = n;
  out.iterations = 3;
  out.eigenvalues.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  out.residuals.resize(k);
  parallel_for(k, [&](std::size_t i) { out.residuals[i] = refine_residual(op.P(), out.eigenvalues[i]); });
  for (std::size_t i = 0; i < k; ++i)
    if (!(out.residuals[i] <= kResidualTolerance))
      throw SolverError("dense eigenpair failed residual verification (residual " +
                        std::to_string(out.residuals[i]) + ")");
  return out;
}

SpectrumResult eigs_sparse(const DiscreteOperator& op, std::size_t k, Complex shift, const SparseOptions& options) {
  const std::size_t n = op.size();
  if (k == 0 || k > n) throw InputError("requested eigenvalue count must lie in [1, matrix size]");
  const SparseMatrix& p = op.P();
  SparseLU lu;
  if (!factorize(lu, p, shift)) throw SolverError("sparse LU breakdown: shift is (numerically) an eigenvalue");

  std::size_t m = std::min(n, std::max<std::size_t>(2 * k + 10, 20));
  ComplexVector start = random_vector(n, options.seed);
  SpectrumResult out;
  out.method = "shift-invert-arnoldi";
  out.shift = shift;
  out.dimension = n;

  for (std::size_t cycle = 0;; ++cycle) {
    out.iterations = cycle + 1;
    Eigen::MatrixXcd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m + 1));
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(m));
    v.col(0) = start / start.norm();
    Eigen::Index steps = static_cast<Eigen::Index>(m);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(m); ++j) {
      ComplexVector w = lu.solve(ComplexVector(v.col(j)));
      if (!finite(w)) throw SolverError("sparse LU solve produced non-finite values");
      const double w_norm = w.norm();
      // classical Gram-Schmidt with one DGKS correction
      for (int pass = 0; pass < 2; ++pass) {
        const ComplexVector c = v.leftCols(j + 1).adjoint() * w;
        w -= v.leftCols(j + 1) * c;
        h.col(j).head(j + 1) += c;
      }
      const double beta = w.norm();
      h(j + 1, j) = beta;
      if (beta <= 1e-14 * w_norm) {
        steps = j + 1;
        break;
      }
      v.col(j + 1) = w / beta;
    }

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> small(h.topLeftCorner(steps, steps));
    if (small.info() != Eigen::Success) throw SolverError("Arnoldi projection eigensolve failed");
    std::vector<Eigen::Index> order(static_cast<std::size_t>(steps));
    for (Eigen::Index i = 0; i < steps; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return std::abs(small.eigenvalues()[a]) > std::abs(small.eigenvalues()[b]);
    });
    const std::size_t take = std::min<std::size_t>(k, static_cast<std::size_t>(steps));
    std::vector<Complex> lambdas(take);
    std::vector<ComplexVector> vectors(take);
    std::vector<double> res(take);
    bool all_ok = take == k;
    for (std::size_t i = 0; i < take; ++i) {
      const Complex theta = small.eigenvalues()[order[i]];
      lambdas[i] = shift + 1.0 / theta;
      vectors[i] = v.leftCols(steps) * small.eigenvectors().col(order[i]);
      vectors[i] /= vectors[i].norm();
      res[i] = residual(p, lambdas[i], vectors[i]);
      if (!(res[i] <= kResidualTolerance)) all_ok = false;
    }

    const bool exhausted = cycle + 1 >= options.max_restarts || (m >= n && steps == static_cast<Eigen::Index>(m));
    if (!all_ok && exhausted) {
      // Krylov residuals can stall on strongly non-normal matrices although the
      // Ritz values are accurate: verify with inverse iteration instead.
      for (std::size_t i = 0; i < take; ++i)
        if (!(res[i] <= kResidualTolerance)) res[i] = refine_residual(p, lambdas[i]);
      all_ok = take == k && std::all_of(res.begin(), res.end(), [](double r) { return r <= kResidualTolerance; });
      if (!all_ok) throw SolverError("shift-invert Arnoldi did not converge to the residual tolerance");
    }
    if (all_ok) {
      std::vector<std::size_t> idx(take);
      for (std::size_t i = 0; i < take; ++i) idx[i] = i;
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return by_real_part(lambdas[a], lambdas[b]); });
      for (std::size_t i : idx) {
        out.eigenvalues.push_back(lambdas[i]);
        out.residuals.push_back(res[i]);
      }
      return out;
    }
    start = ComplexVector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < take; ++i)
      if (!(res[i] <= kResidualTolerance)) start += vectors[i];
    if (start.norm() == 0.0) start = random_vector(n, derive_seed(options.seed, cycle + 1));
    m = std::min({n, 2 * m, std::max(options.max_subspace, k + 1)});
  }
}

Complex ShiftGrid::at(std::size_t ir, std::size_t ii) const {
  const double re = re_count == 1 ? re_lo : re_lo + (re_hi - re_lo) * static_cast<double>(ir) / static_cast<double>(re_count - 1);
  const double im = im_count == 1 ? im_lo : im_lo + (im_hi - im_lo) * static_cast<double>(ii) / static_cast<double>(im_count - 1);
  return {re, im};
}

double smallest_singular_value(const SparseMatrix& p, Complex z) {
  SparseLU lu;
  if (!factorize(lu, p, z)) return 0.0;
  const std::size_t n = static_cast<std::size_t>(p.rows());
  const Eigen::Index steps = static_cast<Eigen::Index>(std::min<std::size_t>(n, 60));
  Eigen::MatrixXcd q(static_cast<Eigen::Index>(n), steps + 1);
  std::vector<double> alpha;
  std::vector<double> beta;
  q.col(0) = random_vector(n, 11);
  double previous = 0.0;
  double top = 0.0;
  for (Eigen::Index j = 0; j < steps; ++j) {
    const ComplexVector x = lu.solve(ComplexVector(q.col(j)));
    ComplexVector w = lu.adjoint().solve(x);
    if (!finite(w)) return 0.0;
    for (int pass = 0; pass < 2; ++pass) w -= q.leftCols(j + 1) * (q.leftCols(j + 1).adjoint() * w).eval();
    alpha.push_back(x.squaredNorm());
    const double b = w.norm();

    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(j + 1, j + 1);
    for (Eigen::Index i = 0; i <= j; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i > 0) t(i, i - 1) = t(i - 1, i) = beta[static_cast<std::size_t>(i - 1)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t, Eigen::EigenvaluesOnly);
    top = es.eigenvalues().maxCoeff();
    if (!std::isfinite(top)) return 0.0;
    if (j > 0 && std::abs(top - previous) <= 1e-14 * top) break;
    previous = top;
    if (b <= 1e-14 * top || j + 1 == steps) break;
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }
  if (!(top > 0.0)) return 0.0;
  return 1.0 / std::sqrt(top);
}

Pseudospectrum pseudospectrum(const DiscreteOperator& op, const ShiftGrid& grid) {
  if (grid.re_count == 0 || grid.im_count == 0) throw InputError("shift grid is empty");
  Pseudospectrum out;
  out.grid = grid;
  out.smin.resize(grid.re_count * grid.im_count);
  parallel_for(out.smin.size(), [&](std::size_t i) {
    out.smin[i] = smallest_singular_value(op.P(), grid.at(i % grid.re_count, i / grid.re_count));
  });
  return out;
}

CountingResult counting_growth(const PotentialSystem& sys, double lambda, const std::vector<double>& box_sizes,
                               double n_per_unit) {
  if (!(lambda > 0.0)) throw DomainError("counting threshold must be positive");
  if (box_sizes.empty()) throw InputError("counting needs at least one box size");
  for (std::size_t i = 1; i < box_sizes.size(); ++i)
    if (!(box_sizes[i] > box_sizes[i - 1])) throw InputError("box sizes must be increasing");
  CountingResult out;
  out.lambda = lambda;
  out.box_sizes = box_sizes;
  const std::size_t d = sys.dimension();
  for (double len : box_sizes) {
    const auto n = static_cast<std::size_t>(std::max(2.0, std::round(len * n_per_unit) - 1.0));
    const DiscreteOperator op(sys, GridSpec::cube(d, -len / 2.0, len / 2.0, n));
    std::vector<Complex> below;
    if (op.size() <= kDenseLimit) {
      for (const Complex& z : dense_eigenvalues(op.P()))
        if (z.real() <= lambda) below.push_back(z);
      out.methods.push_back("dense");
    } else {
      // Heuristic: enlarge k until most of the eigenvalues nearest -1 lie above
      // the threshold. Eigenvalues with Re <= lambda but very large |Im| can be missed.
      std::size_t k = 16;
      while (true) {
        k = std::min(k, op.size());
        const auto s = eigs_sparse(op, k, Complex(-1.0, 0.0));
        below.clear();
        for (const Complex& z : s.eigenvalues)
          if (z.real() <= lambda) below.push_back(z);
        if (2 * below.size() < k || k == op.size()) break;
        k *= 2;
      }
      out.methods.push_back("shift-invert-arnoldi");
    }
    std::vector<double> res(below.size());
    parallel_for(below.size(), [&](std::size_t i) { res[i] = refine_residual(op.P(), below[i]); });
    std::size_t count = 0;
    for (double r : res)
      if (r <= kResidualTolerance) ++count;
    out.counts.push_back(count);
    out.grid_points.push_back(n);
  }
  out.stabilized = out.counts.size() >= 2 && out.counts[out.counts.size() - 1] == out.counts[out.counts.size() - 2];
  return out;
}

namespace {

nlohmann::json complex_json(const Complex& z) { return {{"re", z.real()}, {"im", z.imag()}}; }

std::string number(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

} // namespace

nlohmann::json to_json(const SpectrumResult& s) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& z : s.eigenvalues) ev.push_back(complex_json(z));
  return {{"eigenvalues", ev},
          {"residuals", s.residuals},
          {"method", s.method},
          {"shift", complex_json(s.shift)},
          {"iterations", s.iterations},
          {"dimension", s.dimension}};
}

std::string to_csv(const SpectrumResult& s) {
  std::string out = "index,re,im,residual\n";
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    out += std::to_string(i) + "," + number(s.eigenvalues[i].real()) + "," + number(s.eigenvalues[i].imag()) + "," +
           number(s.residuals[i]) + "\n";
  return out;
}

std::string to_csv(const Pseudospectrum& p) {
  std::string out = "re,im,smin\n";
  for (std::size_t i = 0; i < p.smin.size(); ++i) {
    const Complex z = p.grid.at(i % p.grid.re_count, i / p.grid.re_count);
    out += number(z.real()) + "," + number(z.imag()) + "," + number(p.smin[i]) + "\n";
  }
  return out;
}

nlohmann::json to_json(const CountingResult& c) {
  return {{"lambda", c.lambda},     {"box_sizes", c.box_sizes}, {"grid_points_per_axis", c.grid_points},
          {"counts", c.counts},     {"methods", c.methods},     {"stabilized", c.stabilized}};
}

} // namespace magspec
