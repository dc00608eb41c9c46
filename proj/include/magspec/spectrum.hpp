#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "magspec/discrete_operator.hpp"

namespace magspec {

inline constexpr std::size_t kDenseLimit = 4096;
inline constexpr double kResidualTolerance = 1e-8;

struct SpectrumResult {
  std::vector<Complex> eigenvalues;  // sorted by real part, then imaginary part
  std::vector<double> residuals;     // |P v - lambda v| / |v|
  std::string method;                // "dense" or "shift-invert-arnoldi"
  Complex shift{0.0, 0.0};
  std::size_t iterations = 0;        // restarts (sparse) or refinement steps (dense)
  std::size_t dimension = 0;
};

// k eigenvalues of smallest real part from a full dense decomposition.
// Eigenvectors of the reported eigenvalues come from inverse iteration and
// every pair is residual-checked. Requires size <= kDenseLimit.
SpectrumResult eigs_dense(const DiscreteOperator& op, std::size_t k);

// All eigenvalues of P (unsorted, unverified); the raw dense step of eigs_dense.
std::vector<Complex> dense_eigenvalues(const SparseMatrix& p);

struct SparseOptions {
  std::size_t max_restarts = 30;
  std::size_t max_subspace = 400;
  std::uint64_t seed = 1;
};

// k eigenvalues nearest `shift` by shift-invert Arnoldi with sparse LU.
SpectrumResult eigs_sparse(const DiscreteOperator& op, std::size_t k, Complex shift,
                           const SparseOptions& options = {});

// Residual |P v - lambda v| / |v| after a few inverse-iteration steps at lambda.
double refine_residual(const SparseMatrix& p, Complex lambda, std::size_t steps = 3);

struct ShiftGrid {
  double re_lo = 0.0;
  double re_hi = 1.0;
  double im_lo = 0.0;
  double im_hi = 1.0;
  std::size_t re_count = 1;
  std::size_t im_count = 1;

  Complex at(std::size_t ir, std::size_t ii) const;
};

struct Pseudospectrum {
  ShiftGrid grid;
  std::vector<double> smin;  // row-major: index ii * re_count + ir
};

// Smallest singular value of P - z per shift: 1 / |(P - z)^{-1}|_2 by Lanczos
// on (P - z)^{-H} (P - z)^{-1}. Shifts where the factorization breaks report 0.
Pseudospectrum pseudospectrum(const DiscreteOperator& op, const ShiftGrid& grid);
double smallest_singular_value(const SparseMatrix& p, Complex z);

struct CountingResult {
  double lambda = 0.0;
  std::vector<double> box_sizes;
  std::vector<std::size_t> grid_points;  // per axis
  std::vector<std::size_t> counts;
  std::vector<std::string> methods;
  bool stabilized = false;               // last two counts agree
};

// Number of residual-verified eigenvalues with Re <= lambda on the boxes
// [-L/2, L/2]^d with L * n_per_unit - 1 interior points per axis.
CountingResult counting_growth(const PotentialSystem& sys, double lambda, const std::vector<double>& box_sizes,
                               double n_per_unit);

nlohmann::json to_json(const SpectrumResult& s);
std::string to_csv(const SpectrumResult& s);
std::string to_csv(const Pseudospectrum& p);
nlohmann::json to_json(const CountingResult& c);

} // namespace magspec
