#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "magspec/grid.hpp"
#include "magspec/potential.hpp"

namespace magspec {

using Complex = std::complex<double>;
using SparseMatrix = Eigen::SparseMatrix<Complex>;
using ComplexVector = Eigen::VectorXcd;

// Discretization of P = sum_j (D_j - A_j)^2 + U + iV on a Dirichlet grid.
//
// X_j maps node values to edge values along axis j. Every grid line along j
// has n_j + 1 edges, the first and last ones reaching a boundary node where
// the function is zero:
//   (X_j u)_e = (u_{k+e_j} - u_k) / (i h_j) - A_j(mid_e) (u_k + u_{k+e_j}) / 2.
// P = sum_j X_j^H X_j + diag(W) with W = U + iV at the nodes, so that
//   Re <Pu, u> = sum_j |X_j u|^2 + <U u, u>   and   Im <Pu, u> = <V u, u>.
class DiscreteOperator {
public:
  DiscreteOperator(const PotentialSystem& sys, GridSpec grid);

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return grid_.size(); }
  const SparseMatrix& P() const noexcept { return p_; }
  const std::vector<SparseMatrix>& X() const noexcept { return x_; }
  const SparseMatrix& X(std::size_t j) const { return x_[j]; }
  const ComplexVector& W_diag() const noexcept { return w_; }
  // U_l at the nodes, one vector per factor.
  const std::vector<Eigen::VectorXd>& U_values() const noexcept { return u_; }
  const Eigen::VectorXd& V_values() const noexcept { return v_; }

  // Square node-to-node version of X_j: the rows of X_j whose edge starts at
  // an interior node, indexed by that node. Used for compositions X_j X_k.
  SparseMatrix square_factor(std::size_t j) const;

private:
  GridSpec grid_;
  std::vector<SparseMatrix> x_;
  std::vector<std::vector<long long>> edge_tail_;  // tail node of each edge, -1 at the lower boundary
  std::vector<Eigen::VectorXd> u_;
  Eigen::VectorXd v_;
  ComplexVector w_;
  SparseMatrix p_;
};

DiscreteOperator assemble(const PotentialSystem& sys, const GridSpec& grid);

struct LocalizedOperator {
  PotentialSystem system;  // the rescaled system, exact
  DiscreteOperator op;
};

// Operator of the system seen at scale R around x_m (see PotentialSystem::localize),
// assembled on `grid`; requires 0 < R <= 1.
LocalizedOperator assemble_localized(const PotentialSystem& sys, const GridSpec& grid, std::span<const double> center,
                                     double scale);

ComplexVector apply(const DiscreteOperator& op, const ComplexVector& u);

// The discrete commutator [X_j, X_k] built from square factors, and the
// largest deviation |([X_j,X_k] - i B_jk) u| over nodes at least `margin`
// cells from the boundary.
SparseMatrix commutator(const DiscreteOperator& op, std::size_t j, std::size_t k);
double commutator_defect(const DiscreteOperator& op, const PotentialSystem& sys, std::size_t j, std::size_t k,
                         const ComplexVector& u, std::size_t margin = 2);

// Coordinate format: header line, "rows cols nnz", then "row col re im"
// (1-based), column-major order.
void write_matrix_market(const SparseMatrix& m, const std::string& path);
std::string matrix_market(const SparseMatrix& m);

} // namespace magspec
