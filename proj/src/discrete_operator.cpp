#include "magspec/discrete_operator.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "magspec/error.hpp"

namespace magspec {

namespace {

using Triplet = Eigen::Triplet<Complex>;

const Complex kI(0.0, 1.0);

} // namespace

DiscreteOperator::DiscreteOperator(const PotentialSystem& sys, GridSpec grid) : grid_(std::move(grid)) {
  const std::size_t d = grid_.dimension();
  if (sys.dimension() != d) throw DimensionError("system and grid dimensions differ");
  const std::size_t n = grid_.size();
  const auto& a = sys.magnetic_potential();
  std::vector<CompiledPolynomial> a_c;
  for (const auto& p : a) a_c.emplace_back(p);

  u_.assign(sys.electric_factors().size(), Eigen::VectorXd(n));
  v_.resize(n);
  w_.resize(n);
  {
    std::vector<CompiledPolynomial> u_c;
    for (const auto& p : sys.electric_factors()) u_c.emplace_back(p);
    const CompiledPolynomial v_c(sys.imaginary_potential());
    for (std::size_t idx = 0; idx < n; ++idx) {
      const Point x = grid_.node(idx);
      double u2 = 0.0;
      for (std::size_t l = 0; l < u_c.size(); ++l) {
        u_[l][static_cast<Eigen::Index>(idx)] = u_c[l](x);
        u2 += u_[l][static_cast<Eigen::Index>(idx)] * u_[l][static_cast<Eigen::Index>(idx)];
      }
      v_[static_cast<Eigen::Index>(idx)] = v_c(x);
      w_[static_cast<Eigen::Index>(idx)] = Complex(u2, v_[static_cast<Eigen::Index>(idx)]);
    }
  }

  std::vector<Triplet> p_triplets;
  x_.resize(d);
  edge_tail_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t nj = grid_.n()[j];
    const double h = grid_.h()[j];
    const std::size_t lines = n / nj;
    const std::size_t edges = lines * (nj + 1);
    std::vector<Triplet> x_triplets;
    x_triplets.reserve(2 * edges);
    edge_tail_[j].assign(edges, -1);
    const bool magnetic = !a.empty() && !a_c[j].is_zero();
    std::size_t e = 0;
    for (std::size_t line = 0; line < lines; ++line) {
      // base node of the line (k_j = 0): split line index around axis j
      const std::size_t stride = grid_.stride(j);
      const std::size_t base = (line / stride) * stride * nj + line % stride;
      Point mid = grid_.node(base);
      for (std::size_t k = 0; k <= nj; ++k, ++e) {
        // edge between positions k-1 and k on the line
        const long long tail = k == 0 ? -1 : static_cast<long long>(base + (k - 1) * stride);
        const long long head = k == nj ? -1 : static_cast<long long>(base + k * stride);
        double a_mid = 0.0;
        if (magnetic) {
          mid[j] = grid_.lo()[j] + (static_cast<double>(k) + 0.5) * h;
          a_mid = a_c[j](mid);
        }
        const Complex c_tail = kI / h - 0.5 * a_mid;
        const Complex c_head = -kI / h - 0.5 * a_mid;
        edge_tail_[j][e] = tail;
        const auto row = static_cast<Eigen::Index>(e);
        if (tail >= 0) x_triplets.emplace_back(row, tail, c_tail);
        if (head >= 0) x_triplets.emplace_back(row, head, c_head);
        if (tail >= 0) p_triplets.emplace_back(tail, tail, std::conj(c_tail) * c_tail);
        if (head >= 0) p_triplets.emplace_back(head, head, std::conj(c_head) * c_head);
        if (tail >= 0 && head >= 0) {
          p_triplets.emplace_back(tail, head, std::conj(c_tail) * c_head);
          p_triplets.emplace_back(head, tail, std::conj(c_head) * c_tail);
        }
      }
    }
    x_[j].resize(static_cast<Eigen::Index>(edges), static_cast<Eigen::Index>(n));
    x_[j].setFromTriplets(x_triplets.begin(), x_triplets.end());
  }
  for (std::size_t idx = 0; idx < n; ++idx)
    p_triplets.emplace_back(idx, idx, w_[static_cast<Eigen::Index>(idx)]);
  p_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  p_.setFromTriplets(p_triplets.begin(), p_triplets.end());
  p_.makeCompressed();
}

SparseMatrix DiscreteOperator::square_factor(std::size_t j) const {
  if (j >= x_.size()) throw DimensionError("axis out of range");
  const SparseMatrix& x = x_[j];
  std::vector<Triplet> t;
  for (Eigen::Index col = 0; col < x.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(x, col); it; ++it) {
      const long long tail = edge_tail_[j][static_cast<std::size_t>(it.row())];
      if (tail >= 0) t.emplace_back(tail, it.col(), it.value());
    }
  SparseMatrix s(x.cols(), x.cols());
  s.setFromTriplets(t.begin(), t.end());
  return s;
}

DiscreteOperator assemble(const PotentialSystem& sys, const GridSpec& grid) { return DiscreteOperator(sys, grid); }

LocalizedOperator assemble_localized(const PotentialSystem& sys, const GridSpec& grid, std::span<const double> center,
                                     double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) throw DomainError("localization scale must lie in (0, 1]");
  if (center.size() != sys.dimension()) throw DimensionError("center dimension does not match the system");
  PotentialSystem local = sys.localize(center, scale);
  DiscreteOperator op(local, grid);
  return LocalizedOperator{std::move(local), std::move(op)};
}

ComplexVector apply(const DiscreteOperator& op, const ComplexVector& u) {
  if (static_cast<std::size_t>(u.size()) != op.size()) throw DimensionError("vector length does not match the operator");
  return op.P() * u;
}

SparseMatrix commutator(const DiscreteOperator& op, std::size_t j, std::size_t k) {
  const SparseMatrix xj = op.square_factor(j);
  const SparseMatrix xk = op.square_factor(k);
  SparseMatrix c = SparseMatrix(xj * xk) - SparseMatrix(xk * xj);
  c.prune(Complex(0.0, 0.0));
  return c;
}

double commutator_defect(const DiscreteOperator& op, const PotentialSystem& sys, std::size_t j, std::size_t k,
                         const ComplexVector& u, std::size_t margin) {
  if (static_cast<std::size_t>(u.size()) != op.size()) throw DimensionError("vector length does not match the operator");
  const ComplexVector cu = commutator(op, j, k) * u;
  const CompiledPolynomial b(sys.field()(j, k));
  double worst = 0.0;
  for (std::size_t idx = 0; idx < op.size(); ++idx) {
    if (op.grid().cells_from_boundary(idx) < margin) continue;
    const auto i = static_cast<Eigen::Index>(idx);
    worst = std::max(worst, std::abs(cu[i] - kI * b(op.grid().node(idx)) * u[i]));
  }
  return worst;
}

std::string matrix_market(const SparseMatrix& m) {
  std::ostringstream out;
  out << "%%MatrixMarket matrix coordinate complex general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index col = 0; col < m.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(m, col); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
  return out.str();
}

void write_matrix_market(const SparseMatrix& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot open " + path + " for writing");
  f << matrix_market(m);
}

} // namespace magspec
