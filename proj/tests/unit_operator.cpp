#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "magspec/criterion.hpp"
#include "magspec/discrete_operator.hpp"
#include "magspec/error.hpp"
#include "magspec/spectrum.hpp"
#include "oracles.hpp"

using namespace magspec;

namespace {

PotentialSystem make(std::size_t d, std::vector<std::string> a, std::vector<std::string> u, const std::string& v) {
  std::vector<Polynomial> ap, up;
  for (const auto& s : a) ap.push_back(parse_polynomial(s, d));
  if (a.empty())
    for (std::size_t j = 0; j < d; ++j) ap.emplace_back(d);
  for (const auto& s : u) up.push_back(parse_polynomial(s, d));
  return PotentialSystem(d, ap, up, parse_polynomial(v, d));
}

double rel(const ComplexVector& a, const ComplexVector& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

} // namespace

TEST_CASE("3x3 Laplacian") {
  const DiscreteOperator op = assemble(PotentialSystem::zero(1), GridSpec::cube(1, 0.0, 4.0, 3));
  const Eigen::MatrixXcd p = oracle::dense(op.P());
  Eigen::MatrixXcd expect(3, 3);
  expect << 2, -1, 0, -1, 2, -1, 0, -1, 2;
  CHECK((p - expect).norm() <= 1e-14);

  const SpectrumResult s = eigs_dense(op, 3);
  const double r2 = std::sqrt(2.0);
  CHECK(std::abs(s.eigenvalues[0] - Complex(2 - r2)) <= 1e-12);
  CHECK(std::abs(s.eigenvalues[1] - Complex(2)) <= 1e-12);
  CHECK(std::abs(s.eigenvalues[2] - Complex(2 + r2)) <= 1e-12);

  ComplexVector ones = ComplexVector::Ones(3);
  const ComplexVector pu = magspec::apply(op, ones);
  CHECK(std::abs(pu[0] - Complex(1)) <= 1e-14);
  CHECK(std::abs(pu[1]) <= 1e-14);
  CHECK(std::abs(pu[2] - Complex(1)) <= 1e-14);
  CHECK(magspec::apply(op, ComplexVector::Zero(3)).norm() == 0.0);
  CHECK_THROWS_AS(magspec::apply(op, ComplexVector::Zero(4)), DimensionError);
}

TEST_CASE("apply agrees with the stencil oracle") {
  Rng rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t d = 1 + trial % 2;
    const PotentialSystem sys = oracle::random_system(rng, d);
    const GridSpec g = d == 1 ? GridSpec::cube(1, -2.0, 3.0, 40) : GridSpec({-2.0, -1.0}, {2.0, 1.5}, {13, 9});
    const DiscreteOperator op = assemble(sys, g);
    for (int k = 0; k < 10; ++k) {
      const ComplexVector u = oracle::random_vector(rng, g.size());
      const ComplexVector expect = oracle::apply_P(sys, g, u);
      CHECK(rel(magspec::apply(op, u), expect) <= 1e-14);
      ComplexVector via_x = op.W_diag().cwiseProduct(u);
      for (std::size_t j = 0; j < d; ++j) via_x += op.X(j).adjoint() * (op.X(j) * u);
      CHECK(rel(via_x, expect) <= 1e-14);
    }
  }
}

TEST_CASE("accretivity and Hermitian symmetry") {
  Rng rng(8);
  const PotentialSystem accretive = make(2, {"x2", "-x1^2"}, {"x1 + x2", "1"}, "x1*x2 - 3");
  const DiscreteOperator op = assemble(accretive, GridSpec::cube(2, -3.0, 3.0, 15));
  for (int k = 0; k < 100; ++k) {
    const ComplexVector u = oracle::random_vector(rng, op.size());
    CHECK(u.dot(magspec::apply(op, u)).real() >= 0.0);
  }
  const DiscreteOperator herm = assemble(make(2, {"x2^2", "-x1"}, {"x1"}, "0"), GridSpec::cube(2, -3.0, 3.0, 12));
  const SparseMatrix diff = herm.P() - SparseMatrix(herm.P().adjoint());
  double worst = 0.0;
  for (int c = 0; c < diff.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(diff, c); it; ++it) worst = std::max(worst, std::abs(it.value()));
  CHECK(worst == 0.0);
}

TEST_CASE("localized assembly") {
  const PotentialSystem sys = make(1, {}, {}, "x1^2");
  const GridSpec unit = GridSpec::cube(1, -1.0, 1.0, 31);
  const double origin[] = {0.0};
  const LocalizedOperator same = assemble_localized(sys, unit, origin, 1.0);
  CHECK((oracle::dense(same.op.P()) - oracle::dense(assemble(sys, unit).P())).norm() == 0.0);

  const double center[] = {10.0};
  const LocalizedOperator loc = assemble_localized(sys, unit, center, 0.1);
  for (double y : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    const double p[] = {y};
    CHECK(loc.system.imag_potential(p) == doctest::Approx(std::pow(1.0 + 0.01 * y, 2)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(assemble_localized(sys, unit, center, 1.5), DomainError);

  // the rescaled system keeps the sampled ratio below the original estimate
  const CriterionVerdict original = check_tr_membership(WeightFamily(sys, 1), 64.0, 64);
  REQUIRE(original.holds == Verdict::yes);
  for (double c : {0.0, 2.0, 10.0})
    for (double s : {1.0, 0.5, 0.1}) {
      const double at[] = {c};
      const CriterionVerdict v = check_tr_membership(WeightFamily(sys.localize(at, s), 1), 64.0, 64);
      CHECK(v.raw_sup <= original.c0_estimate);
    }
}

TEST_CASE("commutator of the magnetic bottle approaches i B12") {
  const PotentialSystem sys = make(2, {"-x2*x1^2", "x1*x2^2"}, {}, "0");
  std::vector<double> defects, spacings;
  for (std::size_t n : {31u, 63u}) {
    const GridSpec g = GridSpec::cube(2, -1.5, 1.5, n);
    const DiscreteOperator op = assemble(sys, g);
    ComplexVector u(static_cast<Eigen::Index>(g.size()));
    for (std::size_t k = 0; k < g.size(); ++k) {
      const Point x = g.node(k);
      u[static_cast<Eigen::Index>(k)] = std::exp(-2.0 * (x[0] * x[0] + x[1] * x[1]));
    }
    defects.push_back(commutator_defect(op, sys, 0, 1, u));
    spacings.push_back(g.h()[0]);
  }
  // O(h): halving h roughly halves the defect
  CHECK(defects[1] < 0.7 * defects[0]);
  CHECK(defects[0] / spacings[0] < 50.0);

  const DiscreteOperator flat = assemble(PotentialSystem::zero(2), GridSpec::cube(2, -1.0, 1.0, 9));
  const SparseMatrix c = commutator(flat, 0, 1);
  double worst = 0.0;
  for (int k = 0; k < c.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(c, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
  CHECK(worst <= 1e-12);
}

TEST_CASE("matrix market export") {
  const DiscreteOperator op = assemble(PotentialSystem::zero(1), GridSpec::cube(1, 0.0, 4.0, 3));
  const std::string mm = matrix_market(op.P());
  CHECK(mm.rfind("%%MatrixMarket matrix coordinate complex general", 0) == 0);
  CHECK(mm.find("\n3 3 7\n") != std::string::npos);
}

TEST_CASE("sparse eigenvalues match dense on the harmonic oscillator") {
  const DiscreteOperator op = assemble(make(1, {}, {"x1"}, "0"), GridSpec::cube(1, -8.0, 8.0, 400));
  const SpectrumResult dense = eigs_dense(op, 3);
  const SpectrumResult sparse = eigs_sparse(op, 3, Complex(0.0, 0.0));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(sparse.eigenvalues[i] - dense.eigenvalues[i]) <= 1e-8);
    CHECK(sparse.residuals[i] <= kResidualTolerance);
  }
  // far left of the numerical range the factorization succeeds
  const SpectrumResult left = eigs_sparse(op, 3, Complex(-50.0, 0.0));
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(left.eigenvalues[i] - dense.eigenvalues[i]) <= 1e-8);

  CHECK_THROWS_AS(eigs_dense(op, 401), InputError);
  CHECK_THROWS_AS(eigs_sparse(op, 401, Complex(0.0)), InputError);
}

TEST_CASE("smallest singular value of a Hermitian operator is the distance to the spectrum") {
  const DiscreteOperator op = assemble(make(1, {}, {"x1"}, "0"), GridSpec::cube(1, -6.0, 6.0, 60));
  const std::vector<Complex> ev = dense_eigenvalues(op.P());
  const ShiftGrid zs{-1.0, 12.0, -2.0, 2.0, 7, 3};
  const Pseudospectrum ps = pseudospectrum(op, zs);
  for (std::size_t ii = 0; ii < zs.im_count; ++ii)
    for (std::size_t ir = 0; ir < zs.re_count; ++ir) {
      const Complex z = zs.at(ir, ii);
      double dist = INFINITY;
      for (const auto& l : ev) dist = std::min(dist, std::abs(z - l));
      CHECK(std::abs(ps.smin[ii * zs.re_count + ir] - dist) <= 1e-8);
    }
  const SpectrumResult s = eigs_dense(op, 2);
  CHECK(smallest_singular_value(op.P(), s.eigenvalues[1]) <= 1e-8);
}

TEST_CASE("Davies pseudospectrum against a dense SVD") {
  const DiscreteOperator op = assemble(make(1, {}, {}, "x1^2"), GridSpec::cube(1, -10.0, 10.0, 300));
  const Eigen::MatrixXcd p = oracle::dense(op.P());
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(p.rows(), p.cols());
  for (const Complex z : {Complex(5.0, 0.0), Complex(10.0, 2.0), Complex(3.0, 8.0)}) {
    const double oracle_smin = oracle::dense_smin(p - z * id);
    CHECK(smallest_singular_value(op.P(), z) == doctest::Approx(oracle_smin).epsilon(1e-6));
  }
  // along the ray arg z = pi/8, between the real axis and the eigenvalue ray,
  // the resolvent norm blows up with |z|
  std::vector<double> ray;
  for (double r : {5.0, 10.0, 20.0, 40.0}) {
    const Complex z = std::polar(r, std::numbers::pi / 8.0);
    const double s = smallest_singular_value(op.P(), z);
    CHECK(s == doctest::Approx(oracle::dense_smin(p - z * id)).epsilon(1e-6));
    ray.push_back(s);
  }
  for (std::size_t i = 1; i < ray.size(); ++i) CHECK(ray[i] < ray[i - 1]);
  CHECK(ray.back() < 0.05 * ray.front());
  CHECK(ray.back() > 0.0);
}

TEST_CASE("counting examples in one dimension") {
  const CountingResult ho = counting_growth(make(1, {}, {"x1"}, "0"), 10.0, {8.0, 12.0, 16.0}, 16.0);
  for (auto c : ho.counts) CHECK(c == 5);
  CHECK(ho.stabilized);

  // Dirichlet levels of -d^2 + 1 on the discrete box: 1 + (4/h^2) sin^2(k pi h / (2L))
  const std::vector<double> boxes{8.0, 12.0, 16.0};
  const CountingResult flat = counting_growth(make(1, {}, {"1"}, "0"), 2.0, boxes, 16.0);
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const std::size_t n = flat.grid_points[b];
    const double h = boxes[b] / static_cast<double>(n + 1);
    std::size_t expect = 0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double s = std::sin(static_cast<double>(k) * std::numbers::pi / (2.0 * static_cast<double>(n + 1)));
      if (1.0 + 4.0 / (h * h) * s * s <= 2.0) ++expect;
    }
    CHECK(flat.counts[b] == expect);
    CHECK(std::abs(static_cast<double>(flat.counts[b]) - boxes[b] / std::numbers::pi) <= 1.0);
  }
  CHECK_FALSE(flat.stabilized);
  CHECK_THROWS_AS(counting_growth(make(1, {}, {"1"}, "0"), 2.0, {8.0, 4.0}, 16.0), InputError);
}
