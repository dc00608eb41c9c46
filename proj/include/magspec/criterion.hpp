#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "magspec/polynomial.hpp"
#include "magspec/potential.hpp"
#include "magspec/sampling.hpp"

namespace magspec {

// Derivative tables of a PotentialSystem at level r:
//   d^a U_l for |a| <= r+1, d^a B_jk (j<k) and d^a V for |a| <= r.
// Weight of order q at x:
//   m_q(x) = sum_l sum_{|a|=q} |d^a U_l| + sum_{j<k} sum_{|a|=q-1} |d^a B_jk| + sum_{|a|=q-1} |d^a V|
// with empty B and V sums when q = 0, and m^r(x) = 1 + sum_{q<=r} m_q(x).
class WeightFamily {
public:
  enum class Kind { electric, magnetic, imaginary };

  // All derivatives of one kind entering m_q.
  struct Group {
    Kind kind;
    unsigned q;
    std::vector<Polynomial> polynomials;
    std::vector<CompiledPolynomial> compiled;
  };

  WeightFamily(PotentialSystem system, unsigned r);

  const PotentialSystem& system() const noexcept { return system_; }
  std::size_t dimension() const noexcept { return system_.dimension(); }
  unsigned r() const noexcept { return r_; }
  const std::vector<Group>& groups() const noexcept { return groups_; }

  // m_q(x) for q = 0..r+1 in one pass.
  std::vector<double> orders(std::span<const double> x) const;
  // Smoothed weight: 1 + sum over groups with q <= r of the Euclidean norm of
  // the group's derivative values.
  double psi(std::span<const double> x) const;
  // Number of scalar summands in m^r, the constant 1 included.
  std::size_t summand_count() const;

private:
  PotentialSystem system_;
  unsigned r_;
  std::vector<Group> groups_;
};

double weight_mq(const WeightFamily& w, unsigned q, std::span<const double> x);
double weight_mr(const WeightFamily& w, std::span<const double> x);
double smooth_weight_psi(const WeightFamily& w, std::span<const double> x);

enum class Verdict { yes, no, inconclusive };
std::string to_string(Verdict v);

// Radial sampling region: origin plus geometric shells times directions.
struct SampleRegion {
  double radius = 64.0;
  std::size_t directions = 64;
  unsigned shells_per_doubling = 16;
  double inner_radius = 1.0 / 256.0;
  std::size_t sample_count = 0;  // filled in by the checks
};

// Symbolic proof that the ratio is unbounded: along the axis t e_j the
// numerator grows like t^numerator_degree while the denominator (raised to
// `exponent`) grows like t^(exponent * denominator_degree).
struct AxisCertificate {
  std::size_t axis;
  int numerator_degree;
  int denominator_degree;
  double exponent;
};

struct CriterionVerdict {
  Verdict holds = Verdict::inconclusive;
  double c0_estimate = 0.0;  // 1.1 * raw_sup; +inf when holds == no
  double raw_sup = 0.0;
  Point witness;             // sample with the largest ratio
  SampleRegion sample_region;
  std::optional<AxisCertificate> certificate;
};

// m_{r+1} <= C0 m^r on R^d, judged from radial samples.
CriterionVerdict check_tr_membership(const WeightFamily& w, double region_radius,
                                     std::size_t grid_density);
CriterionVerdict check_tr_membership(const WeightFamily& w, const SampleRegion& region);

// m_{r+1} <= C (m^r)^(1+delta), delta = 1/(2^(r+1) - 3); requires r >= 1.
double meftah_delta(unsigned r);
CriterionVerdict check_meftah(const WeightFamily& w, double region_radius, std::size_t grid_density);
CriterionVerdict check_meftah(const WeightFamily& w, const SampleRegion& region);

struct GrowthResult {
  bool grows = false;
  std::vector<double> radii;
  std::vector<double> min_by_radius;
};

// Minimum of m^r over sampled spheres of each radius.
GrowthResult check_growth(const WeightFamily& w, std::span<const double> radii,
                          std::size_t directions = 64);

// Midpoint-rule value of the integral over B(x,1) of U + sum_{j<k} B_jk^2,
// with quadrature_n cells per axis on the enclosing cube.
double iwatsuka_average(const PotentialSystem& sys, std::span<const double> x, std::size_t quadrature_n);

struct Cube {
  Point center;
  double side;
};

struct Ball {
  Point center;
  double radius;
};

struct ReverseHolderResult {
  double sup_ratio = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> ratios;
};

// (mean_Q w^q)^(1/q) / mean_Q w for each cube, by midpoint quadrature.
ReverseHolderResult reverse_holder_check(const Polynomial& weight, double q,
                                         std::span<const Cube> cubes, std::size_t quadrature_n = 512);

// sup_B w / mean_B w for each ball. The sup is taken over the closed lattice
// (cell corners and centers), the mean by midpoint quadrature.
ReverseHolderResult reverse_holder_infty_check(const Polynomial& weight, std::span<const Ball> balls,
                                               std::size_t quadrature_n = 512);

nlohmann::json to_json(const CriterionVerdict& v);
nlohmann::json to_json(const GrowthResult& g);

} // namespace magspec
