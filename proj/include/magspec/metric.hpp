#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "magspec/criterion.hpp"
#include "magspec/jet.hpp"
#include "magspec/sampling.hpp"

namespace magspec {

// Axis-aligned box [lo, hi]; an axis with lo == hi is a degenerate slice.
struct Box {
  Point lo;
  Point hi;

  std::size_t dimension() const noexcept { return lo.size(); }
  static Box cube(std::size_t dimension, double lo, double hi);
};

// Phi(x,t) = sum_{q<=r} t^(q+1) m_q(x): the U_l derivatives of order q carry
// t^(q+1), the B_jk and V derivatives of order q-1 carry t^(q+1) as well.
double phi(const WeightFamily& w, std::span<const double> x, double t);

// Length scale R(x, mu) = sup { t in [0,1] : Phi(x,t) <= mu }.
class MetricField {
public:
  MetricField(std::shared_ptr<const WeightFamily> weights, double mu, double bisection_tol = 1e-10);

  const WeightFamily& weights() const noexcept { return *w_; }
  std::shared_ptr<const WeightFamily> weights_ptr() const noexcept { return w_; }
  double mu() const noexcept { return mu_; }
  double bisection_tol() const noexcept { return tol_; }

  double radius(std::span<const double> x) const;

private:
  std::shared_ptr<const WeightFamily> w_;
  double mu_;
  double tol_;
};

inline double radius(const MetricField& m, std::span<const double> x) { return m.radius(x); }

struct SlowVariationResult {
  double c2_estimate = 0.0;
  Point worst_x;
  Point worst_y;
  double worst_ratio = 1.0;  // R(y)/R(x) farthest from 1 (in log scale)
  std::size_t samples = 0;
};

// Smallest C2 on the schedule 1.25^k (k >= 1) such that every sampled pair with
// |y-x| <= R(x)/(2 C2) has 1/(2 C2) <= R(y)/R(x) <= 2 C2.
SlowVariationResult verify_slow_variation(const MetricField& m, const Box& region, std::size_t sample_pairs,
                                          std::uint64_t seed = 1);

struct PhiGrowthResult {
  double c2_estimate = 0.0;  // schedule value >= 1.1 * raw_sup
  double raw_sup = 0.0;      // sup of Phi(y,t) / (Phi(x,t) + t^(r+1))
  std::size_t samples = 0;
};

// Estimates C2 in Phi(y,t) <= C2 Phi(x,t) + C2 t^(r+1) for |y-x| <= t <= 1.
PhiGrowthResult estimate_phi_growth(const WeightFamily& w, const Box& region, std::size_t triples,
                                    std::uint64_t seed = 1);

struct PhiGrowthCheck {
  std::size_t violations = 0;
  double max_ratio = 0.0;
  std::size_t samples = 0;
};

// Counts sampled triples violating the inequality at a given C2.
PhiGrowthCheck check_phi_growth(const WeightFamily& w, const Box& region, double c2, std::size_t triples,
                                std::uint64_t seed);

struct Cover {
  std::vector<Point> centers;
  std::vector<double> radii;
  Box region;
  double mu = 1.0;
  double lattice_step = 0.0;
  std::size_t candidate_count = 0;
  std::size_t max_overlap = 0;  // most balls containing one lattice point
};

struct CoverOptions {
  double lattice_step = 0.0;  // 0: choose from a probe of R over the region
};

// Greedy maximal set on a candidate lattice: a candidate becomes a center when
// it is at least R(x_j)/2 away from every accepted center x_j. Throws
// CertificationError when the lattice is too coarse for the smallest radius.
Cover build_cover(const MetricField& m, const Box& region, const CoverOptions& options = {});

// phi_j = psi_j / sqrt(sum_k psi_k^2) with psi_j(x) = bump(|x - x_j| / R_j).
class PartitionOfUnity {
public:
  explicit PartitionOfUnity(Cover cover);

  const Cover& cover() const noexcept { return cover_; }

  // Balls containing x (where psi_j may be nonzero).
  std::vector<std::size_t> active(std::span<const double> x) const;
  double psi(std::size_t j, std::span<const double> x) const;
  double denominator(std::span<const double> x) const;

  struct Values {
    std::vector<std::size_t> index;
    std::vector<double> value;
  };
  Values values(std::span<const double> x) const;

  struct Jets {
    std::vector<std::size_t> index;
    std::vector<Jet2> phi;
  };
  Jets jets(std::span<const double> x) const;

  // All center indices whose ball could meet a neighbourhood of x of size `reach`.
  std::vector<std::size_t> nearby(std::span<const double> x, double reach) const;

private:
  long long cell_key(std::span<const double> x) const;

  Cover cover_;
  double cell_size_;
  std::unordered_map<long long, std::vector<std::size_t>> buckets_;
};

// Checks the covering property on the cover's lattice and cell centers and
// builds the partition; throws CertificationError with the witness point if
// the normalizing denominator vanishes somewhere.
PartitionOfUnity build_partition(const Cover& cover);

struct PartitionReport {
  std::size_t points = 0;
  double max_residual = 0.0;             // max |sum phi_j^2 - 1|
  std::size_t support_violations = 0;    // phi_j != 0 outside B(x_j, R_j)
  double c_first = 0.0;                  // max R(x)^2 sum_j |d_i phi_j|^2
  double c_second = 0.0;                 // max R(x)^4 sum_j |d_i d_k phi_j|^2
  int k = 1;
  double c_hat = 0.0;                    // localization constant for weight R^(-2k)
  std::size_t random_tests = 0;
  double mu = 1.0;
};

// Evaluates the partition properties on the given points (which should lie in
// the cover's region). The localization constant uses `random_tests` random
// complex grid functions u drawn from `seed`.
PartitionReport verify_partition(const PartitionOfUnity& p, const MetricField& m, std::span<const Point> grid,
                                 int k, std::size_t random_tests = 20, std::uint64_t seed = 1);

// Uniform lattice with `per_axis` points per non-degenerate axis of the box.
std::vector<Point> box_lattice(const Box& box, std::size_t per_axis);

nlohmann::json to_json(const Cover& c);
nlohmann::json to_json(const PartitionReport& r);
nlohmann::json to_json(const SlowVariationResult& r);

} // namespace magspec
