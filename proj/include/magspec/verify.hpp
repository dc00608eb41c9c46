#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "magspec/criterion.hpp"
#include "magspec/discrete_operator.hpp"
#include "magspec/metric.hpp"

namespace magspec {

enum class Recipe { gaussian_mix, localized_bump, low_freq };
Recipe parse_recipe(const std::string& name);
std::string to_string(Recipe r);

struct TestOptions {
  std::uint64_t seed = 1;
  std::size_t margin = 2;  // nodes within `margin` cells of the boundary stay zero
  // Odd-indexed tests draw centers with probability proportional to this
  // weight at the nodes; even-indexed ones (all, when empty) are stratified
  // over the admissible nodes.
  std::function<double(const Point&)> importance;
  // Local length scale at a center; widths are drawn in [scale/2, 2 scale].
  // Empty: log-uniform between a few cells and a quarter of the box.
  std::function<double(const Point&)> length_scale;
  // When positive, every function is supported in the open ball
  // B(support_center, support_radius).
  double support_radius = 0.0;
  Point support_center;
};

// Gaussian wave packet amp exp(-|x-c|^2/(2 sigma^2) + i k.(x-c) + i chirp |x-c|^2 / 2).
struct Wavepacket {
  Point center;
  double sigma = 1.0;
  Point wave;
  double chirp = 0.0;
  Complex amp{1.0, 0.0};
};

struct TestFunctionSet {
  GridSpec grid;
  std::vector<ComplexVector> vectors;  // unit norm
  std::uint64_t seed = 1;
  Recipe recipe = Recipe::gaussian_mix;
  std::vector<char> admissible;        // nodes where test functions may be nonzero
  std::vector<std::vector<Wavepacket>> packets;  // gaussian-mix only: the components of each vector
};

TestFunctionSet gen_tests(const GridSpec& grid, std::size_t count, Recipe recipe, const TestOptions& options = {});

// Normalized sum of packets restricted to the admissible nodes (zero vector
// when nothing survives).
ComplexVector render(const GridSpec& grid, const std::vector<char>& admissible, const std::vector<Wavepacket>& packets);

// Deterministic local maximization appended to a sampled family: starting
// from the leading packet of the `starts` best gaussian-mix tests, a pattern
// search over center, log width, chirp and wave vector climbs the ratio. The
// maximizers are appended as extra tests, so the estimate stays a max over
// test functions.
struct Refinement {
  std::size_t starts = 0;  // 0 disables
  std::size_t max_evaluations = 600;
};

struct Stability {
  double other_constant = 0.0;  // constant on the larger box
  double relative_change = 0.0;
  double tolerance = 0.0;
  bool stable = false;
};

struct InequalityReport {
  std::string name;
  std::string anchor;                 // descriptive name of the inequality tested
  double constant_estimate = 0.0;     // max of ratios
  std::size_t worst_witness = 0;      // index of the test attaining it
  std::vector<double> ratios;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> labels;    // e.g. "out-of-hypothesis"
  nlohmann::json extras = nlohmann::json::object();
  std::optional<Stability> stability;
};

// Fills constant_estimate and worst_witness from ratios (first maximum wins).
void finalize(InequalityReport& report);

// Compares the constant of the same inequality on a smaller and a larger box.
Stability compare_boxes(const InequalityReport& small_box, const InequalityReport& large_box, double tolerance);

// Re <Pf,f> = sum_j |X_j f|^2 + sum_l |U_l f|^2 (checked to 1e-12 relative),
// ratio (sum_j |X_j f|^2 + sum_l |U_l f|^2) / (|Pf| |f|).
InequalityReport test_energy_identity(const DiscreteOperator& op, const TestFunctionSet& tests);

// Ratios sum_k w_k^2 |u_k|^2 / (|Pu|^2 + |u|^2) for node weights w; shared by
// the weighted and maximal estimates.
std::vector<double> node_weight_ratios(const DiscreteOperator& op, const TestFunctionSet& tests,
                                       const Eigen::VectorXd& node_weights);

// |(m^r)^delta u|^2 / (|Pu|^2 + |u|^2).
InequalityReport test_weighted_estimate(const WeightFamily& w, double delta, const DiscreteOperator& op,
                                        const TestFunctionSet& tests, const Refinement& refinement = {});

// | |W| u |^2 / (|Pu|^2 + |u|^2) with |W| = (U^2 + V^2)^(1/2).
InequalityReport test_maximal_W(const WeightFamily& w, const DiscreteOperator& op, const TestFunctionSet& tests,
                                const Refinement& refinement = {});

// sum_{j,l} |X_j X_l u| / (|Pu| + |u|) with square factors; extras carry the
// potential term |W u| / (|Pu| + |u|) and the combined ratio.
InequalityReport test_second_order(const PotentialSystem& sys, const DiscreteOperator& op,
                                   const TestFunctionSet& tests, const Refinement& refinement = {});

// Membership ratios |Psi^(s-1) T u|^2 / (|Pu| |u| + |u|^2) for
//   T = i[X_j,X_k] (s = 1/2), V (s = 1/2), U_l (s = 1),
//   i[X_k,U_l] (s = 1/2), i[X_k,V] (s = 1/4).
// Operators that vanish identically are skipped.
std::vector<InequalityReport> test_commutators(const WeightFamily& w, const DiscreteOperator& op,
                                               const TestFunctionSet& tests, const Refinement& refinement = {});

// Unit-box grid [-1,1]^d with n interior points per axis for localized tests.
GridSpec localized_grid(std::size_t dimension, std::size_t n);

// (mu^delta |g| + mu^(delta/2) |X g|) / |P_loc g| for g supported in the unit
// ball, where P_loc is the operator of the system rescaled around the center
// by R = R(center, mu) and delta = 2^(-r). This is the localized lower bound
// written in the rescaled variable y = (x - center)/R.
InequalityReport test_localized_bound(const MetricField& m, std::span<const double> center,
                                      const TestFunctionSet& tests);
InequalityReport test_localized_bound(const MetricField& m, const Cover& cover, std::size_t index,
                                      const TestFunctionSet& tests);

struct LocalizedSweep {
  std::vector<double> mus;
  std::vector<InequalityReport> reports;  // a report per mu, labeled when R > 1/2
  std::optional<double> mu0_candidate;    // first mu from which estimates are non-increasing
};

LocalizedSweep localized_sweep(std::shared_ptr<const WeightFamily> w, std::span<const double> center,
                               const std::vector<double>& mus, const TestFunctionSet& tests);

nlohmann::json to_json(const InequalityReport& r);
nlohmann::json to_json(const LocalizedSweep& s);
std::string ratios_csv(const std::vector<InequalityReport>& reports);

} // namespace magspec
