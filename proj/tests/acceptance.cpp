// Acceptance suite: one PASS/FAIL line per criterion, tolerances and runtime
// budgets pinned.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>

#include "magspec/cli.hpp"
#include "magspec/criterion.hpp"
#include "magspec/parallel.hpp"
#include "magspec/discrete_operator.hpp"
#include "magspec/metric.hpp"
#include "magspec/spectrum.hpp"
#include "magspec/verify.hpp"
#include "oracles.hpp"

using namespace magspec;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

PotentialSystem make(std::size_t d, std::vector<std::string> u, const std::string& v) {
  std::vector<Polynomial> up;
  for (const auto& s : u) up.push_back(parse_polynomial(s, d));
  return PotentialSystem(d, std::vector<Polynomial>(d, Polynomial(d)), up, parse_polynomial(v, d));
}

// 1. assembly identity and discrete energy identity
void exact_identities(Outcome& o) {
  Rng rng(2024);
  double worst_assembly = 0.0, worst_energy = 0.0;
  for (int s = 0; s < 5; ++s) {
    const std::size_t d = 1 + s % 2;
    const PotentialSystem sys = oracle::random_system(rng, d);
    const GridSpec g = d == 1 ? GridSpec::cube(1, -3.0, 3.0, 60) : GridSpec::cube(2, -3.0, 3.0, 20);
    const DiscreteOperator op = assemble(sys, g);
    for (int k = 0; k < 100; ++k) {
      const ComplexVector u = oracle::random_vector(rng, g.size());
      const ComplexVector expect = oracle::apply_P(sys, g, u);
      worst_assembly = std::max(worst_assembly, (magspec::apply(op, u) - expect).norm() / expect.norm());

      double kinetic = 0.0;
      for (std::size_t j = 0; j < d; ++j)
        for (const Complex& e : oracle::edge_derivative(sys, g, j, u)) kinetic += std::norm(e);
      double electric = 0.0, imaginary = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.node(i);
        const double m2 = std::norm(u[static_cast<Eigen::Index>(i)]);
        for (const auto& ul : sys.electric_factors()) electric += std::pow(ul.eval(x), 2) * m2;
        imaginary += sys.imaginary_potential().eval(x) * m2;
      }
      const Complex form = u.dot(magspec::apply(op, u));
      const double scale = kinetic + electric + std::abs(imaginary);
      worst_energy = std::max(worst_energy, std::abs(form.real() - (kinetic + electric)) / scale);
      worst_energy = std::max(worst_energy, std::abs(form.imag() - imaginary) / scale);
    }
  }
  o.detail << "assembly rel err " << worst_assembly << ", energy rel err " << worst_energy;
  o.require(worst_assembly <= 1e-12, "assembly identity");
  o.require(worst_energy <= 1e-12, "energy identity");
}

// 2. criterion regression
void criterion_regression(Outcome& o) {
  const PotentialSystem quad = make(1, {}, "x1^2");
  const CriterionVerdict v1 = check_tr_membership(WeightFamily(quad, 1), 64.0, 64);
  // closed form: sup 2|x|/(1+x^2) = 1 at |x| = 1
  o.require(v1.holds == Verdict::yes, "V=x^2 r=1 yes");
  o.require(std::abs(v1.raw_sup - 1.0) <= 1e-3, "sampled sup 1.0 +- 1e-3");
  o.require(std::abs(std::abs(v1.witness.at(0)) - 1.0) <= 1e-2, "witness at +-1");
  const double direct = oracle::weight_by_definition(quad, 1, v1.witness, 2) /
                        oracle::weight_by_definition(quad, 1, v1.witness, 1);
  o.require(std::abs(direct - v1.raw_sup) <= 1e-12, "direct summation at witness");

  const PotentialSystem mixed = make(2, {}, "x1*x2");
  const CriterionVerdict v2 = check_tr_membership(WeightFamily(mixed, 1), 64.0, 64);
  o.require(v2.holds == Verdict::no && v2.certificate.has_value(), "V=x1x2 r=1 no via axis certificate");
  const CriterionVerdict v3 = check_tr_membership(WeightFamily(mixed, 2), 64.0, 64);
  o.require(v3.holds == Verdict::yes, "V=x1x2 r=2 yes");
  const Point origin{0.0, 0.0};
  const double at_origin = oracle::weight_by_definition(mixed, 2, origin, 3) /
                           oracle::weight_by_definition(mixed, 2, origin, 2);
  o.require(std::abs(v3.raw_sup - at_origin) <= 1e-12, "r=2 sup equals direct value at the origin");
  o.detail << "sup " << v1.raw_sup << " at x=" << v1.witness.at(0) << "; r=1 mixed "
           << to_string(v2.holds) << "; r=2 mixed " << to_string(v3.holds) << " sup " << v3.raw_sup;
}

// 3. metric closed forms and slow growth of Phi
void metric_closed_forms(Outcome& o) {
  const auto w = std::make_shared<const WeightFamily>(make(1, {}, "x1^2"), 1);
  const MetricField m(w, 1.0);
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double x[] = {rng.uniform(-50.0, 50.0)};
    worst = std::max(worst, std::abs(m.radius(x) - std::min(1.0, 1.0 / std::abs(x[0]))));
  }
  const Box box = Box::cube(1, -20.0, 20.0);
  const PhiGrowthResult est = estimate_phi_growth(*w, box, 10000, 1);
  const PhiGrowthCheck check = check_phi_growth(*w, box, est.c2_estimate, 10000, 2);
  o.detail << "max |R - min(1,1/|x|)| " << worst << "; C2 " << est.c2_estimate << ", violations "
           << check.violations << "/" << check.samples;
  o.require(worst <= 1e-8, "radius closed form");
  o.require(check.samples == 10000 && check.violations == 0, "Phi growth inequality at estimated C2");
}

// 4. partition of unity
void partition(Outcome& o) {
  const auto w = std::make_shared<const WeightFamily>(make(1, {}, "x1^2"), 1);
  const Box box = Box::cube(1, -20.0, 20.0);
  const auto sweep = box_lattice(box, 10000);
  std::vector<PartitionReport> reports;
  for (double mu : {1.0, 16.0}) {
    const MetricField m(w, mu);
    const PartitionOfUnity p = build_partition(build_cover(m, box));
    reports.push_back(verify_partition(p, m, sweep, 2, 20, 1));
  }
  auto within2 = [](double a, double b) { return std::max(a, b) <= 2.0 * std::min(a, b); };
  o.detail << "residual " << reports[0].max_residual << "; first-order constants " << reports[0].c_first << " / "
           << reports[1].c_first << "; second-order " << reports[0].c_second << " / " << reports[1].c_second;
  o.require(reports[0].max_residual <= 1e-10 && reports[1].max_residual <= 1e-10, "sum phi^2 = 1");
  o.require(reports[0].support_violations == 0 && reports[1].support_violations == 0, "supports");
  o.require(within2(reports[0].c_first, reports[1].c_first), "first-order constant mu-independent");
  o.require(within2(reports[0].c_second, reports[1].c_second), "second-order constant mu-independent");
}

// 5. spectral benchmarks
void spectral(Outcome& o) {
  const double levels[] = {1.0, 3.0, 5.0};
  const Complex rot = std::polar(1.0, std::numbers::pi / 4.0);
  auto run = [&](const PotentialSystem& sys, double half, std::size_t n, Complex factor, double tol,
                 const std::string& name) {
    const SpectrumResult s = eigs_dense(assemble(sys, GridSpec::cube(1, -half, half, n)), 3);
    double worst = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const Complex target = factor * levels[i];
      worst = std::max(worst, std::abs(s.eigenvalues[i] - target) / std::abs(target));
      o.require(s.residuals[i] <= kResidualTolerance, name + " residual");
    }
    o.detail << (o.detail.tellp() > 0 ? "; " : "") << name << " n=" << n << " rel err " << worst;
    o.require(worst <= tol, name + " n=" + std::to_string(n));
  };
  run(make(1, {"x1"}, "0"), 8.0, 400, 1.0, 0.02, "harmonic");
  run(make(1, {"x1"}, "0"), 8.0, 800, 1.0, 0.02, "harmonic");
  run(make(1, {}, "x1^2"), 10.0, 600, rot, 0.03, "Davies");
  run(make(1, {}, "x1^2"), 10.0, 900, rot, 0.03, "Davies");
}

// 6. compactness proxy
void compactness(Outcome& o) {
  const std::vector<double> boxes{8.0, 12.0, 16.0};
  const CountingResult ho = counting_growth(make(1, {"x1"}, "0"), 10.0, boxes, 16.0);
  const CountingResult mixed = counting_growth(make(2, {}, "x1*x2"), 4.5, boxes, 2.0);
  const CountingResult flat = counting_growth(make(1, {"1"}, "0"), 2.0, boxes, 16.0);
  const bool mixed_grows = check_growth(WeightFamily(make(2, {}, "x1*x2"), 2), std::vector<double>{1, 4, 16, 64}).grows;
  auto list = [](const CountingResult& c) {
    std::ostringstream s;
    for (std::size_t i = 0; i < c.counts.size(); ++i) s << (i ? "," : "") << c.counts[i];
    return s.str();
  };
  o.detail << "U=x^2: " << list(ho) << "; V=x1x2: " << list(mixed) << "; U=1: " << list(flat);
  // analytic levels 2k+1 < 10: five of them
  o.require(ho.stabilized && std::all_of(ho.counts.begin(), ho.counts.end(), [](auto c) { return c == 5; }),
            "U=x^2 counts 5,5,5");
  o.require(mixed.stabilized && mixed_grows, "V=x1x2 stabilizes with growing weight");
  bool linear = true;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    linear = linear && std::abs(static_cast<double>(flat.counts[i]) - boxes[i] / std::numbers::pi) <= 1.0;
    if (i > 0) linear = linear && flat.counts[i] > flat.counts[i - 1];
  }
  o.require(linear && !flat.stabilized, "U=1 grows like L/pi");
}

// 7. inequality stability
void stability(Outcome& o) {
  const PotentialSystem sys = make(1, {}, "x1^2");
  const auto w = std::make_shared<const WeightFamily>(sys, 1);
  const MetricField metric(w, 1.0);
  const double delta = 0.5;
  std::vector<double> weighted, maximal;
  for (double half : {8.0, 12.0}) {
    const GridSpec g = default_grid(sys, {-half}, {half});
    const DiscreteOperator op = assemble(sys, g);
    TestOptions opt;
    opt.seed = 1;
    opt.importance = [&](const Point& x) { return weight_mr(*w, x); };
    opt.length_scale = [&](const Point& x) { return metric.radius(x); };
    const TestFunctionSet tests = gen_tests(g, 100, Recipe::gaussian_mix, opt);
    const Refinement ref{4, 600};
    weighted.push_back(test_weighted_estimate(*w, delta, op, tests, ref).constant_estimate);
    maximal.push_back(test_maximal_W(*w, op, tests, ref).constant_estimate);
  }
  const double cw = std::abs(weighted[1] - weighted[0]) / weighted[0];
  const double cm = std::abs(maximal[1] - maximal[0]) / maximal[0];
  o.detail << "weighted " << weighted[0] << " -> " << weighted[1] << " (" << 100 * cw << "%), maximal-W "
           << maximal[0] << " -> " << maximal[1] << " (" << 100 * cm << "%)";
  o.require(cw < 0.25, "weighted estimate change < 25%");
  o.require(cm < 0.25, "maximal-W change < 25%");
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// 8. reproducibility of the verify command
void reproducibility(Outcome& o) {
  const fs::path root = fs::temp_directory_path() / "magspec_acceptance_repro";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path system = root / "system.json";
  std::ofstream(system) << R"({"d": 1, "V": "x1^2"})";
  auto verify = [&](const std::string& dir, const std::string& workers) {
    std::ostringstream out, err;
    const int code = cli::run({"--seed", "7", "--workers", workers, "--out-dir", (root / dir).string(), "verify",
                               "--system", system.string(), "--tests", "100"},
                              out, err);
    return code;
  };
  const int a = verify("a", "1");
  const int b = verify("b", "1");
  const int c = verify("c", "8");
  o.require(a == 0 && b == 0 && c == 0, "verify runs succeed");
  const std::string ja = slurp(root / "a" / "verify.json");
  const bool same_seed = !ja.empty() && ja == slurp(root / "b" / "verify.json");
  const bool same_workers = ja == slurp(root / "c" / "verify.json") &&
                            slurp(root / "a" / "verify_ratios.csv") == slurp(root / "c" / "verify_ratios.csv");
  o.detail << "repeat identical: " << (same_seed ? "yes" : "no") << ", workers 1 vs 8 identical: "
           << (same_workers ? "yes" : "no") << " (" << ja.size() << " bytes)";
  o.require(same_seed, "byte-identical JSON");
  o.require(same_workers, "worker-count independence");
  set_worker_count(1);
}

} // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<void(Outcome&)> body;
  };
  const std::vector<Criterion> criteria{
      {1, "exact identities", 10.0, exact_identities},
      {2, "criterion regression", 30.0, criterion_regression},
      {3, "metric closed forms", 20.0, metric_closed_forms},
      {4, "partition of unity", 60.0, partition},
      {5, "spectral benchmarks", 120.0, spectral},
      {6, "compactness proxy", 300.0, compactness},
      {7, "inequality stability", 180.0, stability},
      {8, "reproducibility", 600.0, reproducibility},
  };
  int failures = 0;
  std::cout << std::setprecision(4);
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds >= c.budget_seconds) o.require(false, "runtime budget " + std::to_string(c.budget_seconds) + " s");
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << o.detail.str()
              << "; " << seconds << " s" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
