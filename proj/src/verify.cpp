#include "magspec/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "magspec/error.hpp"
#include "magspec/jet.hpp"
#include "magspec/parallel.hpp"

namespace magspec {

namespace {

const Complex kI(0.0, 1.0);

Eigen::Index ei(std::size_t i) { return static_cast<Eigen::Index>(i); }

nlohmann::json grid_json(const GridSpec& g) { return {{"lo", g.lo()}, {"hi", g.hi()}, {"n", g.n()}}; }

nlohmann::json base_config(const TestFunctionSet& tests) {
  return {{"grid", grid_json(tests.grid)},
          {"tests", tests.vectors.size()},
          {"recipe", to_string(tests.recipe)},
          {"seed", tests.seed}};
}

void check_same_grid(const DiscreteOperator& op, const TestFunctionSet& tests) {
  if (!(op.grid() == tests.grid)) throw InputError("operator and test functions live on different grids");
  if (tests.vectors.empty()) throw InputError("test function set is empty");
}

// Draws centers, half uniformly over the admissible nodes and half with
// probability proportional to the importance weight.
class CenterSampler {
public:
  CenterSampler(const GridSpec& grid, const std::vector<std::size_t>& active, const TestOptions& options)
      : grid_(grid), active_(active) {
    if (options.importance) {
      cdf_.reserve(active.size());
      double total = 0.0;
      for (std::size_t idx : active) {
        const double w = options.importance(grid.node(idx));
        if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("importance weight must be finite and nonnegative");
        total += w;
        cdf_.push_back(total);
      }
      if (!(total > 0.0)) cdf_.clear();
    }
  }

  // First component of test i out of count; later components use draw(rng).
  Point draw(Rng& rng, std::size_t i, std::size_t count) const {
    if (!cdf_.empty() && i % 2 == 1) return draw(rng);
    const std::size_t strata = cdf_.empty() ? count : (count + 1) / 2;
    const std::size_t stratum = cdf_.empty() ? i : i / 2;
    const double pos = (static_cast<double>(stratum) + rng.uniform()) / static_cast<double>(strata);
    const auto pick = std::min(active_.size() - 1, static_cast<std::size_t>(pos * static_cast<double>(active_.size())));
    return jitter(rng, pick);
  }

  Point draw(Rng& rng) const {
    std::size_t pick;
    if (!cdf_.empty()) {
      const double u = rng.uniform() * cdf_.back();
      pick = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
      pick = std::min(pick, cdf_.size() - 1);
    } else {
      pick = rng.index(active_.size());
    }
    return jitter(rng, pick);
  }

private:
  Point jitter(Rng& rng, std::size_t pick) const {
    Point x = grid_.node(active_[pick]);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += rng.uniform(-0.5, 0.5) * grid_.h()[j];
    return x;
  }

  const GridSpec& grid_;
  const std::vector<std::size_t>& active_;
  std::vector<double> cdf_;
};

double dist2(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

double dot_re(const Point& k, const Point& x, const Point& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) s += k[i] * (x[i] - c[i]);
  return s;
}

} // namespace

Recipe parse_recipe(const std::string& name) {
  if (name == "gaussian-mix") return Recipe::gaussian_mix;
  if (name == "localized-bump") return Recipe::localized_bump;
  if (name == "low-freq") return Recipe::low_freq;
  throw InputError("unknown test recipe '" + name + "' (expected gaussian-mix, localized-bump or low-freq)");
}

std::string to_string(Recipe r) {
  switch (r) {
    case Recipe::gaussian_mix: return "gaussian-mix";
    case Recipe::localized_bump: return "localized-bump";
    case Recipe::low_freq: return "low-freq";
  }
  return "unknown";
}

TestFunctionSet gen_tests(const GridSpec& grid, std::size_t count, Recipe recipe, const TestOptions& options) {
  if (count == 0) throw InputError("need at least one test function");
  const std::size_t d = grid.dimension();
  for (std::size_t j = 0; j < d; ++j)
    if (grid.n()[j] <= 2 * options.margin) throw InputError("grid too small for the boundary margin");
  const bool ball = options.support_radius > 0.0;
  if (ball && options.support_center.size() != d) throw DimensionError("support center dimension mismatch");

  std::vector<Point> nodes(grid.size());
  std::vector<char> admissible(grid.size(), 0);
  std::vector<std::size_t> active;
  const double r2 = options.support_radius * options.support_radius;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    nodes[idx] = grid.node(idx);
    bool ok = grid.cells_from_boundary(idx) > options.margin;
    if (ok && ball) ok = dist2(nodes[idx], options.support_center) < r2;
    if (ok) {
      admissible[idx] = 1;
      active.push_back(idx);
    }
  }
  if (active.empty()) throw InputError("no grid node is admissible for test functions");

  double h_max = 0.0;
  double extent = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < d; ++j) {
    h_max = std::max(h_max, grid.h()[j]);
    extent = std::min(extent, grid.hi()[j] - grid.lo()[j]);
  }
  if (ball) extent = std::min(extent, 2.0 * options.support_radius);
  const CenterSampler sampler(grid, active, options);
  auto draw_width = [&](Rng& rng, const Point& center, double smallest) {
    if (options.length_scale) return options.length_scale(center) * std::exp(rng.uniform(-M_LN2, M_LN2));
    return std::exp(rng.uniform(std::log(smallest), std::log(std::max(smallest, extent / 4.0))));
  };

  TestFunctionSet out;
  out.grid = grid;
  out.seed = options.seed;
  out.recipe = recipe;
  out.vectors.assign(count, ComplexVector());
  out.admissible = admissible;
  if (recipe == Recipe::gaussian_mix) out.packets.assign(count, {});
  parallel_for(count, [&](std::size_t i) {
    Rng rng(derive_seed(options.seed, i));
    ComplexVector v = ComplexVector::Zero(ei(grid.size()));
    for (int attempt = 0; attempt < 32 && v.norm() == 0.0; ++attempt) {
      if (recipe == Recipe::low_freq) {
        std::vector<std::size_t> mode(d, 1);
        std::size_t rest = i;
        for (std::size_t j = 0; j < d; ++j) {
          mode[j] = 1 + (j + 1 == d ? rest : rest % 4);
          rest /= 4;
        }
        for (std::size_t idx : active) {
          const auto k = grid.multi_index(idx);
          double value = 1.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double span = static_cast<double>(grid.n()[j] - 2 * options.margin + 1);
            const double pos = static_cast<double>(k[j] - options.margin + 1);
            value *= std::sin(M_PI * static_cast<double>(mode[j]) * pos / span);
          }
          v[ei(idx)] = value;
        }
      } else if (recipe == Recipe::gaussian_mix) {
        const std::size_t components = 1 + rng.index(3);
        std::vector<Wavepacket> packets;
        for (std::size_t c = 0; c < components; ++c) {
          Wavepacket w;
          w.center = c == 0 ? sampler.draw(rng, i, count) : sampler.draw(rng);
          w.sigma = std::max(2.0 * h_max, draw_width(rng, w.center, 2.0 * h_max));
          w.wave.resize(d);
          for (auto& kj : w.wave) kj = 0.5 * rng.normal() / w.sigma;
          w.chirp = rng.uniform(-2.0, 2.0) / (w.sigma * w.sigma);
          w.amp = Complex(rng.normal(), rng.normal());
          packets.push_back(std::move(w));
        }
        v = render(grid, admissible, packets);
        out.packets[i] = std::move(packets);
      } else {
        double rho;
        Point center;
        if (ball) {
          rho = std::max(3.0 * h_max, options.support_radius * rng.uniform(0.3, 1.0));
          rho = std::min(rho, options.support_radius);
          const Point b = uniform_in_ball(rng, d);
          center = options.support_center;
          for (std::size_t j = 0; j < d; ++j) center[j] += (options.support_radius - rho) * b[j];
        } else {
          center = sampler.draw(rng, i, count);
          rho = std::max(3.0 * h_max, 2.0 * draw_width(rng, center, 3.0 * h_max));
        }
        Point wave(d);
        for (auto& kj : wave) kj = 0.5 * rng.normal() / rho;
        for (std::size_t idx : active) {
          const double b = bump_profile(std::sqrt(dist2(nodes[idx], center)) / rho).value;
          if (b == 0.0) continue;
          v[ei(idx)] = b * std::exp(kI * dot_re(wave, nodes[idx], center));
        }
      }
    }
    if (v.norm() == 0.0) throw InputError("could not place a test function on the admissible nodes");
    out.vectors[i] = v / v.norm();
  });
  return out;
}

ComplexVector render(const GridSpec& grid, const std::vector<char>& admissible, const std::vector<Wavepacket>& packets) {
  if (admissible.size() != grid.size()) throw DimensionError("admissible mask does not match the grid");
  ComplexVector v = ComplexVector::Zero(ei(grid.size()));
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    if (!admissible[idx]) continue;
    const Point x = grid.node(idx);
    for (const auto& w : packets) {
      const double r2c = dist2(x, w.center);
      const double e = std::exp(-r2c / (2.0 * w.sigma * w.sigma));
      if (e < 1e-300) continue;
      v[ei(idx)] += w.amp * e * std::exp(kI * (dot_re(w.wave, x, w.center) + 0.5 * w.chirp * r2c));
    }
  }
  const double nv = v.norm();
  if (nv > 0.0 && std::isfinite(nv)) v /= nv;
  return v;
}

namespace {

using RatioFn = std::function<double(const ComplexVector&)>;

// Pattern search in (center, log sigma, chirp sigma^2, wave sigma).
std::pair<Wavepacket, double> climb(const TestFunctionSet& tests, Wavepacket start, const RatioFn& ratio,
                                    std::size_t budget) {
  const std::size_t d = start.center.size();
  double h_min = std::numeric_limits<double>::infinity();
  for (double h : tests.grid.h()) h_min = std::min(h_min, h);
  start.amp = Complex(1.0, 0.0);
  std::vector<double> p;
  for (double c : start.center) p.push_back(c);
  p.push_back(std::log(start.sigma));
  p.push_back(start.chirp * start.sigma * start.sigma);
  for (double k : start.wave) p.push_back(k * start.sigma);
  std::vector<double> step(p.size(), 0.5);
  for (std::size_t j = 0; j < d; ++j) step[j] = 0.25 * start.sigma;
  step[d] = 0.25;

  auto packet = [&](const std::vector<double>& q) {
    Wavepacket w;
    w.center.assign(q.begin(), q.begin() + static_cast<std::ptrdiff_t>(d));
    w.sigma = std::exp(q[d]);
    w.chirp = q[d + 1] / (w.sigma * w.sigma);
    w.wave.resize(d);
    for (std::size_t j = 0; j < d; ++j) w.wave[j] = q[d + 2 + j] / w.sigma;
    return w;
  };
  auto value = [&](const std::vector<double>& q) {
    if (std::exp(q[d]) < h_min) return 0.0;
    const ComplexVector v = render(tests.grid, tests.admissible, {packet(q)});
    if (v.norm() == 0.0) return 0.0;
    const double r = ratio(v);
    return std::isfinite(r) ? r : 0.0;
  };

  double best = value(p);
  std::size_t used = 1;
  while (used < budget) {
    bool improved = false;
    for (std::size_t a = 0; a < p.size() && used < budget; ++a)
      for (double sign : {1.0, -1.0}) {
        std::vector<double> q = p;
        q[a] += sign * step[a];
        const double r = value(q);
        ++used;
        if (r > best) {
          best = r;
          p = std::move(q);
          improved = true;
          break;
        }
      }
    if (!improved) {
      double largest = 0.0;
      for (auto& s : step) largest = std::max(largest, s *= 0.5);
      if (largest < 1e-3) break;
    }
  }
  return {packet(p), best};
}

nlohmann::json packet_json(const Wavepacket& w) {
  return {{"center", w.center}, {"sigma", w.sigma}, {"chirp", w.chirp}, {"wave", w.wave}};
}

// Evaluates ratio on every test, then appends refined maximizers.
void run_ratios(InequalityReport& r, const TestFunctionSet& tests, const RatioFn& ratio, const Refinement& refinement) {
  const std::size_t count = tests.vectors.size();
  r.ratios.assign(count, 0.0);
  parallel_for(count, [&](std::size_t t) { r.ratios[t] = ratio(tests.vectors[t]); });
  if (refinement.starts > 0 && !tests.packets.empty()) {
    std::vector<std::size_t> order(count);
    for (std::size_t t = 0; t < count; ++t) order[t] = t;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.ratios[a] > r.ratios[b]; });
    const std::size_t starts = std::min(refinement.starts, count);
    std::vector<std::pair<Wavepacket, double>> found(starts);
    parallel_for(starts, [&](std::size_t s) {
      found[s] = climb(tests, tests.packets[order[s]].front(), ratio, refinement.max_evaluations);
    });
    double sampled = 0.0;
    for (double x : r.ratios) sampled = std::max(sampled, x);
    nlohmann::json refined = nlohmann::json::array();
    for (std::size_t s = 0; s < starts; ++s) {
      r.ratios.push_back(found[s].second);
      auto j = packet_json(found[s].first);
      j["start"] = order[s];
      j["ratio"] = found[s].second;
      refined.push_back(j);
    }
    r.extras["sampled_constant"] = sampled;
    r.extras["refined_tests"] = refined;
    r.config["refinement"] = {{"starts", refinement.starts}, {"max_evaluations", refinement.max_evaluations}};
  }
  finalize(r);
}

double weight_ratio(const DiscreteOperator& op, const Eigen::VectorXd& node_weights, const ComplexVector& u) {
  double num = 0.0;
  for (Eigen::Index k = 0; k < u.size(); ++k) num += node_weights[k] * node_weights[k] * std::norm(u[k]);
  return num / ((op.P() * u).squaredNorm() + u.squaredNorm());
}

} // namespace

void finalize(InequalityReport& report) {
  report.constant_estimate = 0.0;
  report.worst_witness = 0;
  for (std::size_t i = 0; i < report.ratios.size(); ++i)
    if (report.ratios[i] > report.constant_estimate || i == 0) {
      report.constant_estimate = report.ratios[i];
      report.worst_witness = i;
    }
}

Stability compare_boxes(const InequalityReport& small_box, const InequalityReport& large_box, double tolerance) {
  Stability s;
  s.other_constant = large_box.constant_estimate;
  s.tolerance = tolerance;
  const double base = std::abs(small_box.constant_estimate);
  const double diff = std::abs(large_box.constant_estimate - small_box.constant_estimate);
  s.relative_change = base > 0.0 ? diff / base : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  s.stable = s.relative_change <= tolerance;
  return s;
}

InequalityReport test_energy_identity(const DiscreteOperator& op, const TestFunctionSet& tests) {
  check_same_grid(op, tests);
  const std::size_t count = tests.vectors.size();
  InequalityReport r;
  r.name = "energy-identity";
  r.anchor = "interpolation-inequality";
  r.config = base_config(tests);
  r.ratios.resize(count);
  std::vector<double> re_error(count), im_error(count);
  parallel_for(count, [&](std::size_t t) {
    const ComplexVector& f = tests.vectors[t];
    const ComplexVector pf = op.P() * f;
    const Complex form = f.dot(pf);
    double energy = 0.0;
    for (const auto& x : op.X()) energy += (x * f).squaredNorm();
    double v_form = 0.0;
    for (Eigen::Index k = 0; k < f.size(); ++k) {
      energy += op.W_diag()[k].real() * std::norm(f[k]);
      v_form += op.V_values()[k] * std::norm(f[k]);
    }
    const double scale = std::max(std::abs(form), std::numeric_limits<double>::min());
    re_error[t] = std::abs(form.real() - energy) / scale;
    im_error[t] = std::abs(form.imag() - v_form) / scale;
    r.ratios[t] = energy / (pf.norm() * f.norm());
  });
  finalize(r);
  const double max_re = *std::max_element(re_error.begin(), re_error.end());
  const double max_im = *std::max_element(im_error.begin(), im_error.end());
  r.extras["max_identity_error"] = max_re;
  r.extras["max_imaginary_identity_error"] = max_im;
  if (max_re > 1e-12 || max_im > 1e-12) r.labels.push_back("identity-violated");
  if (r.constant_estimate > 1.0 + 1e-10) r.labels.push_back("cauchy-schwarz-violated");
  return r;
}

std::vector<double> node_weight_ratios(const DiscreteOperator& op, const TestFunctionSet& tests,
                                       const Eigen::VectorXd& node_weights) {
  check_same_grid(op, tests);
  if (static_cast<std::size_t>(node_weights.size()) != op.size()) throw DimensionError("node weight length mismatch");
  std::vector<double> out(tests.vectors.size());
  parallel_for(out.size(), [&](std::size_t t) { out[t] = weight_ratio(op, node_weights, tests.vectors[t]); });
  return out;
}

namespace {

void label_hypothesis(InequalityReport& r, const WeightFamily& w) {
  const CriterionVerdict v = check_tr_membership(w, SampleRegion{});
  r.extras["hypothesis_verdict"] = to_string(v.holds);
  r.extras["hypothesis_C0_estimate"] = std::isfinite(v.c0_estimate) ? nlohmann::json(v.c0_estimate) : nlohmann::json();
  if (v.holds != Verdict::yes) r.labels.push_back("out-of-hypothesis");
}

} // namespace

InequalityReport test_weighted_estimate(const WeightFamily& w, double delta, const DiscreteOperator& op,
                                        const TestFunctionSet& tests, const Refinement& refinement) {
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("delta must lie in (0, 1]");
  check_same_grid(op, tests);
  if (w.dimension() != op.grid().dimension()) throw DimensionError("weight family and grid dimensions differ");
  Eigen::VectorXd weights(ei(op.size()));
  parallel_for(op.size(), [&](std::size_t k) { weights[ei(k)] = std::pow(weight_mr(w, op.grid().node(k)), delta); });
  InequalityReport r;
  r.name = "weighted-estimate";
  r.anchor = "weighted-m^r-estimate";
  r.config = base_config(tests);
  r.config["r"] = w.r();
  r.config["delta"] = delta;
  run_ratios(r, tests, [&](const ComplexVector& u) { return weight_ratio(op, weights, u); }, refinement);
  label_hypothesis(r, w);
  return r;
}

InequalityReport test_maximal_W(const WeightFamily& w, const DiscreteOperator& op, const TestFunctionSet& tests,
                                const Refinement& refinement) {
  check_same_grid(op, tests);
  Eigen::VectorXd weights(ei(op.size()));
  for (std::size_t k = 0; k < op.size(); ++k) weights[ei(k)] = std::abs(op.W_diag()[ei(k)]);
  InequalityReport r;
  r.name = "maximal-W";
  r.anchor = "maximal-|W|-estimate";
  r.config = base_config(tests);
  r.config["r"] = w.r();
  run_ratios(r, tests, [&](const ComplexVector& u) { return weight_ratio(op, weights, u); }, refinement);
  label_hypothesis(r, w);
  return r;
}

InequalityReport test_second_order(const PotentialSystem& sys, const DiscreteOperator& op,
                                   const TestFunctionSet& tests, const Refinement& refinement) {
  check_same_grid(op, tests);
  const std::size_t d = op.grid().dimension();
  std::vector<SparseMatrix> square(d);
  for (std::size_t j = 0; j < d; ++j) square[j] = op.square_factor(j);
  std::vector<SparseMatrix> products;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t l = 0; l < d; ++l) products.emplace_back(square[j] * square[l]);

  const std::size_t count = tests.vectors.size();
  InequalityReport r;
  r.name = "second-order";
  r.anchor = "second-order-maximal-estimate";
  r.config = base_config(tests);
  std::vector<double> potential(count), combined(count);
  parallel_for(count, [&](std::size_t t) {
    const ComplexVector& u = tests.vectors[t];
    const double den = (op.P() * u).norm() + u.norm();
    double second = 0.0;
    for (const auto& m : products) second += (m * u).norm();
    const double wu = op.W_diag().cwiseProduct(u).norm();
    potential[t] = wu / den;
    combined[t] = (second + wu) / den;
  });
  run_ratios(r, tests, [&](const ComplexVector& u) {
    double second = 0.0;
    for (const auto& m : products) second += (m * u).norm();
    return second / ((op.P() * u).norm() + u.norm());
  }, refinement);
  r.extras["potential_constant"] = *std::max_element(potential.begin(), potential.end());
  r.extras["combined_constant"] = *std::max_element(combined.begin(), combined.end());
  r.extras["imaginary_potential_degree"] = sys.imaginary_potential().degree();
  if (d < 3) r.labels.push_back("dimension-below-3");
  return r;
}

namespace {

SparseMatrix diagonal(const Eigen::VectorXd& values) {
  SparseMatrix m(values.size(), values.size());
  std::vector<Eigen::Triplet<Complex>> t;
  for (Eigen::Index k = 0; k < values.size(); ++k) t.emplace_back(k, k, Complex(values[k], 0.0));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

bool vanishes(SparseMatrix& m, double scale) {
  m.prune([&](const Eigen::Index&, const Eigen::Index&, const Complex& v) { return std::abs(v) > 1e-12 * scale; });
  return m.nonZeros() == 0;
}

struct Membership {
  std::string name;
  double s;
  SparseMatrix t;
  std::vector<Polynomial> symbol;  // polynomial whose derivatives must stay below Psi
};

} // namespace

std::vector<InequalityReport> test_commutators(const WeightFamily& w, const DiscreteOperator& op,
                                               const TestFunctionSet& tests, const Refinement& refinement) {
  check_same_grid(op, tests);
  const PotentialSystem& sys = w.system();
  const std::size_t d = op.grid().dimension();
  if (sys.dimension() != d) throw DimensionError("weight family and grid dimensions differ");
  const std::size_t n = op.size();
  Eigen::VectorXd psi(ei(n));
  parallel_for(n, [&](std::size_t k) { psi[ei(k)] = w.psi(op.grid().node(k)); });

  double h_min = std::numeric_limits<double>::infinity();
  for (double h : op.grid().h()) h_min = std::min(h_min, h);
  const double scale = 1.0 / (h_min * h_min);

  std::vector<SparseMatrix> square(d);
  for (std::size_t j = 0; j < d; ++j) square[j] = op.square_factor(j);

  std::vector<Membership> items;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k) {
      SparseMatrix c = SparseMatrix(kI * commutator(op, j, k));
      if (vanishes(c, scale)) continue;
      items.push_back({"i[X" + std::to_string(j + 1) + ",X" + std::to_string(k + 1) + "]", 0.5, c, {sys.field()(j, k)}});
    }
  if (!sys.imaginary_potential().is_zero())
    items.push_back({"V", 0.5, diagonal(op.V_values()), {sys.imaginary_potential()}});
  for (std::size_t l = 0; l < op.U_values().size(); ++l)
    items.push_back({"U" + std::to_string(l + 1), 1.0, diagonal(op.U_values()[l]), {sys.electric_factors()[l]}});
  // descent: T in M^s with derivative bounds gives i[X_k, T] in M^(s/2)
  auto descend = [&](const std::string& name, double s, const Eigen::VectorXd& values, const Polynomial& p) {
    const SparseMatrix t = diagonal(values);
    for (std::size_t k = 0; k < d; ++k) {
      SparseMatrix c = SparseMatrix(kI * (SparseMatrix(square[k] * t) - SparseMatrix(t * square[k])));
      if (vanishes(c, std::max(1.0, values.cwiseAbs().maxCoeff()) / h_min)) continue;
      items.push_back({"i[X" + std::to_string(k + 1) + "," + name + "]", s / 2.0, c, {p}});
    }
  };
  for (std::size_t l = 0; l < op.U_values().size(); ++l)
    descend("U" + std::to_string(l + 1), 1.0, op.U_values()[l], sys.electric_factors()[l]);
  if (!sys.imaginary_potential().is_zero()) descend("V", 0.5, op.V_values(), sys.imaginary_potential());


  std::vector<InequalityReport> out;
  for (const auto& item : items) {
    InequalityReport r;
    r.name = "membership " + item.name;
    r.anchor = "commutator-membership";
    r.config = base_config(tests);
    r.config["s"] = item.s;
    r.config["r"] = w.r();
    Eigen::VectorXd factor(ei(n));
    for (std::size_t k = 0; k < n; ++k) factor[ei(k)] = std::pow(psi[ei(k)], item.s - 1.0);
    run_ratios(r, tests, [&](const ComplexVector& u) {
      const ComplexVector tu = item.t * u;
      return tu.cwiseProduct(factor).squaredNorm() / ((op.P() * u).norm() * u.norm() + u.squaredNorm());
    }, refinement);
    // sampled check of |d^a T| <= C Psi for |a| = 1, 2
    double bound = 0.0;
    for (unsigned order = 1; order <= 2; ++order)
      for (const auto& alpha : multi_indices_of_order(d, order)) {
        const CompiledPolynomial dt(item.symbol.front().derive(alpha));
        if (dt.is_zero()) continue;
        for (std::size_t k = 0; k < n; ++k)
          bound = std::max(bound, std::abs(dt(op.grid().node(k))) / psi[ei(k)]);
      }
    r.extras["derivative_bound_sampled"] = bound;
    r.labels.push_back("sampled-hypothesis");
    if (item.name.rfind("i[X", 0) == 0 && item.name.find(",X") != std::string::npos) {
      const std::size_t j = static_cast<std::size_t>(item.name[3] - '1');
      const std::size_t k = static_cast<std::size_t>(item.name[item.name.size() - 2] - '1');
      double defect = 0.0;
      for (const auto& u : tests.vectors) defect = std::max(defect, commutator_defect(op, sys, j, k, u));
      r.extras["defect_vs_iB"] = defect;
    }
    out.push_back(std::move(r));
  }
  return out;
}

GridSpec localized_grid(std::size_t dimension, std::size_t n) { return GridSpec::cube(dimension, -1.0, 1.0, n); }

InequalityReport test_localized_bound(const MetricField& m, std::span<const double> center,
                                      const TestFunctionSet& tests) {
  const WeightFamily& w = m.weights();
  const std::size_t d = w.dimension();
  if (center.size() != d || tests.grid.dimension() != d) throw DimensionError("center, grid and system dimensions differ");
  if (tests.vectors.empty()) throw InputError("test function set is empty");
  const double radius = m.radius(center);
  if (radius > 0.5)
    throw DomainError("R(x_m, mu) = " + std::to_string(radius) + " exceeds 1/2; the localized bound does not apply");
  for (const auto& g : tests.vectors)
    for (std::size_t k = 0; k < tests.grid.size(); ++k)
      if (g[ei(k)] != Complex(0.0, 0.0) && norm(tests.grid.node(k)) >= 1.0)
        throw DomainError("test function is not supported in the unit ball of the rescaled variable");

  const LocalizedOperator loc = assemble_localized(w.system(), tests.grid, center, radius);
  const double delta = std::ldexp(1.0, -static_cast<int>(w.r()));
  const double mu_a = std::pow(m.mu(), delta);
  const double mu_b = std::pow(m.mu(), delta / 2.0);
  InequalityReport r;
  r.name = "localized-bound";
  r.anchor = "localized-lower-bound";
  r.config = base_config(tests);
  r.config["mu"] = m.mu();
  r.config["r"] = w.r();
  r.config["delta"] = delta;
  r.config["center"] = Point(center.begin(), center.end());
  r.config["R"] = radius;
  r.ratios.resize(tests.vectors.size());
  parallel_for(tests.vectors.size(), [&](std::size_t t) {
    const ComplexVector& g = tests.vectors[t];
    double xg = 0.0;
    for (const auto& x : loc.op.X()) xg += (x * g).squaredNorm();
    r.ratios[t] = (mu_a * g.norm() + mu_b * std::sqrt(xg)) / (loc.op.P() * g).norm();
  });
  finalize(r);
  return r;
}

InequalityReport test_localized_bound(const MetricField& m, const Cover& cover, std::size_t index,
                                      const TestFunctionSet& tests) {
  if (index >= cover.centers.size()) throw InputError("cover index out of range");
  return test_localized_bound(m, cover.centers[index], tests);
}

LocalizedSweep localized_sweep(std::shared_ptr<const WeightFamily> w, std::span<const double> center,
                               const std::vector<double>& mus, const TestFunctionSet& tests) {
  LocalizedSweep out;
  out.mus = mus;
  std::vector<std::size_t> valid;
  for (double mu : mus) {
    const MetricField m(w, mu);
    if (m.radius(center) > 0.5) {
      InequalityReport r;
      r.name = "localized-bound";
      r.anchor = "localized-lower-bound";
      r.config = {{"mu", mu}, {"R", m.radius(center)}};
      r.labels.push_back("hypothesis-violated");
      out.reports.push_back(std::move(r));
      continue;
    }
    valid.push_back(out.reports.size());
    out.reports.push_back(test_localized_bound(m, center, tests));
  }
  for (std::size_t a = 0; a < valid.size(); ++a) {
    bool monotone = true;
    for (std::size_t b = a; b + 1 < valid.size(); ++b)
      if (out.reports[valid[b + 1]].constant_estimate > out.reports[valid[b]].constant_estimate) monotone = false;
    if (monotone) {
      out.mu0_candidate = mus[valid[a]];
      break;
    }
  }
  return out;
}

nlohmann::json to_json(const InequalityReport& r) {
  nlohmann::json j{{"name", r.name},
                   {"anchor", r.anchor},
                   {"constant_estimate", r.constant_estimate},
                   {"worst_witness", r.worst_witness},
                   {"ratios", r.ratios},
                   {"config", r.config},
                   {"labels", r.labels},
                   {"extras", r.extras}};
  if (r.stability)
    j["stability"] = {{"other_constant", r.stability->other_constant},
                      {"relative_change", r.stability->relative_change},
                      {"tolerance", r.stability->tolerance},
                      {"stable", r.stability->stable}};
  return j;
}

nlohmann::json to_json(const LocalizedSweep& s) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : s.reports) reports.push_back(to_json(r));
  return {{"mus", s.mus},
          {"reports", reports},
          {"mu0_candidate", s.mu0_candidate ? nlohmann::json(*s.mu0_candidate) : nlohmann::json()}};
}

std::string ratios_csv(const std::vector<InequalityReport>& reports) {
  std::ostringstream out;
  out << "inequality,test,ratio\n";
  out.precision(17);
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.ratios.size(); ++i) out << '"' << r.name << "\"," << i << ',' << r.ratios[i] << '\n';
  return out.str();
}

} // namespace magspec
