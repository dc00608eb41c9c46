#include "magspec/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "magspec/error.hpp"
#include "magspec/parallel.hpp"

namespace magspec {

Box Box::cube(std::size_t dimension, double lo, double hi) {
  return Box{Point(dimension, lo), Point(dimension, hi)};
}

namespace {

void check_box(const Box& box) {
  if (box.lo.empty() || box.lo.size() != box.hi.size()) throw DimensionError("box bounds have mismatched lengths");
  for (std::size_t i = 0; i < box.lo.size(); ++i)
    if (!(box.hi[i] >= box.lo[i])) throw DomainError("box is empty along an axis");
}

Point uniform_in_box(Rng& rng, const Box& box) {
  Point p(box.dimension());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(box.lo[i], box.hi[i]);
  return p;
}

// Phi(x, t) from the weights m_0..m_r at x.
double phi_from_orders(const std::vector<double>& m, unsigned r, double t) {
  double value = 0.0;
  double tp = t;
  for (unsigned q = 0; q <= r; ++q) {
    value += tp * m[q];
    tp *= t;
  }
  return value;
}

} // namespace

double phi(const WeightFamily& w, std::span<const double> x, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("Phi is defined for t in [0, 1]");
  return phi_from_orders(w.orders(x), w.r(), t);
}

MetricField::MetricField(std::shared_ptr<const WeightFamily> weights, double mu, double bisection_tol)
    : w_(std::move(weights)), mu_(mu), tol_(bisection_tol) {
  if (!w_) throw InputError("metric needs a weight family");
  if (!(mu_ >= 1.0)) throw DomainError("metric parameter mu must be >= 1");
  if (!(tol_ > 0.0)) throw DomainError("bisection tolerance must be positive");
}

double MetricField::radius(std::span<const double> x) const {
  const auto m = w_->orders(x);
  const unsigned r = w_->r();
  if (phi_from_orders(m, r, 1.0) <= mu_) return 1.0;
  // Phi(x,0) = 0 <= mu < Phi(x,1): a valid bracket, and Phi is increasing.
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double value = phi_from_orders(m, r, mid);
    if (value <= mu_) {
      lo = mid;
      if (mu_ - value <= tol_ * mu_ * 1e-6) break;
    } else {
      hi = mid;
    }
  }
  return lo;
}

SlowVariationResult verify_slow_variation(const MetricField& m, const Box& region, std::size_t sample_pairs,
                                          std::uint64_t seed) {
  check_box(region);
  if (sample_pairs == 0) throw DomainError("slow variation check needs at least one pair");
  const std::size_t d = region.dimension();
  if (d != m.weights().dimension()) throw DimensionError("region dimension does not match the system");

  std::vector<Point> xs(sample_pairs);
  std::vector<Point> offsets(sample_pairs);
  std::vector<double> rx(sample_pairs);
  Rng rng(seed);
  for (std::size_t i = 0; i < sample_pairs; ++i) {
    xs[i] = uniform_in_box(rng, region);
    offsets[i] = uniform_in_ball(rng, d);
  }
  parallel_for(sample_pairs, [&](std::size_t i) { rx[i] = m.radius(xs[i]); });

  SlowVariationResult out;
  out.samples = sample_pairs;
  std::vector<double> ratios(sample_pairs);
  std::vector<Point> ys(sample_pairs, Point(d));
  for (int k = 1; k <= 200; ++k) {
    const double c2 = std::pow(1.25, k);
    parallel_for(sample_pairs, [&](std::size_t i) {
      for (std::size_t a = 0; a < d; ++a) ys[i][a] = xs[i][a] + rx[i] / (2.0 * c2) * offsets[i][a];
      ratios[i] = m.radius(ys[i]) / rx[i];
    });
    bool ok = true;
    std::size_t worst = 0;
    double worst_log = -1.0;
    for (std::size_t i = 0; i < sample_pairs; ++i) {
      if (ratios[i] < 1.0 / (2.0 * c2) || ratios[i] > 2.0 * c2) ok = false;
      const double l = std::abs(std::log(ratios[i]));
      if (l > worst_log) {
        worst_log = l;
        worst = i;
      }
    }
    if (ok) {
      out.c2_estimate = c2;
      out.worst_x = xs[worst];
      out.worst_y = ys[worst];
      out.worst_ratio = ratios[worst];
      return out;
    }
  }
  throw SolverError("slow variation search did not terminate");
}

namespace {

struct Triple {
  Point x;
  Point y;
  double t;
};

std::vector<Triple> draw_triples(const Box& region, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Triple> out(count);
  for (auto& tr : out) {
    tr.x = uniform_in_box(rng, region);
    // half of the draws sit at the endpoint t = 1, where the ratio peaks for
    // most systems
    tr.t = rng.uniform() < 0.5 ? 1.0 : rng.uniform(1e-3, 1.0);
    const Point b = uniform_in_ball(rng, region.dimension());
    tr.y = tr.x;
    for (std::size_t a = 0; a < tr.y.size(); ++a) tr.y[a] += tr.t * b[a];
  }
  return out;
}

std::vector<double> triple_ratios(const WeightFamily& w, const std::vector<Triple>& triples) {
  std::vector<double> ratios(triples.size());
  const double power = static_cast<double>(w.r() + 1);
  parallel_for(triples.size(), [&](std::size_t i) {
    const auto& tr = triples[i];
    const double num = phi(w, tr.y, tr.t);
    const double den = phi(w, tr.x, tr.t) + std::pow(tr.t, power);
    ratios[i] = num / den;
  });
  return ratios;
}

} // namespace

PhiGrowthResult estimate_phi_growth(const WeightFamily& w, const Box& region, std::size_t triples,
                                    std::uint64_t seed) {
  check_box(region);
  if (triples == 0) throw DomainError("need at least one triple");
  const auto ratios = triple_ratios(w, draw_triples(region, triples, seed));
  PhiGrowthResult out;
  out.samples = triples;
  out.raw_sup = *std::max_element(ratios.begin(), ratios.end());
  double c2 = 1.25;
  while (c2 < 1.1 * out.raw_sup) c2 *= 1.25;
  out.c2_estimate = c2;
  return out;
}

PhiGrowthCheck check_phi_growth(const WeightFamily& w, const Box& region, double c2, std::size_t triples,
                                std::uint64_t seed) {
  check_box(region);
  const auto ratios = triple_ratios(w, draw_triples(region, triples, seed));
  PhiGrowthCheck out;
  out.samples = triples;
  for (double r : ratios) {
    out.max_ratio = std::max(out.max_ratio, r);
    if (r > c2) ++out.violations;
  }
  return out;
}

std::vector<Point> box_lattice(const Box& box, std::size_t per_axis) {
  check_box(box);
  const std::size_t d = box.dimension();
  std::vector<std::size_t> counts(d);
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) {
    counts[i] = box.hi[i] > box.lo[i] ? std::max<std::size_t>(per_axis, 2) : 1;
    total *= counts[i];
  }
  std::vector<Point> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point p(d);
    std::size_t rest = idx;
    // last axis varies fastest
    for (std::size_t i = d; i-- > 0;) {
      const std::size_t k = rest % counts[i];
      rest /= counts[i];
      p[i] = counts[i] == 1 ? box.lo[i]
                            : box.lo[i] + (box.hi[i] - box.lo[i]) * static_cast<double>(k) /
                                              static_cast<double>(counts[i] - 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

// Lattice with spacing at most `step` on every non-degenerate axis.
std::vector<Point> step_lattice(const Box& box, double step, double& actual_step) {
  std::size_t per_axis = 2;
  actual_step = 0.0;
  for (std::size_t i = 0; i < box.dimension(); ++i) {
    const double extent = box.hi[i] - box.lo[i];
    if (extent > 0.0) per_axis = std::max(per_axis, static_cast<std::size_t>(std::ceil(extent / step)) + 1);
  }
  // Equal counts per axis keep box_lattice simple; the spacing on each axis is
  // extent / (per_axis - 1) <= step.
  for (std::size_t i = 0; i < box.dimension(); ++i) {
    const double extent = box.hi[i] - box.lo[i];
    if (extent > 0.0) actual_step = std::max(actual_step, extent / static_cast<double>(per_axis - 1));
  }
  return box_lattice(box, per_axis);
}

long long hash_cell(const std::vector<long long>& c) {
  long long key = 0;
  for (long long v : c) key = key * 1000003LL + v;
  return key;
}

struct PointHash {
  double cell;
  Point origin;
  std::unordered_map<long long, std::vector<std::size_t>> buckets;

  std::vector<long long> coords(std::span<const double> x) const {
    std::vector<long long> c(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = static_cast<long long>(std::floor((x[i] - origin[i]) / cell));
    return c;
  }

  void insert(std::span<const double> x, std::size_t id) { buckets[hash_cell(coords(x))].push_back(id); }

  template <class F>
  void visit(std::span<const double> x, double reach, F&& f) const {
    const std::size_t d = x.size();
    std::vector<long long> lo(d), hi(d);
    for (std::size_t i = 0; i < d; ++i) {
      lo[i] = static_cast<long long>(std::floor((x[i] - reach - origin[i]) / cell));
      hi[i] = static_cast<long long>(std::floor((x[i] + reach - origin[i]) / cell));
    }
    std::vector<long long> c = lo;
    std::vector<std::size_t> seen;
    while (true) {
      auto it = buckets.find(hash_cell(c));
      if (it != buckets.end())
        for (std::size_t id : it->second) seen.push_back(id);
      std::size_t i = 0;
      for (; i < d; ++i) {
        if (++c[i] <= hi[i]) break;
        c[i] = lo[i];
      }
      if (i == d) break;
    }
    // hash collisions may repeat ids; visit each once in increasing order
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    for (std::size_t id : seen) f(id);
  }
};

} // namespace

Cover build_cover(const MetricField& m, const Box& region, const CoverOptions& options) {
  check_box(region);
  const std::size_t d = region.dimension();
  if (d != m.weights().dimension()) throw DimensionError("region dimension does not match the system");
  const double sqrt_d = std::sqrt(static_cast<double>(d));

  double step = options.lattice_step;
  const bool automatic = !(step > 0.0);
  if (automatic) {
    double extent = 0.0;
    for (std::size_t i = 0; i < d; ++i) extent = std::max(extent, region.hi[i] - region.lo[i]);
    const auto probe = box_lattice(region, std::clamp<std::size_t>(static_cast<std::size_t>(extent * 4.0) + 1, 2, 257));
    std::vector<double> rs(probe.size());
    parallel_for(probe.size(), [&](std::size_t i) { rs[i] = m.radius(probe[i]); });
    const double min_r = *std::min_element(rs.begin(), rs.end());
    step = 0.9 * min_r / (2.0 * sqrt_d);
  }

  for (int attempt = 0;; ++attempt) {
    Cover cover;
    cover.region = region;
    cover.mu = m.mu();
    const auto lattice = step_lattice(region, step, cover.lattice_step);
    cover.candidate_count = lattice.size();

    // R <= 1, so a blocking center is within 1/2 of the candidate
    PointHash hash{0.5, region.lo, {}};
    for (const auto& x : lattice) {
      bool blocked = false;
      hash.visit(x, 0.5, [&](std::size_t j) {
        if (!blocked && distance(x, cover.centers[j]) < cover.radii[j] / 2.0) blocked = true;
      });
      if (blocked) continue;
      hash.insert(x, cover.centers.size());
      cover.centers.push_back(x);
      cover.radii.push_back(m.radius(x));
    }

    // Every region point is within step*sqrt(d)/2 of a lattice point, which is
    // within R_j/2 of a center; the margin must keep it inside 3/4 R_j.
    const auto min_it = std::min_element(cover.radii.begin(), cover.radii.end());
    const double min_r = *min_it;
    if (cover.lattice_step * sqrt_d > min_r / 2.0 * (1.0 + 1e-12)) {
      if (automatic && attempt < 4) {
        step = 0.9 * min_r / (2.0 * sqrt_d);
        continue;
      }
      throw CertificationError("candidate lattice is coarser than the smallest radius; covering cannot be certified",
                               cover.centers[static_cast<std::size_t>(min_it - cover.radii.begin())]);
    }

    PointHash balls{1.0, region.lo, {}};
    for (std::size_t j = 0; j < cover.centers.size(); ++j) balls.insert(cover.centers[j], j);
    std::vector<std::size_t> overlap(lattice.size(), 0);
    parallel_for(lattice.size(), [&](std::size_t i) {
      balls.visit(lattice[i], 1.0, [&](std::size_t j) {
        if (distance(lattice[i], cover.centers[j]) < cover.radii[j]) ++overlap[i];
      });
    });
    cover.max_overlap = *std::max_element(overlap.begin(), overlap.end());
    return cover;
  }
}

PartitionOfUnity::PartitionOfUnity(Cover cover) : cover_(std::move(cover)) {
  if (cover_.centers.empty()) throw InputError("partition needs a nonempty cover");
  if (cover_.centers.size() != cover_.radii.size()) throw InputError("cover centers and radii differ in length");
  cell_size_ = *std::max_element(cover_.radii.begin(), cover_.radii.end());
  for (std::size_t j = 0; j < cover_.centers.size(); ++j) buckets_[cell_key(cover_.centers[j])].push_back(j);
}

long long PartitionOfUnity::cell_key(std::span<const double> x) const {
  std::vector<long long> c(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    c[i] = static_cast<long long>(std::floor((x[i] - cover_.region.lo[i]) / cell_size_));
  return hash_cell(c);
}

std::vector<std::size_t> PartitionOfUnity::nearby(std::span<const double> x, double reach) const {
  const std::size_t d = x.size();
  std::vector<long long> lo(d), hi(d);
  for (std::size_t i = 0; i < d; ++i) {
    lo[i] = static_cast<long long>(std::floor((x[i] - reach - cover_.region.lo[i]) / cell_size_));
    hi[i] = static_cast<long long>(std::floor((x[i] + reach - cover_.region.lo[i]) / cell_size_));
  }
  std::vector<long long> c = lo;
  std::vector<std::size_t> out;
  while (true) {
    auto it = buckets_.find(hash_cell(c));
    if (it != buckets_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    std::size_t i = 0;
    for (; i < d; ++i) {
      if (++c[i] <= hi[i]) break;
      c[i] = lo[i];
    }
    if (i == d) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> PartitionOfUnity::active(std::span<const double> x) const {
  std::vector<std::size_t> out;
  for (std::size_t j : nearby(x, cell_size_))
    if (distance(Point(x.begin(), x.end()), cover_.centers[j]) < cover_.radii[j]) out.push_back(j);
  return out;
}

double PartitionOfUnity::psi(std::size_t j, std::span<const double> x) const {
  const double rho = distance(Point(x.begin(), x.end()), cover_.centers[j]) / cover_.radii[j];
  return bump_profile(rho).value;
}

double PartitionOfUnity::denominator(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t j : active(x)) {
    const double p = psi(j, x);
    s += p * p;
  }
  return s;
}

PartitionOfUnity::Values PartitionOfUnity::values(std::span<const double> x) const {
  Values out;
  out.index = active(x);
  double s = 0.0;
  for (std::size_t j : out.index) {
    out.value.push_back(psi(j, x));
    s += out.value.back() * out.value.back();
  }
  if (!(s > 0.0)) throw CertificationError("point is not covered by the partition", Point(x.begin(), x.end()));
  const double inv = 1.0 / std::sqrt(s);
  for (auto& v : out.value) v *= inv;
  return out;
}

PartitionOfUnity::Jets PartitionOfUnity::jets(std::span<const double> x) const {
  const std::size_t d = x.size();
  Jets out;
  out.index = active(x);
  std::vector<Jet2> psis;
  Jet2 sum(d);
  for (std::size_t j : out.index) {
    const Point& c = cover_.centers[j];
    const double rj = cover_.radii[j];
    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) dist2 += (x[i] - c[i]) * (x[i] - c[i]);
    const double dist = std::sqrt(dist2);
    const BumpValue b = bump_profile(dist / rj);
    Jet2 p(d, b.value);
    if (b.d1 != 0.0 || b.d2 != 0.0) {
      // rho = |x - c| / R_j is smooth away from the center; the bump is flat
      // near the center, so dist > R_j / 2 here.
      Jet2 rho(d, dist / rj);
      for (std::size_t i = 0; i < d; ++i) {
        const double ni = (x[i] - c[i]) / dist;
        rho.grad(i) = ni / rj;
        for (std::size_t k = 0; k < d; ++k) {
          const double nk = (x[k] - c[k]) / dist;
          rho.hess(i, k) = ((i == k ? 1.0 : 0.0) - ni * nk) / (rj * dist);
        }
      }
      p = rho.compose(b.value, b.d1, b.d2);
    }
    sum += p * p;
    psis.push_back(std::move(p));
  }
  if (!(sum.value() > 0.0)) throw CertificationError("point is not covered by the partition", Point(x.begin(), x.end()));
  const double s = sum.value();
  // s^(-1/2)
  const Jet2 inv_sqrt = sum.compose(1.0 / std::sqrt(s), -0.5 * std::pow(s, -1.5), 0.75 * std::pow(s, -2.5));
  for (const auto& p : psis) out.phi.push_back(p * inv_sqrt);
  return out;
}

PartitionOfUnity build_partition(const Cover& cover) {
  PartitionOfUnity p(cover);
  if (cover.lattice_step > 0.0) {
    double step = 0.0;
    const auto lattice = step_lattice(cover.region, cover.lattice_step, step);
    std::vector<double> den(lattice.size());
    parallel_for(lattice.size(), [&](std::size_t i) { den[i] = p.denominator(lattice[i]); });
    for (std::size_t i = 0; i < lattice.size(); ++i)
      if (!(den[i] > 0.0)) throw CertificationError("covering violated: partition denominator vanishes", lattice[i]);
  }
  return p;
}

PartitionReport verify_partition(const PartitionOfUnity& p, const MetricField& m, std::span<const Point> grid,
                                 int k, std::size_t random_tests, std::uint64_t seed) {
  if (k != 1 && k != 2) throw DomainError("localization exponent k must be 1 or 2");
  if (grid.empty()) throw DomainError("partition verification needs grid points");
  const Cover& cover = p.cover();
  const std::size_t n = grid.size();
  const std::size_t d = grid.front().size();

  struct PointData {
    double residual = 0.0;
    std::size_t violations = 0;
    double first = 0.0;
    double second = 0.0;
    double r = 1.0;
    std::vector<std::size_t> index;
    std::vector<double> phi2;
  };
  std::vector<PointData> data(n);
  parallel_for(n, [&](std::size_t g) {
    const Point& x = grid[g];
    PointData& pd = data[g];
    pd.r = m.radius(x);
    const auto jets = p.jets(x);
    double s = 0.0;
    std::vector<double> first(d, 0.0);
    std::vector<double> second(d * d, 0.0);
    for (std::size_t a = 0; a < jets.index.size(); ++a) {
      const Jet2& f = jets.phi[a];
      s += f.value() * f.value();
      for (std::size_t i = 0; i < d; ++i) first[i] += f.grad(i) * f.grad(i);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) second[i * d + j] += f.hess(i, j) * f.hess(i, j);
      pd.index.push_back(jets.index[a]);
      pd.phi2.push_back(f.value() * f.value());
    }
    pd.residual = std::abs(s - 1.0);
    pd.first = *std::max_element(first.begin(), first.end()) * pd.r * pd.r;
    pd.second = *std::max_element(second.begin(), second.end()) * std::pow(pd.r, 4);
    // support scan: balls near x that do not contain it must give psi_j = 0
    for (std::size_t j : p.nearby(x, 1.0)) {
      if (distance(x, cover.centers[j]) >= cover.radii[j] && p.psi(j, x) != 0.0) ++pd.violations;
    }
  });

  PartitionReport report;
  report.points = n;
  report.k = k;
  report.mu = m.mu();
  report.random_tests = random_tests;
  for (const auto& pd : data) {
    report.max_residual = std::max(report.max_residual, pd.residual);
    report.support_violations += pd.violations;
    report.c_first = std::max(report.c_first, pd.first);
    report.c_second = std::max(report.c_second, pd.second);
  }

  Rng rng(seed);
  for (std::size_t t = 0; t < random_tests; ++t) {
    double lhs = 0.0;
    double rhs = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
      const double re = rng.normal();
      const double im = rng.normal();
      const double u2 = re * re + im * im;
      lhs += u2 / std::pow(data[g].r, 2 * k);
      for (std::size_t a = 0; a < data[g].index.size(); ++a)
        rhs += data[g].phi2[a] * u2 / std::pow(cover.radii[data[g].index[a]], 2 * k);
    }
    report.c_hat = std::max(report.c_hat, lhs / rhs);
  }
  return report;
}

nlohmann::json to_json(const Cover& c) {
  nlohmann::json j;
  j["centers"] = c.centers;
  j["radii"] = c.radii;
  j["region"] = {{"lo", c.region.lo}, {"hi", c.region.hi}};
  j["mu"] = c.mu;
  j["lattice_step"] = c.lattice_step;
  j["candidate_count"] = c.candidate_count;
  j["max_overlap"] = c.max_overlap;
  j["bump"] = {{"profile", "step(2 - 2 rho), step(s) = f(s)/(f(s)+f(1-s)), f(s) = exp(-1/s)"},
               {"plateau", 0.5},
               {"support", 1.0},
               {"max_slope", kBumpMaxSlope},
               {"max_curvature", kBumpMaxCurvature}};
  return j;
}

nlohmann::json to_json(const PartitionReport& r) {
  return {{"points", r.points},
          {"mu", r.mu},
          {"max_residual_sum_phi_squared", r.max_residual},
          {"support_violations", r.support_violations},
          {"derivative_constant_order1", r.c_first},
          {"derivative_constant_order2", r.c_second},
          {"k", r.k},
          {"localization_constant", r.c_hat},
          {"random_tests", r.random_tests}};
}

nlohmann::json to_json(const SlowVariationResult& r) {
  return {{"C2_estimate", r.c2_estimate},
          {"worst_pair", {{"x", r.worst_x}, {"y", r.worst_y}, {"ratio", r.worst_ratio}}},
          {"samples", r.samples}};
}

} // namespace magspec
