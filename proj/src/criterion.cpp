#include "magspec/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "magspec/error.hpp"
#include "magspec/parallel.hpp"

namespace magspec {

WeightFamily::WeightFamily(PotentialSystem system, unsigned r) : system_(std::move(system)), r_(r) {
  const std::size_t d = system_.dimension();
  auto add_group = [&](Kind kind, unsigned q, std::vector<Polynomial> polys) {
    Group g{kind, q, std::move(polys), {}};
    for (const auto& p : g.polynomials) g.compiled.emplace_back(p);
    groups_.push_back(std::move(g));
  };
  for (unsigned q = 0; q <= r_ + 1; ++q) {
    const auto alphas = multi_indices_of_order(d, q);
    std::vector<Polynomial> u;
    for (const auto& ul : system_.electric_factors())
      for (const auto& a : alphas) u.push_back(ul.derive(a));
    add_group(Kind::electric, q, std::move(u));
    if (q == 0) continue;
    const auto lower = multi_indices_of_order(d, q - 1);
    std::vector<Polynomial> b;
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = j + 1; k < d; ++k)
        for (const auto& a : lower) b.push_back(system_.field()(j, k).derive(a));
    add_group(Kind::magnetic, q, std::move(b));
    std::vector<Polynomial> v;
    for (const auto& a : lower) v.push_back(system_.imaginary_potential().derive(a));
    add_group(Kind::imaginary, q, std::move(v));
  }
}

std::vector<double> WeightFamily::orders(std::span<const double> x) const {
  if (x.size() != dimension()) throw DimensionError("weight evaluation point has wrong length");
  std::vector<double> m(r_ + 2, 0.0);
  for (const auto& g : groups_)
    for (const auto& p : g.compiled) m[g.q] += std::abs(p(x));
  return m;
}

double WeightFamily::psi(std::span<const double> x) const {
  if (x.size() != dimension()) throw DimensionError("weight evaluation point has wrong length");
  double value = 1.0;
  for (const auto& g : groups_) {
    if (g.q > r_) continue;
    double s2 = 0.0;
    for (const auto& p : g.compiled) {
      const double v = p(x);
      s2 += v * v;
    }
    value += std::sqrt(s2);
  }
  return value;
}

std::size_t WeightFamily::summand_count() const {
  std::size_t n = 1;
  for (const auto& g : groups_)
    if (g.q <= r_) n += g.polynomials.size();
  return n;
}

double weight_mq(const WeightFamily& w, unsigned q, std::span<const double> x) {
  if (q > w.r() + 1) throw DomainError("weight order q must lie in [0, r+1]");
  return w.orders(x)[q];
}

double weight_mr(const WeightFamily& w, std::span<const double> x) {
  const auto m = w.orders(x);
  double value = 1.0;
  for (unsigned q = 0; q <= w.r(); ++q) value += m[q];
  return value;
}

double smooth_weight_psi(const WeightFamily& w, std::span<const double> x) { return w.psi(x); }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

// Growth degree of sum_i |p_i(t e_j)| as t -> infinity; -1 if all vanish.
int axis_degree(const WeightFamily& w, std::size_t axis, unsigned q_lo, unsigned q_hi) {
  int deg = -1;
  for (const auto& g : w.groups()) {
    if (g.q < q_lo || g.q > q_hi) continue;
    for (const auto& p : g.polynomials) deg = std::max(deg, p.degree_along_axis(axis));
  }
  return deg;
}

std::optional<AxisCertificate> find_axis_certificate(const WeightFamily& w, double exponent) {
  for (std::size_t axis = 0; axis < w.dimension(); ++axis) {
    const int num = axis_degree(w, axis, w.r() + 1, w.r() + 1);
    // the constant 1 in m^r has degree 0
    const int den = std::max(0, axis_degree(w, axis, 0, w.r()));
    if (num >= 0 && static_cast<double>(num) > exponent * static_cast<double>(den))
      return AxisCertificate{axis, num, den, exponent};
  }
  return std::nullopt;
}

struct RadialSamples {
  std::vector<Point> points;
  std::vector<double> radii;  // radius of each point (0 for the origin)
};

RadialSamples radial_samples(std::size_t d, const SampleRegion& region) {
  if (!(region.radius > 0.0)) throw DomainError("sampling region radius must be positive");
  if (region.directions == 0) throw DomainError("empty sample set: no directions per shell");
  RadialSamples s;
  s.points.emplace_back(d, 0.0);
  s.radii.push_back(0.0);
  const double inner = std::min(region.inner_radius, region.radius);
  const auto dirs = sphere_directions(d, region.directions);
  for (double r : geometric_radii(inner, region.radius, region.shells_per_doubling)) {
    for (const auto& u : dirs) {
      Point p(d);
      for (std::size_t i = 0; i < d; ++i) p[i] = r * u[i];
      s.points.push_back(std::move(p));
      s.radii.push_back(r);
    }
  }
  return s;
}

CriterionVerdict check_ratio(const WeightFamily& w, const SampleRegion& region, double exponent) {
  CriterionVerdict verdict;
  verdict.sample_region = region;
  const RadialSamples samples = radial_samples(w.dimension(), region);
  verdict.sample_region.sample_count = samples.points.size();

  std::vector<double> ratios(samples.points.size());
  parallel_for(samples.points.size(), [&](std::size_t i) {
    const auto m = w.orders(samples.points[i]);
    double mr = 1.0;
    for (unsigned q = 0; q <= w.r(); ++q) mr += m[q];
    ratios[i] = m[w.r() + 1] / std::pow(mr, exponent);
  });

  double sup = 0.0;
  double sup_inner = 0.0;
  std::size_t arg = 0;
  const double half = region.radius / 2.0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (ratios[i] > sup) {
      sup = ratios[i];
      arg = i;
    }
    if (samples.radii[i] <= half * (1.0 + 1e-12)) sup_inner = std::max(sup_inner, ratios[i]);
  }
  verdict.raw_sup = sup;
  verdict.witness = samples.points[arg];
  verdict.c0_estimate = 1.1 * sup;

  verdict.certificate = find_axis_certificate(w, exponent);
  if (verdict.certificate) {
    verdict.holds = Verdict::no;
    verdict.c0_estimate = std::numeric_limits<double>::infinity();
    return verdict;
  }
  const bool stable = sup - sup_inner <= 1e-3 * sup;
  verdict.holds = stable ? Verdict::yes : Verdict::inconclusive;
  return verdict;
}

SampleRegion make_region(double radius, std::size_t density) {
  SampleRegion region;
  region.radius = radius;
  region.directions = density;
  return region;
}

} // namespace

CriterionVerdict check_tr_membership(const WeightFamily& w, const SampleRegion& region) {
  return check_ratio(w, region, 1.0);
}

CriterionVerdict check_tr_membership(const WeightFamily& w, double region_radius, std::size_t grid_density) {
  return check_tr_membership(w, make_region(region_radius, grid_density));
}

double meftah_delta(unsigned r) {
  if (r == 0) throw DomainError("the relaxed criterion needs r >= 1");
  return 1.0 / (std::exp2(static_cast<double>(r + 1)) - 3.0);
}

CriterionVerdict check_meftah(const WeightFamily& w, const SampleRegion& region) {
  return check_ratio(w, region, 1.0 + meftah_delta(w.r()));
}

CriterionVerdict check_meftah(const WeightFamily& w, double region_radius, std::size_t grid_density) {
  return check_meftah(w, make_region(region_radius, grid_density));
}

GrowthResult check_growth(const WeightFamily& w, std::span<const double> radii, std::size_t directions) {
  if (radii.empty()) throw DomainError("growth check needs at least one radius");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw DomainError("growth radii must be increasing");
  const auto dirs = sphere_directions(w.dimension(), directions);
  GrowthResult out;
  out.radii.assign(radii.begin(), radii.end());
  out.min_by_radius.resize(radii.size());
  parallel_for(radii.size(), [&](std::size_t i) {
    double lo = std::numeric_limits<double>::infinity();
    Point p(w.dimension());
    for (const auto& u : dirs) {
      for (std::size_t k = 0; k < p.size(); ++k) p[k] = radii[i] * u[k];
      lo = std::min(lo, weight_mr(w, p));
    }
    out.min_by_radius[i] = lo;
  });
  bool increasing = true;
  for (std::size_t i = 1; i < out.min_by_radius.size(); ++i)
    if (!(out.min_by_radius[i] > out.min_by_radius[i - 1])) increasing = false;
  out.grows = increasing && out.min_by_radius.back() > 2.0 * out.min_by_radius.front();
  return out;
}

namespace {

// Visits the midpoints of an n^d cell grid on the cube center +- half.
template <class F>
void for_each_cell(std::span<const double> center, double half, std::size_t n, F&& visit) {
  const std::size_t d = center.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= n;
  const double h = 2.0 * half / static_cast<double>(n);
  Point p(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t i = 0; i < d; ++i) {
      p[i] = center[i] - half + (static_cast<double>(rest % n) + 0.5) * h;
      rest /= n;
    }
    visit(p);
  }
}

// Cells per axis, capped so n^d stays desk-sized.
std::size_t capped_cells(std::size_t n, std::size_t d) {
  const double cap = std::floor(std::pow(4.0e6, 1.0 / static_cast<double>(d)));
  return std::max<std::size_t>(2, std::min<std::size_t>(n, static_cast<std::size_t>(cap)));
}

double checked_weight(const CompiledPolynomial& w, std::span<const double> p, double tolerance) {
  const double v = w(p);
  if (v < -tolerance) throw DomainError("weight is negative at a sampled point");
  return std::max(0.0, v);
}

} // namespace

double iwatsuka_average(const PotentialSystem& sys, std::span<const double> x, std::size_t quadrature_n) {
  if (quadrature_n < 2) throw DomainError("quadrature_n must be at least 2");
  const std::size_t d = sys.dimension();
  if (x.size() != d) throw DimensionError("ball center has wrong length");
  const std::size_t n = capped_cells(quadrature_n, d);
  std::vector<CompiledPolynomial> u;
  for (const auto& p : sys.electric_factors()) u.emplace_back(p);
  std::vector<CompiledPolynomial> b;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = j + 1; k < d; ++k) b.emplace_back(sys.field()(j, k));
  const double cell = std::pow(2.0 / static_cast<double>(n), static_cast<double>(d));
  double integral = 0.0;
  for_each_cell(x, 1.0, n, [&](const Point& p) {
    if (distance(p, Point(x.begin(), x.end())) > 1.0) return;
    double value = 0.0;
    for (const auto& ul : u) value += ul(p) * ul(p);
    for (const auto& bjk : b) value += bjk(p) * bjk(p);
    integral += value * cell;
  });
  return integral;
}

ReverseHolderResult reverse_holder_check(const Polynomial& weight, double q, std::span<const Cube> cubes,
                                         std::size_t quadrature_n) {
  if (!(q >= 1.0)) throw DomainError("reverse Hoelder exponent must be >= 1");
  if (cubes.empty()) throw DomainError("reverse Hoelder check needs at least one cube");
  const CompiledPolynomial w(weight);
  const std::size_t d = weight.dimension();
  const std::size_t n = capped_cells(quadrature_n, d);
  ReverseHolderResult out;
  out.ratios.resize(cubes.size());
  parallel_for(cubes.size(), [&](std::size_t c) {
    const Cube& cube = cubes[c];
    if (cube.center.size() != d) throw DimensionError("cube center has wrong length");
    if (!(cube.side > 0.0)) throw DomainError("cube side must be positive");
    double sum = 0.0, sum_q = 0.0, scale = 0.0;
    std::size_t count = 0;
    for_each_cell(cube.center, cube.side / 2.0, n, [&](const Point& p) {
      const double v = checked_weight(w, p, 1e-12 * std::max(1.0, scale));
      scale = std::max(scale, v);
      sum += v;
      sum_q += std::pow(v, q);
      ++count;
    });
    const double mean = sum / static_cast<double>(count);
    const double mean_q = sum_q / static_cast<double>(count);
    if (!(mean > 0.0)) throw DomainError("weight has zero mean on a cube");
    out.ratios[c] = std::pow(mean_q, 1.0 / q) / mean;
  });
  for (std::size_t c = 0; c < out.ratios.size(); ++c)
    if (out.ratios[c] > out.sup_ratio) {
      out.sup_ratio = out.ratios[c];
      out.worst_index = c;
    }
  return out;
}

ReverseHolderResult reverse_holder_infty_check(const Polynomial& weight, std::span<const Ball> balls,
                                               std::size_t quadrature_n) {
  if (balls.empty()) throw DomainError("reverse Hoelder check needs at least one ball");
  const CompiledPolynomial w(weight);
  const std::size_t d = weight.dimension();
  const std::size_t n = capped_cells(quadrature_n, d);
  ReverseHolderResult out;
  out.ratios.resize(balls.size());
  parallel_for(balls.size(), [&](std::size_t b) {
    const Ball& ball = balls[b];
    if (ball.center.size() != d) throw DimensionError("ball center has wrong length");
    if (!(ball.radius > 0.0)) throw DomainError("ball radius must be positive");
    double sum = 0.0, sup = 0.0;
    std::size_t count = 0;
    for_each_cell(ball.center, ball.radius, n, [&](const Point& p) {
      if (distance(p, ball.center) > ball.radius) return;
      const double v = checked_weight(w, p, 1e-12 * std::max(1.0, sup));
      sup = std::max(sup, v);
      sum += v;
      ++count;
    });
    // cell corners, so that boundary maxima are seen
    const double h = 2.0 * ball.radius / static_cast<double>(n);
    for_each_cell(ball.center, ball.radius + h / 2.0, n + 1, [&](const Point& p) {
      if (distance(p, ball.center) > ball.radius * (1.0 + 1e-12)) return;
      sup = std::max(sup, checked_weight(w, p, 1e-12 * std::max(1.0, sup)));
    });
    if (count == 0 || !(sum > 0.0)) throw DomainError("weight has zero mean on a ball");
    out.ratios[b] = sup / (sum / static_cast<double>(count));
  });
  for (std::size_t b = 0; b < out.ratios.size(); ++b)
    if (out.ratios[b] > out.sup_ratio) {
      out.sup_ratio = out.ratios[b];
      out.worst_index = b;
    }
  return out;
}

nlohmann::json to_json(const CriterionVerdict& v) {
  nlohmann::json j;
  j["holds"] = to_string(v.holds);
  j["C0_estimate"] = std::isfinite(v.c0_estimate) ? nlohmann::json(v.c0_estimate) : nlohmann::json(nullptr);
  j["raw_sup"] = v.raw_sup;
  j["witness"] = v.witness;
  j["sample_region"] = {{"radius", v.sample_region.radius},
                        {"directions", v.sample_region.directions},
                        {"shells_per_doubling", v.sample_region.shells_per_doubling},
                        {"inner_radius", v.sample_region.inner_radius},
                        {"sample_count", v.sample_region.sample_count},
                        {"grid", "origin + geometric radial shells x sphere directions"}};
  if (v.certificate) {
    j["certificate"] = {{"axis", v.certificate->axis + 1},
                        {"numerator_degree", v.certificate->numerator_degree},
                        {"denominator_degree", v.certificate->denominator_degree},
                        {"exponent", v.certificate->exponent}};
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const GrowthResult& g) {
  return {{"grows", g.grows}, {"radii", g.radii}, {"min_by_radius", g.min_by_radius}};
}

} // namespace magspec
