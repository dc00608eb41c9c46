#include "magspec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "magspec/criterion.hpp"
#include "magspec/discrete_operator.hpp"
#include "magspec/error.hpp"
#include "magspec/metric.hpp"
#include "magspec/parallel.hpp"
#include "magspec/spectrum.hpp"
#include "magspec/svg.hpp"
#include "magspec/verify.hpp"

namespace magspec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  unsigned workers = 1;
  std::string config;
};

struct Output {
  std::string file;
  std::string anchor;
};

class Run {
public:
  Run(std::string command, const Globals& g, std::ostream& out) : command_(std::move(command)), g_(g), out_(out) {
    fs::create_directories(g_.out_dir);
  }

  void write(const std::string& name, const std::string& content, const std::string& anchor) {
    std::ofstream f(fs::path(g_.out_dir) / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (fs::path(g_.out_dir) / name).string());
    f << content;
    outputs_.push_back({name, anchor});
  }
  void write_json(const std::string& name, const json& j, const std::string& anchor) {
    write(name, j.dump(2) + "\n", anchor);
  }

  void finish(const json& config) {
    json outs = json::array();
    for (const auto& o : outputs_) outs.push_back({{"file", o.file}, {"anchor", o.anchor}});
    const json manifest{{"command", command_},
                        {"seed", g_.seed},
                        {"workers", g_.workers},
                        {"out_dir", g_.out_dir},
                        {"config", config},
                        {"outputs", outs}};
    std::ofstream f(fs::path(g_.out_dir) / (command_ + ".manifest.json"), std::ios::binary);
    f << manifest.dump(2) << "\n";
  }

  std::ostream& out() { return out_; }

private:
  std::string command_;
  Globals g_;
  std::ostream& out_;
  std::vector<Output> outputs_;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

Point broadcast(const std::vector<double>& v, std::size_t d, const char* what) {
  if (v.size() == d) return v;
  if (v.size() == 1) return Point(d, v.front());
  throw DimensionError(std::string(what) + " needs 1 or d values");
}

std::vector<std::size_t> broadcast(const std::vector<std::size_t>& v, std::size_t d, const char* what) {
  if (v.size() == d) return v;
  if (v.size() == 1) return std::vector<std::size_t>(d, v.front());
  throw DimensionError(std::string(what) + " needs 1 or d values");
}

// Options shared by commands that assemble an operator on a box.
struct GridOptions {
  std::vector<double> lo{-8.0};
  std::vector<double> hi{8.0};
  std::vector<std::size_t> n;  // empty: resolution rule

  void add(CLI::App* app) {
    app->add_option("--lo", lo, "box lower corner (1 or d values)")->delimiter(',');
    app->add_option("--hi", hi, "box upper corner (1 or d values)")->delimiter(',');
    app->add_option("--n", n, "interior points per axis (default: resolution rule)")->delimiter(',');
  }

  GridSpec grid(const PotentialSystem& sys) const {
    const std::size_t d = sys.dimension();
    const Point l = broadcast(lo, d, "--lo");
    const Point h = broadcast(hi, d, "--hi");
    if (n.empty()) return default_grid(sys, l, h);
    return GridSpec(l, h, broadcast(n, d, "--n"));
  }

  json resolved(const GridSpec& g) const { return {{"lo", g.lo()}, {"hi", g.hi()}, {"n", g.n()}}; }
};

Box region_box(const std::vector<double>& lo, const std::vector<double>& hi, std::size_t d) {
  return Box{broadcast(lo, d, "--lo"), broadcast(hi, d, "--hi")};
}

int verdict_exit(Verdict v) {
  switch (v) {
    case Verdict::yes: return kSuccess;
    case Verdict::no: return kCriterionNo;
    case Verdict::inconclusive: return kInconclusive;
  }
  return kInconclusive;
}

// check ---------------------------------------------------------------------

struct CheckOptions {
  std::string system;
  unsigned r = 1;
  double radius = 64.0;
  std::size_t directions = 64;
  std::size_t quadrature = 64;
};

int cmd_check(const CheckOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const WeightFamily w(sys, o.r);
  SampleRegion region;
  region.radius = o.radius;
  region.directions = o.directions;
  Run run("check", g, out);

  const CriterionVerdict tr = check_tr_membership(w, region);
  json result{{"system", to_json(sys)}, {"r", o.r}, {"tr_membership", to_json(tr)}};
  if (o.r >= 1) {
    const CriterionVerdict mef = check_meftah(w, region);
    result["meftah"] = to_json(mef);
    result["meftah"]["delta"] = meftah_delta(o.r);
  }
  std::vector<double> radii;
  for (double t = 1.0; t <= o.radius; t *= 2.0) radii.push_back(t);
  result["growth"] = to_json(check_growth(w, radii, o.directions));
  json rays = json::array();
  for (std::size_t j = 0; j < sys.dimension(); ++j) {
    json ray{{"axis", j + 1}, {"t", json::array()}, {"integral", json::array()}};
    for (double t : std::vector<double>{0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
      if (t > o.radius) break;
      Point x(sys.dimension(), 0.0);
      x[j] = t;
      ray["t"].push_back(t);
      ray["integral"].push_back(iwatsuka_average(sys, x, o.quadrature));
    }
    rays.push_back(ray);
  }
  result["iwatsuka_rays"] = rays;
  run.write_json("check.json", result, "class-T(r,C0)-membership; meftah-criterion; growth-of-m^r; iwatsuka-average");
  run.finish({{"system", o.system}, {"r", o.r}, {"radius", o.radius}, {"directions", o.directions},
              {"quadrature", o.quadrature}});

  out << "T(r,C0) membership (r=" << o.r << "): " << to_string(tr.holds);
  if (std::isfinite(tr.c0_estimate)) out << "  C0_estimate=" << num(tr.c0_estimate);
  if (tr.certificate)
    out << "  certificate: axis " << tr.certificate->axis + 1 << " numerator degree "
        << tr.certificate->numerator_degree << " > " << tr.certificate->exponent << " x denominator degree "
        << tr.certificate->denominator_degree;
  out << "\n";
  return verdict_exit(tr.holds);
}

// radius-map / cover ----------------------------------------------------------

struct MetricOptions {
  std::string system;
  unsigned r = 1;
  double mu = 1.0;
  std::vector<double> lo{-20.0};
  std::vector<double> hi{20.0};
  std::size_t points = 0;  // per axis; 0: 401 for d=1, 101 for d=2, 21 otherwise
  double lattice_step = 0.0;
  int k = 1;
  std::size_t random_tests = 20;

  std::size_t per_axis(std::size_t d) const {
    if (points) return points;
    return d == 1 ? 401 : d == 2 ? 101 : 21;
  }
};

int cmd_radius_map(const MetricOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const std::size_t d = sys.dimension();
  const MetricField m(std::make_shared<WeightFamily>(sys, o.r), o.mu);
  const Box box = region_box(o.lo, o.hi, d);
  const std::size_t per_axis = o.per_axis(d);
  const auto pts = box_lattice(box, per_axis);
  std::vector<double> rs(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) { rs[i] = m.radius(pts[i]); });

  Run run("radius-map", g, out);
  std::string csv;
  for (std::size_t j = 0; j < d; ++j) csv += "x" + std::to_string(j + 1) + ",";
  csv += "R\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (double c : pts[i]) csv += num(c) + ",";
    csv += num(rs[i]) + "\n";
  }
  run.write("radius_map.csv", csv, "slowly-varying-metric");
  if (d == 1) {
    svg::Series s{"R(x, mu)", {}, rs, false};
    for (const auto& p : pts) s.x.push_back(p[0]);
    run.write("radius_map.svg", svg::line_plot({s}, "metric length scale R(x, mu=" + num(o.mu) + ")", "x1", "R"),
              "slowly-varying-metric");
  } else if (d == 2) {
    // box_lattice runs the last axis fastest; the heatmap wants x1 fastest
    svg::Field f{per_axis, per_axis, box.lo[0], box.hi[0], box.lo[1], box.hi[1], std::vector<double>(rs.size())};
    for (std::size_t a = 0; a < per_axis; ++a)
      for (std::size_t b = 0; b < per_axis; ++b) f.values[b * per_axis + a] = rs[a * per_axis + b];
    run.write("radius_map.svg", svg::heatmap(f, "metric length scale R(x, mu=" + num(o.mu) + ")"),
              "slowly-varying-metric");
  }
  const double lo_r = *std::min_element(rs.begin(), rs.end());
  const double hi_r = *std::max_element(rs.begin(), rs.end());
  run.write_json("radius_map.json", {{"points", pts.size()}, {"min_R", lo_r}, {"max_R", hi_r}, {"mu", o.mu}, {"r", o.r}},
                 "slowly-varying-metric");
  run.finish({{"system", o.system}, {"r", o.r}, {"mu", o.mu}, {"lo", box.lo}, {"hi", box.hi}, {"points", per_axis}});
  out << "R(x, mu) over " << pts.size() << " points: min " << num(lo_r) << ", max " << num(hi_r) << "\n";
  return kSuccess;
}

int cmd_cover(const MetricOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const std::size_t d = sys.dimension();
  const MetricField m(std::make_shared<WeightFamily>(sys, o.r), o.mu);
  const Box box = region_box(o.lo, o.hi, d);
  Run run("cover", g, out);
  const json config{{"system", o.system}, {"r", o.r}, {"mu", o.mu}, {"lo", box.lo}, {"hi", box.hi},
                    {"lattice_step", o.lattice_step}, {"k", o.k}, {"points", o.per_axis(d)},
                    {"random_tests", o.random_tests}};
  try {
    const Cover cover = build_cover(m, box, CoverOptions{o.lattice_step});
    const PartitionOfUnity p = build_partition(cover);
    const auto pts = box_lattice(box, o.per_axis(d));
    const PartitionReport report = verify_partition(p, m, pts, o.k, o.random_tests, g.seed);
    const SlowVariationResult slow = verify_slow_variation(m, box, 2000, g.seed);

    std::string csv;
    for (std::size_t j = 0; j < d; ++j) csv += "x" + std::to_string(j + 1) + ",";
    csv += "R\n";
    for (std::size_t i = 0; i < cover.centers.size(); ++i) {
      for (double c : cover.centers[i]) csv += num(c) + ",";
      csv += num(cover.radii[i]) + "\n";
    }
    run.write("cover.csv", csv, "covering-by-metric-balls");
    run.write_json("cover.json",
                   {{"cover", to_json(cover)}, {"partition", to_json(report)}, {"slow_variation", to_json(slow)}},
                   "covering-by-metric-balls; partition-of-unity; slowly-varying-metric");
    if (d == 1) {
      svg::Series s{"R_j at centers", {}, cover.radii, true};
      for (const auto& c : cover.centers) s.x.push_back(c[0]);
      run.write("cover.svg", svg::line_plot({s}, "cover radii (mu=" + num(o.mu) + ")", "x1", "R_j"),
                "covering-by-metric-balls");
    } else if (d == 2) {
      std::vector<svg::Circle> circles;
      for (std::size_t i = 0; i < cover.centers.size(); ++i)
        circles.push_back({cover.centers[i][0], cover.centers[i][1], cover.radii[i]});
      run.write("cover.svg", svg::circles(circles, box.lo[0], box.hi[0], box.lo[1], box.hi[1], "cover balls"),
                "covering-by-metric-balls");
    }
    run.finish(config);
    out << "cover: " << cover.centers.size() << " balls, max overlap " << cover.max_overlap
        << ", max |sum phi^2 - 1| " << num(report.max_residual) << ", support violations "
        << report.support_violations << ", C_hat " << num(report.c_hat) << "\n";
    return kSuccess;
  } catch (const CertificationError& e) {
    json witness{{"error", e.what()}, {"witness", e.witness()}};
    run.write_json("cover.json", witness, "covering-by-metric-balls");
    run.finish(config);
    throw;
  }
}

// spectrum / pseudo / counting ------------------------------------------------

struct SpectrumOptions {
  std::string system;
  GridOptions grid;
  std::size_t k = 6;
  std::string method = "auto";
  std::vector<double> shift{0.0, 0.0};
  std::string export_matrix;
};

int cmd_spectrum(const SpectrumOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const GridSpec grid = o.grid.grid(sys);
  const DiscreteOperator op = assemble(sys, grid);
  if (o.shift.size() != 2) throw InputError("--shift takes re,im");
  const Complex shift(o.shift[0], o.shift[1]);
  std::string method = o.method;
  if (method == "auto") method = op.size() <= kDenseLimit ? "dense" : "sparse";
  SpectrumResult s;
  if (method == "dense") s = eigs_dense(op, o.k);
  else if (method == "sparse") s = eigs_sparse(op, o.k, shift, SparseOptions{30, 400, g.seed});
  else throw InputError("--method must be auto, dense or sparse");

  Run run("spectrum", g, out);
  run.write("spectrum.csv", to_csv(s), "operator-form; spectrum-benchmark");
  json j = to_json(s);
  j["grid"] = o.grid.resolved(grid);
  run.write_json("spectrum.json", j, "operator-form; spectrum-benchmark");
  if (!o.export_matrix.empty()) run.write(o.export_matrix, matrix_market(op.P()), "operator-form");
  run.finish({{"system", o.system}, {"grid", o.grid.resolved(grid)}, {"k", o.k}, {"method", method},
              {"shift", o.shift}, {"export_matrix", o.export_matrix}});
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    out << i << "  " << num(s.eigenvalues[i].real()) << " " << (s.eigenvalues[i].imag() < 0 ? "- " : "+ ")
        << num(std::abs(s.eigenvalues[i].imag())) << "i   residual " << num(s.residuals[i]) << "\n";
  return kSuccess;
}

struct PseudoOptions {
  std::string system;
  GridOptions grid;
  std::vector<double> re{0.0, 20.0};
  std::vector<double> im{0.0, 20.0};
  std::size_t n_re = 41;
  std::size_t n_im = 41;
  std::size_t eigenvalues = 10;
};

int cmd_pseudo(const PseudoOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const GridSpec grid = o.grid.grid(sys);
  const DiscreteOperator op = assemble(sys, grid);
  if (o.re.size() != 2 || o.im.size() != 2) throw InputError("--re and --im take lo,hi");
  const ShiftGrid zs{o.re[0], o.re[1], o.im[0], o.im[1], o.n_re, o.n_im};
  const Pseudospectrum ps = pseudospectrum(op, zs);

  Run run("pseudo", g, out);
  run.write("pseudo.csv", to_csv(ps), "non-normality-pseudospectrum");
  std::vector<svg::Marker> markers;
  json eig = json::array();
  if (o.eigenvalues > 0 && op.size() <= kDenseLimit) {
    const SpectrumResult s = eigs_dense(op, std::min(o.eigenvalues, op.size()));
    for (const auto& z : s.eigenvalues) {
      markers.push_back({z.real(), z.imag()});
      eig.push_back({{"re", z.real()}, {"im", z.imag()}});
    }
  }
  svg::Field f{o.n_re, o.n_im, o.re[0], o.re[1], o.im[0], o.im[1], ps.smin};
  std::vector<double> levels;
  for (int e = -10; e <= 1; ++e) levels.push_back(e);
  run.write("pseudo.svg", svg::contour(f, levels, "log10 smallest singular value of P - z", markers),
            "non-normality-pseudospectrum");
  const auto minmax = std::minmax_element(ps.smin.begin(), ps.smin.end());
  run.write_json("pseudo.json",
                 {{"grid", o.grid.resolved(grid)},
                  {"shifts", {{"re", o.re}, {"im", o.im}, {"n_re", o.n_re}, {"n_im", o.n_im}}},
                  {"smin_min", *minmax.first},
                  {"smin_max", *minmax.second},
                  {"eigenvalues", eig}},
                 "non-normality-pseudospectrum");
  run.finish({{"system", o.system}, {"grid", o.grid.resolved(grid)}, {"re", o.re}, {"im", o.im},
              {"n_re", o.n_re}, {"n_im", o.n_im}, {"eigenvalues", o.eigenvalues}});
  out << "pseudospectrum on " << ps.smin.size() << " shifts: smin in [" << num(*minmax.first) << ", "
      << num(*minmax.second) << "]\n";
  return kSuccess;
}

struct CountingOptions {
  std::string system;
  double lambda = 10.0;
  std::vector<double> boxes{8.0, 12.0, 16.0};
  double n_per_unit = 16.0;
};

int cmd_counting(const CountingOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const CountingResult c = counting_growth(sys, o.lambda, o.boxes, o.n_per_unit);
  Run run("counting", g, out);
  run.write_json("counting.json", to_json(c), "compact-resolvent-counting-proxy");
  std::string csv = "L,n,count,method\n";
  for (std::size_t i = 0; i < c.counts.size(); ++i)
    csv += num(c.box_sizes[i]) + "," + std::to_string(c.grid_points[i]) + "," + std::to_string(c.counts[i]) + "," +
           c.methods[i] + "\n";
  run.write("counting.csv", csv, "compact-resolvent-counting-proxy");
  std::vector<double> counts(c.counts.begin(), c.counts.end());
  run.write("counting.svg",
            svg::line_plot({{"N_L(" + num(o.lambda) + ")", c.box_sizes, counts, true}}, "eigenvalue counts",
                           "box size L", "count"),
            "compact-resolvent-counting-proxy");
  run.finish({{"system", o.system}, {"lambda", o.lambda}, {"boxes", o.boxes}, {"n_per_unit", o.n_per_unit}});
  for (std::size_t i = 0; i < c.counts.size(); ++i)
    out << "L=" << num(c.box_sizes[i]) << "  count=" << c.counts[i] << "\n";
  out << (c.stabilized ? "stabilized" : "not stabilized") << "\n";
  return kSuccess;
}

// verify ------------------------------------------------------------------------

struct VerifyOptions {
  std::string system;
  unsigned r = 1;
  double delta = 0.0;  // 0: 2^(-r)
  std::vector<double> boxes{8.0, 12.0};
  std::vector<std::size_t> n;
  std::size_t tests = 100;
  std::string recipe = "gaussian-mix";
  std::size_t refine = 4;
  double tolerance = 0.25;
  double mu = 1.0;
  std::vector<double> center;
  std::size_t local_n = 0;  // 0: 65 per axis in 1D, 33 in 2D, 17 otherwise
};

struct BoxRun {
  std::vector<InequalityReport> reports;
};

BoxRun verify_on_box(const PotentialSystem& sys, const std::shared_ptr<const WeightFamily>& w, double half,
                     const VerifyOptions& o, double delta, std::uint64_t seed) {
  const std::size_t d = sys.dimension();
  const Point lo(d, -half), hi(d, half);
  const GridSpec grid = o.n.empty() ? default_grid(sys, lo, hi) : GridSpec(lo, hi, broadcast(o.n, d, "--n"));
  const DiscreteOperator op = assemble(sys, grid);
  const MetricField metric(w, 1.0);
  TestOptions topt;
  topt.seed = seed;
  topt.importance = [&](const Point& x) { return weight_mr(*w, x); };
  topt.length_scale = [&](const Point& x) { return metric.radius(x); };
  const TestFunctionSet tests = gen_tests(grid, o.tests, parse_recipe(o.recipe), topt);
  const Refinement ref{o.refine, 600};
  BoxRun out;
  out.reports.push_back(test_energy_identity(op, tests));
  out.reports.push_back(test_weighted_estimate(*w, delta, op, tests, ref));
  out.reports.push_back(test_maximal_W(*w, op, tests, ref));
  out.reports.push_back(test_second_order(sys, op, tests, ref));
  for (auto& r : test_commutators(*w, op, tests, ref)) out.reports.push_back(std::move(r));
  return out;
}

int cmd_verify(const VerifyOptions& o, const Globals& g, std::ostream& out) {
  const PotentialSystem sys = load_system(o.system);
  const std::size_t d = sys.dimension();
  const auto w = std::make_shared<const WeightFamily>(sys, o.r);
  const double delta = o.delta > 0.0 ? o.delta : std::ldexp(1.0, -static_cast<int>(o.r));
  if (o.boxes.size() != 2 || !(o.boxes[1] > o.boxes[0])) throw InputError("--boxes takes two increasing half-widths");

  const BoxRun small = verify_on_box(sys, w, o.boxes[0], o, delta, g.seed);
  const BoxRun large = verify_on_box(sys, w, o.boxes[1], o, delta, g.seed);
  std::vector<InequalityReport> reports = small.reports;
  for (auto& r : reports) {
    const auto it = std::find_if(large.reports.begin(), large.reports.end(),
                                 [&](const InequalityReport& x) { return x.name == r.name; });
    if (it != large.reports.end()) r.stability = compare_boxes(r, *it, o.tolerance);
  }

  json result{{"system", to_json(sys)}, {"r", o.r}, {"delta", delta}, {"boxes", o.boxes}, {"seed", g.seed}};
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  result["reports"] = arr;
  json large_arr = json::array();
  for (const auto& r : large.reports) large_arr.push_back(to_json(r));
  result["reports_large_box"] = large_arr;

  if (!o.center.empty()) {
    const Point c = broadcast(o.center, d, "--center");
    const std::size_t n = o.local_n ? o.local_n : (d == 1 ? 65 : d == 2 ? 33 : 17);
    TestOptions topt;
    topt.seed = g.seed;
    topt.support_radius = 1.0;
    topt.support_center = Point(d, 0.0);
    topt.margin = 0;
    const TestFunctionSet tests = gen_tests(localized_grid(d, n), o.tests, Recipe::localized_bump, topt);
    const LocalizedSweep sweep = localized_sweep(w, c, {o.mu, 2.0 * o.mu, 4.0 * o.mu, 8.0 * o.mu}, tests);
    result["localized_sweep"] = to_json(sweep);
  }

  Run run("verify", g, out);
  run.write_json("verify.json", result,
                 "interpolation-inequality; weighted-m^r-estimate; maximal-|W|-estimate; "
                 "second-order-maximal-estimate; commutator-membership; localized-lower-bound");
  std::vector<InequalityReport> all = reports;
  for (auto r : large.reports) {
    r.name += " (large box)";
    all.push_back(std::move(r));
  }
  run.write("verify_ratios.csv", ratios_csv(all), "verify-ratios");
  run.finish({{"system", o.system}, {"r", o.r}, {"delta", delta}, {"boxes", o.boxes}, {"n", o.n},
              {"tests", o.tests}, {"recipe", o.recipe}, {"refine", o.refine}, {"tolerance", o.tolerance},
              {"mu", o.mu}, {"center", o.center}, {"local_n", o.local_n}});

  out << std::left << std::setw(28) << "inequality" << std::setw(16) << "constant" << std::setw(8) << "worst"
      << std::setw(12) << "large box" << "status\n";
  for (const auto& r : reports) {
    std::string status = r.stability ? (r.stability->stable ? "stable" : "unstable") : "-";
    for (const auto& l : r.labels) status += " [" + l + "]";
    std::ostringstream c1, c2;
    c1 << std::setprecision(6) << r.constant_estimate;
    c2 << std::setprecision(6) << (r.stability ? r.stability->other_constant : 0.0);
    out << std::left << std::setw(28) << r.name << std::setw(16) << c1.str() << std::setw(8) << r.worst_witness
        << std::setw(12) << c2.str() << status << "\n";
  }
  return kSuccess;
}

// report --------------------------------------------------------------------------

int cmd_report(const Globals& g, std::ostream& out) {
  if (!fs::is_directory(g.out_dir)) throw InputError("output directory '" + g.out_dir + "' does not exist");
  std::vector<fs::path> manifests;
  for (const auto& e : fs::directory_iterator(g.out_dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 14 && name.substr(name.size() - 14) == ".manifest.json") manifests.push_back(e.path());
  }
  std::sort(manifests.begin(), manifests.end());
  json summary = json::array();
  std::ostringstream md;
  md << "# Run report\n\n| command | output | anchor |\n|---|---|---|\n";
  for (const auto& p : manifests) {
    std::ifstream f(p);
    json m;
    try {
      f >> m;
    } catch (const json::exception& e) {
      throw InputError("malformed manifest " + p.string() + ": " + e.what());
    }
    summary.push_back(m);
    for (const auto& o : m.value("outputs", json::array()))
      md << "| " << m.value("command", "") << " | " << o.value("file", "") << " | " << o.value("anchor", "") << " |\n";
  }
  {
    std::ofstream f(fs::path(g.out_dir) / "report.json", std::ios::binary);
    f << json{{"manifests", summary}}.dump(2) << "\n";
    std::ofstream m(fs::path(g.out_dir) / "report.md", std::ios::binary);
    m << md.str();
  }
  out << "collected " << manifests.size() << " manifests into " << (fs::path(g.out_dir) / "report.md").string() << "\n";
  return kSuccess;
}

bool given(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::any_of(args.begin(), args.end(),
                     [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

} // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw InputError("cannot open config file '" + path + "'");
  json cfg;
  try {
    f >> cfg;
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed config JSON: ") + e.what());
  }
  if (!cfg.is_object()) throw InputError("config file must hold a JSON object");
  std::vector<std::string> out = args;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "config" || given(args, key)) continue;
    std::string text;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + scalar_text(value[i]);
    } else {
      text = scalar_text(value);
    }
    out.push_back("--" + key + "=" + text);
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Globals g;
  CLI::App app{"magspec: criteria, metrics, operators and inequality checks for polynomial magnetic "
               "Schroedinger-type operators with complex potentials"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--workers", g.workers, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "JSON file of option values");

  CheckOptions check;
  auto* c_check = app.add_subcommand("check", "criteria verdicts for a system");
  c_check->add_option("--system", check.system, "system JSON file")->required();
  c_check->add_option("--r", check.r, "level r")->capture_default_str();
  c_check->add_option("--radius", check.radius, "sampling radius")->capture_default_str();
  c_check->add_option("--directions", check.directions, "sphere directions")->capture_default_str();
  c_check->add_option("--quadrature", check.quadrature, "cells per axis for ball integrals")->capture_default_str();

  MetricOptions rmap;
  MetricOptions cov;
  auto add_metric = [](CLI::App* sub, MetricOptions& m) {
    sub->add_option("--system", m.system, "system JSON file")->required();
    sub->add_option("--r", m.r, "level r")->capture_default_str();
    sub->add_option("--mu", m.mu, "metric parameter mu >= 1")->capture_default_str();
    sub->add_option("--lo", m.lo, "region lower corner")->delimiter(',');
    sub->add_option("--hi", m.hi, "region upper corner")->delimiter(',');
    sub->add_option("--points", m.points, "evaluation points per axis");
  };
  auto* c_rmap = app.add_subcommand("radius-map", "metric length scale R(x, mu) on a box");
  add_metric(c_rmap, rmap);
  auto* c_cover = app.add_subcommand("cover", "ball covering and partition of unity");
  add_metric(c_cover, cov);
  c_cover->add_option("--lattice-step", cov.lattice_step, "candidate lattice step (0: automatic)");
  c_cover->add_option("--k", cov.k, "localization exponent (1 or 2)")->capture_default_str();
  c_cover->add_option("--random-tests", cov.random_tests, "random functions for the localization constant");

  SpectrumOptions spec;
  auto* c_spec = app.add_subcommand("spectrum", "low-lying eigenvalues of the discretized operator");
  c_spec->add_option("--system", spec.system, "system JSON file")->required();
  spec.grid.add(c_spec);
  c_spec->add_option("--k", spec.k, "number of eigenvalues")->capture_default_str();
  c_spec->add_option("--method", spec.method, "auto, dense or sparse")->capture_default_str();
  c_spec->add_option("--shift", spec.shift, "shift re,im for the sparse solver")->delimiter(',');
  c_spec->add_option("--export-matrix", spec.export_matrix, "write P in coordinate format to this file name");

  PseudoOptions pseudo;
  auto* c_pseudo = app.add_subcommand("pseudo", "smallest singular values of P - z on a shift grid");
  c_pseudo->add_option("--system", pseudo.system, "system JSON file")->required();
  pseudo.grid.add(c_pseudo);
  c_pseudo->add_option("--re", pseudo.re, "real range lo,hi")->delimiter(',');
  c_pseudo->add_option("--im", pseudo.im, "imaginary range lo,hi")->delimiter(',');
  c_pseudo->add_option("--n-re", pseudo.n_re, "real grid count")->capture_default_str();
  c_pseudo->add_option("--n-im", pseudo.n_im, "imaginary grid count")->capture_default_str();
  c_pseudo->add_option("--eigenvalues", pseudo.eigenvalues, "eigenvalues to overlay (dense sizes only)");

  CountingOptions count;
  auto* c_count = app.add_subcommand("counting", "eigenvalue counts below a threshold on growing boxes");
  c_count->add_option("--system", count.system, "system JSON file")->required();
  c_count->add_option("--lambda", count.lambda, "threshold on Re(lambda)")->capture_default_str();
  c_count->add_option("--boxes", count.boxes, "increasing box sizes L")->delimiter(',');
  c_count->add_option("--n-per-unit", count.n_per_unit, "grid points per unit length")->capture_default_str();

  VerifyOptions ver;
  auto* c_ver = app.add_subcommand("verify", "estimate inequality constants on two boxes");
  c_ver->add_option("--system", ver.system, "system JSON file")->required();
  c_ver->add_option("--r", ver.r, "level r")->capture_default_str();
  c_ver->add_option("--delta", ver.delta, "exponent delta (default 2^-r)");
  c_ver->add_option("--boxes", ver.boxes, "two half-widths of the boxes [-L, L]^d")->delimiter(',');
  c_ver->add_option("--n", ver.n, "interior points per axis (default: resolution rule)")->delimiter(',');
  c_ver->add_option("--tests", ver.tests, "test functions per box")->capture_default_str();
  c_ver->add_option("--recipe", ver.recipe, "gaussian-mix, localized-bump or low-freq")->capture_default_str();
  c_ver->add_option("--refine", ver.refine, "local maximization starts")->capture_default_str();
  c_ver->add_option("--tolerance", ver.tolerance, "relative change allowed between boxes")->capture_default_str();
  c_ver->add_option("--mu", ver.mu, "first mu of the localized sweep")->capture_default_str();
  c_ver->add_option("--center", ver.center, "center of the localized bound (enables it)")->delimiter(',');
  c_ver->add_option("--local-n", ver.local_n, "grid points per axis on the rescaled unit box");

  auto* c_report = app.add_subcommand("report", "collect manifests of the output directory");

  try {
    // config keys only for options the chosen subcommand (or the app) knows
    std::vector<std::string> args = expand_config(raw_args);
    CLI::App* chosen = nullptr;
    for (const auto& a : raw_args)
      for (auto* sub : app.get_subcommands({}))
        if (sub->get_name() == a) chosen = sub;
    std::vector<std::string> filtered;
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i >= raw_args.size()) {
        const std::string key = args[i].substr(2, args[i].find('=') - 2);
        const bool known = app.get_option_no_throw("--" + key) != nullptr ||
                           (chosen && chosen->get_option_no_throw("--" + key) != nullptr);
        if (!known) {
          bool elsewhere = false;
          for (auto* sub : app.get_subcommands({}))
            if (sub->get_option_no_throw("--" + key) != nullptr) elsewhere = true;
          if (!elsewhere) throw InputError("unknown config key '" + key + "'");
          continue;
        }
      }
      filtered.push_back(args[i]);
    }
    std::reverse(filtered.begin(), filtered.end());
    app.parse(filtered);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }

  try {
    set_worker_count(g.workers);
    if (*c_check) return cmd_check(check, g, out);
    if (*c_rmap) return cmd_radius_map(rmap, g, out);
    if (*c_cover) return cmd_cover(cov, g, out);
    if (*c_spec) return cmd_spectrum(spec, g, out);
    if (*c_pseudo) return cmd_pseudo(pseudo, g, out);
    if (*c_count) return cmd_counting(count, g, out);
    if (*c_ver) return cmd_verify(ver, g, out);
    if (*c_report) return cmd_report(g, out);
    return kInputError;
  } catch (const CertificationError& e) {
    err << "certification refused: " << e.what() << " at witness (";
    for (std::size_t i = 0; i < e.witness().size(); ++i) err << (i ? ", " : "") << num(e.witness()[i]);
    err << ")\n";
    return kCertificationRefused;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  }
}

} // namespace magspec::cli
