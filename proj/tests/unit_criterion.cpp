#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magspec/criterion.hpp"
#include "magspec/error.hpp"
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

} // namespace

TEST_CASE("weight_mq examples") {
  const double three[] = {3.0};
  const double two[] = {2.0};
  const double ones[] = {1.0, 1.0};
  CHECK(weight_mq(WeightFamily(make(1, {}, {"x1"}, "0"), 1), 0, three) == 3.0);
  CHECK(weight_mq(WeightFamily(make(1, {}, {}, "x1^2"), 1), 1, two) == 4.0);
  CHECK(weight_mq(WeightFamily(make(2, {"-x2*x1^2", "x1*x2^2"}, {}, "0"), 1), 1, ones) == 2.0);
}

TEST_CASE("weight_mr examples against direct summation") {
  const double any[] = {0.7, -2.0};
  CHECK(weight_mr(WeightFamily(PotentialSystem::zero(2), 2), any) == 1.0);

  const PotentialSystem v2 = make(1, {}, {}, "x1^2");
  const Point x{2.0};
  // m^1 = 1 + m_0 + m_1 = 1 + 0 + 4; the value 9 belongs to r = 2 (m_2 = |V'| = 4)
  CHECK(weight_mr(WeightFamily(v2, 1), x) == 5.0);
  CHECK(weight_mr(WeightFamily(v2, 2), x) == 9.0);
  CHECK(oracle::weight_by_definition(v2, 1, x, 1) == 5.0);
  CHECK(oracle::weight_by_definition(v2, 2, x, 2) == 9.0);

  const Point three{3.0};
  CHECK(weight_mr(WeightFamily(make(1, {}, {"x1"}, "0"), 1), three) == 5.0);
}

TEST_CASE("weight_mr agrees with direct summation on random systems") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 1 + rng.index(3);
    const PotentialSystem sys = oracle::random_system(rng, d);
    for (unsigned r = 0; r <= 2; ++r) {
      const WeightFamily w(sys, r);
      Point x(d);
      for (auto& c : x) c = rng.uniform(-4, 4);
      const double direct = oracle::weight_by_definition(sys, r, x, r);
      CHECK(weight_mr(w, x) == doctest::Approx(direct).epsilon(1e-12));
      const double next = oracle::weight_by_definition(sys, r, x, r + 1);
      CHECK(weight_mq(w, r + 1, x) == doctest::Approx(next).epsilon(1e-12));
    }
  }
}

TEST_CASE("smooth_weight_psi examples") {
  const double any[] = {5.0};
  CHECK(smooth_weight_psi(WeightFamily(PotentialSystem::zero(1), 1), any) == 1.0);
  const double three[] = {3.0};
  CHECK(smooth_weight_psi(WeightFamily(make(1, {}, {"x1"}, "0"), 0), three) == 4.0);

  const WeightFamily w(make(1, {}, {}, "x1^2"), 1);
  for (int i = 0; i <= 200; ++i) {
    const double x[] = {-10.0 + 0.1 * i};
    const double ratio = smooth_weight_psi(w, x) / weight_mr(w, x);
    CHECK(ratio >= 1.0 / std::sqrt(3.0) - 1e-12);
    CHECK(ratio <= std::sqrt(3.0) + 1e-12);
  }
}

TEST_CASE("check_tr_membership examples") {
  const CriterionVerdict v1 = check_tr_membership(WeightFamily(make(1, {}, {}, "x1^2"), 1), 64.0, 64);
  CHECK(v1.holds == Verdict::yes);
  // closed-form maximum of 2|x|/(1+x^2) is 1 at |x| = 1
  CHECK(std::abs(v1.raw_sup - 1.0) <= 1e-3);
  CHECK(std::abs(std::abs(v1.witness[0]) - 1.0) <= 1e-2);
  CHECK(v1.c0_estimate == doctest::Approx(1.1).epsilon(1e-3));

  const CriterionVerdict v2 = check_tr_membership(WeightFamily(make(2, {}, {}, "x1*x2"), 1), 64.0, 64);
  CHECK(v2.holds == Verdict::no);
  REQUIRE(v2.certificate.has_value());
  CHECK(v2.certificate->numerator_degree > v2.certificate->exponent * v2.certificate->denominator_degree);
  // along the axis the ratio (|x1|+|x2|)/(1+|x1 x2|) equals R
  const WeightFamily w2(make(2, {}, {}, "x1*x2"), 1);
  const Point on_axis{0.0, 40.0};
  CHECK(weight_mq(w2, 2, on_axis) / weight_mr(w2, on_axis) == doctest::Approx(40.0));

  const CriterionVerdict v3 = check_tr_membership(WeightFamily(make(2, {}, {}, "x1*x2"), 2), 64.0, 64);
  CHECK(v3.holds == Verdict::yes);
  CHECK(std::abs(v3.raw_sup - 1.0) <= 1e-12);
  CHECK(norm(v3.witness) == 0.0);
}

TEST_CASE("check_meftah examples") {
  const WeightFamily w(make(1, {}, {}, "x1^2"), 1);
  const CriterionVerdict plain = check_tr_membership(w, 64.0, 64);
  const CriterionVerdict mef = check_meftah(w, 64.0, 64);
  CHECK(mef.holds == Verdict::yes);
  CHECK(mef.c0_estimate < plain.c0_estimate);
  CHECK(meftah_delta(1) == 1.0);
  CHECK(meftah_delta(2) == doctest::Approx(0.2));
  CHECK_THROWS(meftah_delta(0));

  const CriterionVerdict zero = check_meftah(WeightFamily(PotentialSystem::zero(2), 1), 16.0, 16);
  CHECK(zero.holds == Verdict::yes);
  CHECK(zero.raw_sup == 0.0);
  CHECK(zero.c0_estimate >= 0.0);

  Rng rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const WeightFamily rw(oracle::random_system(rng, 2), 2);
    if (check_tr_membership(rw, 32.0, 32).holds == Verdict::yes) CHECK(check_meftah(rw, 32.0, 32).holds == Verdict::yes);
  }
}

TEST_CASE("check_growth examples") {
  const std::vector<double> radii{1, 2, 4, 8, 16, 32};
  const GrowthResult g1 = check_growth(WeightFamily(make(1, {}, {"x1"}, "0"), 1), radii);
  CHECK(g1.grows);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(g1.min_by_radius[i] == doctest::Approx(2.0 + radii[i]));
  CHECK_FALSE(check_growth(WeightFamily(make(1, {}, {"1"}, "0"), 1), radii).grows);
  CHECK(check_growth(WeightFamily(make(2, {}, {}, "x1*x2"), 2), radii).grows);
}

TEST_CASE("iwatsuka_average examples") {
  const double origin[] = {0.0};
  CHECK(iwatsuka_average(PotentialSystem::zero(2), std::vector<double>{1.0, 2.0}, 64) == 0.0);
  CHECK(iwatsuka_average(make(1, {}, {"x1"}, "0"), origin, 64) == doctest::Approx(2.0 / 3.0).epsilon(0.01));

  // integral of (x1^2 + x2^2)^2 over B((c,0),1) = 2 pi (c^4/2 + c^2 + 1/6)
  const double c = 10.0;
  const double exact = 2.0 * std::numbers::pi * (std::pow(c, 4) / 2.0 + c * c + 1.0 / 6.0);
  const double value = iwatsuka_average(make(2, {"-x2*x1^2", "x1*x2^2"}, {}, "0"), std::vector<double>{c, 0.0}, 64);
  CHECK(value == doctest::Approx(exact).epsilon(0.01));
  CHECK(value > 1e4);
}

TEST_CASE("reverse Holder checks") {
  const Polynomial one = parse_polynomial("1", 1);
  const Polynomial x2 = parse_polynomial("x1^2", 1);
  const std::vector<Cube> centered{{{0.0}, 1.0}, {{0.0}, 2.0}, {{0.0}, 4.0}};
  CHECK(reverse_holder_check(one, 2.0, centered).sup_ratio == doctest::Approx(1.0));
  const ReverseHolderResult rh = reverse_holder_check(x2, 2.0, centered);
  for (double r : rh.ratios) CHECK(r == doctest::Approx(std::sqrt(9.0 / 5.0)).epsilon(1e-3));
  const std::vector<Cube> far{{{100.0}, 1.0}};
  CHECK(reverse_holder_check(x2, 2.0, far).sup_ratio == doctest::Approx(1.0).epsilon(1e-3));

  const std::vector<Ball> unit{{{0.0}, 1.0}};
  CHECK(reverse_holder_infty_check(one, unit).sup_ratio == doctest::Approx(1.0));
  CHECK(reverse_holder_infty_check(x2, unit).sup_ratio == doctest::Approx(3.0).epsilon(1e-3));
  CHECK(reverse_holder_infty_check(parse_polynomial("x1^4", 1), unit).sup_ratio == doctest::Approx(5.0).epsilon(1e-3));
}
