#include <doctest.h>

#include <cmath>

#include "magspec/error.hpp"
#include "magspec/polynomial.hpp"
#include "magspec/potential.hpp"
#include "oracles.hpp"

using namespace magspec;

TEST_CASE("poly_eval examples") {
  const Polynomial p = parse_polynomial("x1^2 + 1", 1);
  const double x2[] = {2.0};
  CHECK(p.eval(x2) == 5.0);

  const Polynomial zero(3);
  const double x3[] = {0.3, -7.0, 11.0};
  CHECK(zero.eval(x3) == 0.0);

  const Polynomial q = parse_polynomial("x1^2*x2", 2);
  const double y[] = {3.0, -1.0};
  CHECK(q.eval(y) == -9.0);
  const Rational yr[] = {Rational(3), Rational(-1)};
  CHECK(q.eval_exact(yr) == Rational(-9));
}

TEST_CASE("poly_derive examples") {
  const Polynomial p = parse_polynomial("x1^2*x2", 2);
  CHECK(p.derive(MultiIndex{1, 0}) == parse_polynomial("2*x1*x2", 2));
  CHECK(p.derive(MultiIndex{0, 0}) == p);
  CHECK(p.derive(MultiIndex{3, 0}).is_zero());
}

TEST_CASE("mixed partial derivatives commute on random polynomials") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial p = oracle::random_polynomial(rng, 3, 4);
    CHECK(p.derive(0).derive(2) == p.derive(2).derive(0));
    CHECK(p.derive(MultiIndex{1, 0, 1}) == p.derive(0).derive(2));
  }
}

TEST_CASE("compiled evaluation matches exact evaluation") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial p = oracle::random_polynomial(rng, 2, 5);
    const CompiledPolynomial c(p);
    const double x[] = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    const Rational xr[] = {to_rational(x[0]), to_rational(x[1])};
    const double exact = p.eval_exact(xr).get_d();
    CHECK(c(x) == doctest::Approx(exact).epsilon(1e-12));
    CHECK(p.eval(x) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("magnetic field of the typical example") {
  const std::vector<Polynomial> a{parse_polynomial("-x2*x1^2", 2), parse_polynomial("x1*x2^2", 2)};
  const MagneticField b = magnetic_field(a);
  CHECK(b(0, 1) == parse_polynomial("x1^2 + x2^2", 2));
  CHECK(b(1, 0) == -parse_polynomial("x1^2 + x2^2", 2));
  CHECK(b(0, 0).is_zero());

  const std::vector<Polynomial> zero{Polynomial(2), Polynomial(2)};
  CHECK(magnetic_field(zero)(0, 1).is_zero());

  // gauge shift A + grad(x1 x2)
  const Polynomial chi = parse_polynomial("x1*x2", 2);
  const std::vector<Polynomial> shifted{a[0] + chi.derive(0), a[1] + chi.derive(1)};
  CHECK(magnetic_field(shifted)(0, 1) == b(0, 1));
}

TEST_CASE("parse and serialize") {
  const Polynomial p = parse_polynomial("x1^2*x2 - 3/2", 2);
  CHECK(p.terms().size() == 2);
  CHECK(p.coefficient(MultiIndex{2, 1}) == Rational(1));
  CHECK(p.coefficient(MultiIndex{0, 0}) == Rational(-3, 2));
  CHECK(to_string(parse_polynomial("0", 2)) == "0");

  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Polynomial q = oracle::random_polynomial(rng, 3, 3);
    CHECK(parse_polynomial(to_string(q), 3) == q);
  }
}

TEST_CASE("parse errors carry the offset") {
  try {
    parse_polynomial("x1^", 1);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 3);
  }
  CHECK_THROWS_AS(parse_polynomial("x3", 2), ParseError);
}

TEST_CASE("system JSON round trip and validation") {
  const auto j = nlohmann::json::parse(R"({"d": 2, "A": ["0", "x1"], "U": ["x1"], "V": "x1*x2"})");
  const PotentialSystem sys = system_from_json(j);
  CHECK(system_from_json(to_json(sys)).imaginary_potential() == sys.imaginary_potential());
  CHECK(sys.field()(0, 1) == parse_polynomial("1", 2));
  CHECK_THROWS_AS(system_from_json(nlohmann::json::parse(R"({"d": 2, "A": ["x1"]})")), DimensionError);
  CHECK_THROWS_AS(system_from_json(nlohmann::json::parse(R"({"V": "x1"})")), InputError);
}
