#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace magspec {

using Rational = mpq_class;

// Exponent vector alpha of a monomial x^alpha (or of a derivative d^alpha).
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t dimension) : entries_(dimension, 0) {}
  MultiIndex(std::initializer_list<unsigned> entries) : entries_(entries) {}
  explicit MultiIndex(std::vector<unsigned> entries) : entries_(std::move(entries)) {}

  // e_j in dimension d.
  static MultiIndex unit(std::size_t dimension, std::size_t j);

  std::size_t dimension() const noexcept { return entries_.size(); }
  unsigned order() const noexcept;
  unsigned operator[](std::size_t i) const { return entries_[i]; }
  unsigned& operator[](std::size_t i) { return entries_[i]; }
  const std::vector<unsigned>& entries() const noexcept { return entries_; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;

private:
  std::vector<unsigned> entries_;
};

// Graded lexicographic order: total degree first, then lexicographic with x1
// most significant.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

// All multi-indices of dimension d and total order q, in descending graded-lex
// order (so (q,0,...) comes first).
std::vector<MultiIndex> multi_indices_of_order(std::size_t dimension, unsigned q);

// Exact multivariate polynomial with rational coefficients over d variables.
// Canonical form: no stored term has a zero coefficient.
class Polynomial {
public:
  using TermMap = std::map<MultiIndex, Rational, GradedLexLess>;

  explicit Polynomial(std::size_t dimension = 1);

  static Polynomial constant(std::size_t dimension, const Rational& c);
  // The coordinate function x_{j+1} (j is 0-based).
  static Polynomial variable(std::size_t dimension, std::size_t j);
  static Polynomial monomial(const MultiIndex& alpha, const Rational& c);

  std::size_t dimension() const noexcept { return dimension_; }
  const TermMap& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  // Total degree; -1 for the zero polynomial.
  int degree() const;
  Rational coefficient(const MultiIndex& alpha) const;

  // Adds c * x^alpha, keeping canonical form.
  void add_term(const MultiIndex& alpha, const Rational& c);

  double eval(std::span<const double> x) const;
  Rational eval_exact(std::span<const Rational> x) const;

  Polynomial derive(const MultiIndex& alpha) const;
  Polynomial derive(std::size_t j) const { return derive(MultiIndex::unit(dimension_, j)); }

  // p(origin + scale * y), computed exactly.
  Polynomial compose_affine(std::span<const Rational> origin, const Rational& scale) const;

  // Degree in t of the univariate restriction t -> p(t e_j); -1 when p vanishes
  // identically on that axis.
  int degree_along_axis(std::size_t j) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(const Rational& c);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const Rational& c) { return a *= c; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  Polynomial operator-() const;
  Polynomial pow(unsigned k) const;

  friend bool operator==(const Polynomial& a, const Polynomial& b) {
    return a.dimension_ == b.dimension_ && a.terms_ == b.terms_;
  }

private:
  void check_same_dimension(const Polynomial& other) const;

  std::size_t dimension_;
  TermMap terms_;
};

// Parses the text form, e.g. "x1^2*x2 - 3/2". Variable indices are 1-based and
// must not exceed `dimension`. Throws ParseError carrying the byte offset.
Polynomial parse_polynomial(std::string_view text, std::size_t dimension);

// Deterministic canonical text form; parse_polynomial inverts it.
std::string to_string(const Polynomial& p);

// Row-major d x d antisymmetric matrix of polynomials B_jk = d_j A_k - d_k A_j.
class MagneticField {
public:
  MagneticField() = default;
  MagneticField(std::size_t dimension, std::vector<Polynomial> entries)
      : dimension_(dimension), entries_(std::move(entries)) {}

  std::size_t dimension() const noexcept { return dimension_; }
  const Polynomial& operator()(std::size_t j, std::size_t k) const {
    return entries_[j * dimension_ + k];
  }

private:
  std::size_t dimension_ = 0;
  std::vector<Polynomial> entries_;
};

MagneticField magnetic_field(std::span<const Polynomial> potential);

// Floating-point snapshot of a Polynomial for hot evaluation loops.
class CompiledPolynomial {
public:
  CompiledPolynomial() = default;
  explicit CompiledPolynomial(const Polynomial& p);

  double operator()(std::span<const double> x) const;
  bool is_zero() const noexcept { return coefficients_.empty(); }

private:
  std::size_t dimension_ = 0;
  std::vector<double> coefficients_;
  std::vector<unsigned> exponents_;
};

// Exact rational with the same value as a finite double.
Rational to_rational(double value);

} // namespace magspec
