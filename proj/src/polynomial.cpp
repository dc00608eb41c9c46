#include "magspec/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>

#include "magspec/error.hpp"

namespace magspec {

MultiIndex MultiIndex::unit(std::size_t dimension, std::size_t j) {
  MultiIndex e(dimension);
  e[j] = 1;
  return e;
}

unsigned MultiIndex::order() const noexcept {
  return std::accumulate(entries_.begin(), entries_.end(), 0u);
}

bool GradedLexLess::operator()(const MultiIndex& a, const MultiIndex& b) const {
  const unsigned oa = a.order();
  const unsigned ob = b.order();
  if (oa != ob) return oa < ob;
  return a.entries() < b.entries();
}

namespace {

void enumerate_orders(std::size_t pos, unsigned remaining, MultiIndex& current,
                      std::vector<MultiIndex>& out) {
  if (pos + 1 == current.dimension()) {
    current[pos] = remaining;
    out.push_back(current);
    return;
  }
  for (unsigned k = remaining + 1; k-- > 0;) {
    current[pos] = k;
    enumerate_orders(pos + 1, remaining - k, current, out);
  }
  current[pos] = 0;
}

} // namespace

std::vector<MultiIndex> multi_indices_of_order(std::size_t dimension, unsigned q) {
  std::vector<MultiIndex> out;
  if (dimension == 0) return out;
  MultiIndex current(dimension);
  enumerate_orders(0, q, current, out);
  return out;
}

Polynomial::Polynomial(std::size_t dimension) : dimension_(dimension) {
  if (dimension == 0) throw DimensionError("polynomial dimension must be positive");
}

Polynomial Polynomial::constant(std::size_t dimension, const Rational& c) {
  Polynomial p(dimension);
  p.add_term(MultiIndex(dimension), c);
  return p;
}

Polynomial Polynomial::variable(std::size_t dimension, std::size_t j) {
  if (j >= dimension) throw DimensionError("variable index out of range");
  Polynomial p(dimension);
  p.add_term(MultiIndex::unit(dimension, j), Rational(1));
  return p;
}

Polynomial Polynomial::monomial(const MultiIndex& alpha, const Rational& c) {
  Polynomial p(alpha.dimension());
  p.add_term(alpha, c);
  return p;
}

int Polynomial::degree() const {
  if (terms_.empty()) return -1;
  return static_cast<int>(terms_.rbegin()->first.order());
}

Rational Polynomial::coefficient(const MultiIndex& alpha) const {
  auto it = terms_.find(alpha);
  return it == terms_.end() ? Rational(0) : it->second;
}

void Polynomial::add_term(const MultiIndex& alpha, const Rational& c) {
  if (alpha.dimension() != dimension_) throw DimensionError("monomial dimension mismatch");
  Rational v = c;
  v.canonicalize();
  if (v == 0) return;
  auto [it, inserted] = terms_.try_emplace(alpha, v);
  if (!inserted) {
    it->second += v;
    if (it->second == 0) terms_.erase(it);
  }
}

double Polynomial::eval(std::span<const double> x) const {
  if (x.size() != dimension_) throw DimensionError("evaluation point has wrong length");
  double sum = 0.0;
  for (const auto& [alpha, c] : terms_) {
    double m = c.get_d();
    for (std::size_t i = 0; i < dimension_; ++i) {
      // Exponents are small; repeated multiplication is exact enough and
      // avoids pow's slow path.
      for (unsigned k = 0; k < alpha[i]; ++k) m *= x[i];
    }
    sum += m;
  }
  return sum;
}

Rational Polynomial::eval_exact(std::span<const Rational> x) const {
  if (x.size() != dimension_) throw DimensionError("evaluation point has wrong length");
  Rational sum = 0;
  for (const auto& [alpha, c] : terms_) {
    Rational m = c;
    for (std::size_t i = 0; i < dimension_; ++i)
      for (unsigned k = 0; k < alpha[i]; ++k) m *= x[i];
    sum += m;
  }
  return sum;
}

Polynomial Polynomial::derive(const MultiIndex& alpha) const {
  if (alpha.dimension() != dimension_) throw DimensionError("derivative multi-index dimension mismatch");
  Polynomial out(dimension_);
  for (const auto& [beta, c] : terms_) {
    Rational coeff = c;
    MultiIndex gamma = beta;
    bool vanishes = false;
    for (std::size_t i = 0; i < dimension_ && !vanishes; ++i) {
      if (alpha[i] > beta[i]) {
        vanishes = true;
        break;
      }
      for (unsigned k = 0; k < alpha[i]; ++k) coeff *= (beta[i] - k);
      gamma[i] = beta[i] - alpha[i];
    }
    if (!vanishes) out.add_term(gamma, coeff);
  }
  return out;
}

Polynomial Polynomial::compose_affine(std::span<const Rational> origin, const Rational& scale) const {
  if (origin.size() != dimension_) throw DimensionError("affine origin has wrong length");
  // (origin_i + scale * y_i) for each variable, raised to needed powers lazily.
  std::vector<std::vector<Polynomial>> powers(dimension_);
  for (std::size_t i = 0; i < dimension_; ++i) {
    Polynomial lin = constant(dimension_, origin[i]) + variable(dimension_, i) * scale;
    powers[i].push_back(constant(dimension_, 1));
    powers[i].push_back(std::move(lin));
  }
  auto power = [&](std::size_t i, unsigned k) -> const Polynomial& {
    while (powers[i].size() <= k) powers[i].push_back(powers[i].back() * powers[i][1]);
    return powers[i][k];
  };
  Polynomial out(dimension_);
  for (const auto& [alpha, c] : terms_) {
    Polynomial term = constant(dimension_, c);
    for (std::size_t i = 0; i < dimension_; ++i)
      if (alpha[i] > 0) term = term * power(i, alpha[i]);
    out += term;
  }
  return out;
}

int Polynomial::degree_along_axis(std::size_t j) const {
  if (j >= dimension_) throw DimensionError("axis index out of range");
  int deg = -1;
  for (const auto& [alpha, c] : terms_) {
    bool on_axis = true;
    for (std::size_t i = 0; i < dimension_; ++i)
      if (i != j && alpha[i] != 0) on_axis = false;
    if (on_axis) deg = std::max(deg, static_cast<int>(alpha[j]));
  }
  return deg;
}

void Polynomial::check_same_dimension(const Polynomial& other) const {
  if (other.dimension_ != dimension_) throw DimensionError("polynomial dimension mismatch");
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  check_same_dimension(other);
  for (const auto& [alpha, c] : other.terms_) add_term(alpha, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  check_same_dimension(other);
  for (const auto& [alpha, c] : other.terms_) add_term(alpha, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(const Rational& c) {
  if (c == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [alpha, coeff] : terms_) coeff *= c;
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  a.check_same_dimension(b);
  Polynomial out(a.dimension_);
  for (const auto& [alpha, ca] : a.terms_) {
    for (const auto& [beta, cb] : b.terms_) {
      MultiIndex gamma = alpha;
      for (std::size_t i = 0; i < a.dimension_; ++i) gamma[i] += beta[i];
      out.add_term(gamma, ca * cb);
    }
  }
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial out = *this;
  for (auto& [alpha, c] : out.terms_) c = -c;
  return out;
}

Polynomial Polynomial::pow(unsigned k) const {
  Polynomial out = constant(dimension_, 1);
  for (unsigned i = 0; i < k; ++i) out = out * *this;
  return out;
}

// ---------------------------------------------------------------------------
// Text form

namespace {

class Parser {
public:
  Parser(std::string_view text, std::size_t dimension) : text_(text), dimension_(dimension) {}

  Polynomial parse() {
    Polynomial result(dimension_);
    skip_ws();
    if (at_end()) throw ParseError("empty polynomial", pos_);
    bool first = true;
    while (true) {
      skip_ws();
      int sign = 1;
      if (!at_end() && (peek() == '+' || peek() == '-')) {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
        skip_ws();
      } else if (!first) {
        throw ParseError("expected '+' or '-'", pos_);
      }
      parse_term(result, sign);
      first = false;
      skip_ws();
      if (at_end()) break;
    }
    return result;
  }

private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  mpz_class parse_integer() {
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) throw ParseError("expected integer", start);
    return mpz_class(std::string(text_.substr(start, pos_ - start)));
  }

  void parse_term(Polynomial& result, int sign) {
    Rational coeff(sign);
    MultiIndex alpha(dimension_);
    skip_ws();
    if (at_end()) throw ParseError("expected term", pos_);
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      mpz_class num = parse_integer();
      mpz_class den = 1;
      skip_ws();
      if (!at_end() && peek() == '/') {
        ++pos_;
        const std::size_t den_pos = pos_;
        den = parse_integer();
        if (den == 0) throw ParseError("zero denominator", den_pos);
      }
      Rational c(num, den);
      c.canonicalize();
      coeff *= c;
      skip_ws();
      if (at_end() || peek() != '*') {
        result.add_term(alpha, coeff);
        return;
      }
      ++pos_;
      skip_ws();
    }
    parse_factor(alpha);
    while (true) {
      skip_ws();
      if (at_end() || peek() != '*') break;
      ++pos_;
      parse_factor(alpha);
    }
    result.add_term(alpha, coeff);
  }

  void parse_factor(MultiIndex& alpha) {
    skip_ws();
    if (at_end() || peek() != 'x') throw ParseError("expected variable 'x<i>'", pos_);
    ++pos_;
    const std::size_t index_pos = pos_;
    // No whitespace between x and its index.
    std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) throw ParseError("expected variable index", index_pos);
    const unsigned long index = std::stoul(std::string(text_.substr(start, pos_ - start)));
    if (index == 0 || index > dimension_) throw ParseError("variable index out of range", index_pos);
    unsigned long exponent = 1;
    skip_ws();
    if (!at_end() && peek() == '^') {
      ++pos_;
      skip_ws();
      const std::size_t exp_pos = pos_;
      mpz_class e = parse_integer();
      if (!e.fits_uint_p() || e.get_ui() > 1000) throw ParseError("exponent too large", exp_pos);
      exponent = e.get_ui();
    }
    alpha[index - 1] += static_cast<unsigned>(exponent);
  }

  std::string_view text_;
  std::size_t dimension_;
  std::size_t pos_ = 0;
};

} // namespace

Polynomial parse_polynomial(std::string_view text, std::size_t dimension) {
  if (dimension == 0) throw DimensionError("polynomial dimension must be positive");
  return Parser(text, dimension).parse();
}

std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::ostringstream out;
  bool first = true;
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const MultiIndex& alpha = it->first;
    Rational c = it->second;
    const bool negative = c < 0;
    if (negative) c = -c;
    if (first) {
      if (negative) out << '-';
    } else {
      out << (negative ? " - " : " + ");
    }
    first = false;
    const bool constant_term = alpha.order() == 0;
    if (constant_term || c != 1) {
      out << c.get_str();
      if (!constant_term) out << '*';
    }
    bool first_factor = true;
    for (std::size_t i = 0; i < alpha.dimension(); ++i) {
      if (alpha[i] == 0) continue;
      if (!first_factor) out << '*';
      first_factor = false;
      out << 'x' << (i + 1);
      if (alpha[i] != 1) out << '^' << alpha[i];
    }
  }
  return out.str();
}

MagneticField magnetic_field(std::span<const Polynomial> potential) {
  const std::size_t d = potential.size();
  if (d == 0) throw DimensionError("magnetic potential must have at least one component");
  for (const auto& a : potential)
    if (a.dimension() != d) throw DimensionError("magnetic potential component has wrong dimension");
  std::vector<Polynomial> entries(d * d, Polynomial(d));
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = j + 1; k < d; ++k) {
      Polynomial b = potential[k].derive(j) - potential[j].derive(k);
      entries[k * d + j] = -b;
      entries[j * d + k] = std::move(b);
    }
  }
  return MagneticField(d, std::move(entries));
}

CompiledPolynomial::CompiledPolynomial(const Polynomial& p) : dimension_(p.dimension()) {
  for (const auto& [alpha, c] : p.terms()) {
    coefficients_.push_back(c.get_d());
    exponents_.insert(exponents_.end(), alpha.entries().begin(), alpha.entries().end());
  }
}

double CompiledPolynomial::operator()(std::span<const double> x) const {
  double sum = 0.0;
  const unsigned* e = exponents_.data();
  for (double c : coefficients_) {
    double m = c;
    for (std::size_t i = 0; i < dimension_; ++i, ++e)
      for (unsigned k = 0; k < *e; ++k) m *= x[i];
    sum += m;
  }
  return sum;
}

Rational to_rational(double value) {
  if (!std::isfinite(value)) throw DomainError("cannot convert non-finite value to a rational");
  Rational r(value);  // mpq_set_d is exact for binary doubles
  return r;
}

} // namespace magspec
