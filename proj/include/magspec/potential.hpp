#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "magspec/polynomial.hpp"

namespace magspec {

// The data (d, A, {U_l}, V) of P = sum_j (D_j - A_j)^2 + sum_l U_l^2 + i V.
// The magnetic field is derived at construction and never stored stale.
class PotentialSystem {
public:
  PotentialSystem(std::size_t dimension, std::vector<Polynomial> magnetic_potential,
                  std::vector<Polynomial> electric_factors, Polynomial imaginary_potential);

  // A system with A = 0, no U_l and V = 0.
  static PotentialSystem zero(std::size_t dimension);

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<Polynomial>& magnetic_potential() const noexcept { return a_; }
  const std::vector<Polynomial>& electric_factors() const noexcept { return u_; }
  const Polynomial& imaginary_potential() const noexcept { return v_; }
  const MagneticField& field() const noexcept { return b_; }

  bool has_magnetic_potential() const;

  // U(x) = sum_l U_l(x)^2 and V(x).
  double real_potential(std::span<const double> x) const;
  double imag_potential(std::span<const double> x) const { return v_.eval(x); }

  // The system seen at scale `scale` around `center`:
  //   A_loc(y) = s A(c + s y), U_loc(y) = s U_l(c + s y), V_loc(y) = s^2 V(c + s y).
  // Exact in rational arithmetic (the doubles are converted exactly).
  PotentialSystem localize(std::span<const double> center, double scale) const;

private:
  std::size_t dimension_;
  std::vector<Polynomial> a_;
  std::vector<Polynomial> u_;
  Polynomial v_;
  MagneticField b_;
};

// {"d": int, "A": [polystring...], "U": [polystring...], "V": polystring}
// "A" may be omitted (zero potential), as may "U" (empty list) and "V" ("0").
PotentialSystem system_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PotentialSystem& sys);
PotentialSystem load_system(const std::string& path);

} // namespace magspec
