#include "magspec/potential.hpp"

#include <fstream>

#include "magspec/error.hpp"

namespace magspec {

PotentialSystem::PotentialSystem(std::size_t dimension, std::vector<Polynomial> magnetic_potential,
                                 std::vector<Polynomial> electric_factors,
                                 Polynomial imaginary_potential)
    : dimension_(dimension),
      a_(std::move(magnetic_potential)),
      u_(std::move(electric_factors)),
      v_(std::move(imaginary_potential)) {
  if (dimension_ == 0) throw DimensionError("system dimension must be positive");
  if (a_.empty()) a_.assign(dimension_, Polynomial(dimension_));
  if (a_.size() != dimension_) throw DimensionError("magnetic potential must have d components");
  for (const auto& p : a_)
    if (p.dimension() != dimension_) throw DimensionError("magnetic potential component has wrong dimension");
  for (const auto& p : u_)
    if (p.dimension() != dimension_) throw DimensionError("electric factor has wrong dimension");
  if (v_.dimension() != dimension_) throw DimensionError("imaginary potential has wrong dimension");
  b_ = magnetic_field(a_);
}

PotentialSystem PotentialSystem::zero(std::size_t dimension) {
  return PotentialSystem(dimension, {}, {}, Polynomial(dimension));
}

bool PotentialSystem::has_magnetic_potential() const {
  for (const auto& p : a_)
    if (!p.is_zero()) return true;
  return false;
}

double PotentialSystem::real_potential(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& p : u_) {
    const double value = p.eval(x);
    sum += value * value;
  }
  return sum;
}

PotentialSystem PotentialSystem::localize(std::span<const double> center, double scale) const {
  if (center.size() != dimension_) throw DimensionError("localization center has wrong length");
  std::vector<Rational> origin;
  origin.reserve(dimension_);
  for (double c : center) origin.push_back(to_rational(c));
  const Rational s = to_rational(scale);
  auto rescale = [&](const Polynomial& p, const Rational& factor) {
    return p.compose_affine(origin, s) * factor;
  };
  std::vector<Polynomial> a;
  for (const auto& p : a_) a.push_back(rescale(p, s));
  std::vector<Polynomial> u;
  for (const auto& p : u_) u.push_back(rescale(p, s));
  return PotentialSystem(dimension_, std::move(a), std::move(u), rescale(v_, s * s));
}

PotentialSystem system_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("system JSON must be an object");
  if (!j.contains("d") || !j["d"].is_number_integer() || j["d"].get<long>() <= 0)
    throw InputError("system JSON needs a positive integer field \"d\"");
  const auto d = j["d"].get<std::size_t>();
  auto parse_list = [&](const char* key) {
    std::vector<Polynomial> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) throw InputError(std::string("field \"") + key + "\" must be an array");
    for (const auto& item : j[key]) {
      if (!item.is_string()) throw InputError(std::string("field \"") + key + "\" must hold strings");
      out.push_back(parse_polynomial(item.get<std::string>(), d));
    }
    return out;
  };
  std::vector<Polynomial> a = parse_list("A");
  std::vector<Polynomial> u = parse_list("U");
  Polynomial v(d);
  if (j.contains("V")) {
    if (!j["V"].is_string()) throw InputError("field \"V\" must be a string");
    v = parse_polynomial(j["V"].get<std::string>(), d);
  }
  return PotentialSystem(d, std::move(a), std::move(u), std::move(v));
}

nlohmann::json to_json(const PotentialSystem& sys) {
  nlohmann::json j;
  j["d"] = sys.dimension();
  j["A"] = nlohmann::json::array();
  for (const auto& p : sys.magnetic_potential()) j["A"].push_back(to_string(p));
  j["U"] = nlohmann::json::array();
  for (const auto& p : sys.electric_factors()) j["U"].push_back(to_string(p));
  j["V"] = to_string(sys.imaginary_potential());
  return j;
}

PotentialSystem load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open system file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("malformed system JSON in '" + path + "': " + e.what());
  }
  return system_from_json(j);
}

} // namespace magspec
