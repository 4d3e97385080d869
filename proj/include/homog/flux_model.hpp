#ifndef HOMOG_FLUX_MODEL_HPP
#define HOMOG_FLUX_MODEL_HPP

#include <optional>
#include <string>
#include <variant>

#include <json.hpp>

#include "homog/coefficients.hpp"
#include "homog/common.hpp"

namespace homog {

// Growth exponent, Hölder exponent and the three structure constants of an
// admissible monotone flux map.  gamma is always recomputed from p and alpha.
struct StructureConstants {
  double p = 2.0;
  double alpha = 1.0;
  double c0 = 1.0;
  double c1 = 1.0;
  double c2 = 1.0;

  double gamma() const { return alpha / (p - alpha); }

  void validate() const {
    if (!(p >= 2.0) || !std::isfinite(p)) throw ConfigError("structure constants: p must satisfy 2 <= p < inf");
    if (!(alpha > 0.0) || !(alpha <= 1.0)) throw ConfigError("structure constants: alpha must lie in (0, 1]");
    if (!(c0 > 0.0) || !(c1 > 0.0) || !(c2 > 0.0))
      throw ConfigError("structure constants: c0, c1, c2 must be positive");
  }
};

// Modulus-of-continuity bound in time, omega(h) = constant * |h|.
struct TimeModulus {
  double lipschitz_constant = 0.0;
  double eval(double h) const { return lipschitz_constant * std::abs(h); }
};

enum class FluxFamily { linear, p_laplacian, checkerboard };

inline std::string family_name(FluxFamily f) {
  switch (f) {
    case FluxFamily::linear: return "linear";
    case FluxFamily::p_laplacian: return "p_laplacian";
    case FluxFamily::checkerboard: return "checkerboard";
  }
  return "?";
}

// A monotone flux map a(y, tau, xi), periodic in the unit space-time cell.
//
// Built-in families:
//   linear        a = c1(y) c2(tau) xi                (p = 2)
//   p_laplacian   a = c1(y) c2(tau) |xi|^(p-2) xi
//   checkerboard  a = c(y, tau) |xi|^(p-2) xi with piecewise-constant c
template <int N>
class FluxModel {
 public:
  FluxModel(FluxFamily family, StructureConstants sc, SeparableCoefficient<N> coeff,
            std::optional<TimeModulus> modulus = std::nullopt)
      : family_(family), constants_(sc), coeff_(std::move(coeff)), modulus_(modulus) {
    validate();
  }

  FluxModel(FluxFamily family, StructureConstants sc, CheckerboardCoefficient<N> coeff,
            std::optional<TimeModulus> modulus = std::nullopt)
      : family_(family), constants_(sc), coeff_(std::move(coeff)), modulus_(modulus) {
    validate();
  }

  FluxFamily family() const { return family_; }
  const StructureConstants& constants() const { return constants_; }
  double p() const { return constants_.p; }
  const std::optional<TimeModulus>& time_modulus() const { return modulus_; }

  // Scalar coefficient at an (already wrapped) cell point.
  double coefficient(const Vec<N>& y, double tau) const {
    return std::visit([&](const auto& c) { return c.eval(y, tau); }, coeff_);
  }

  // Flux evaluation with periodic wrapping; no input checks (hot path).
  Vec<N> eval(const Vec<N>& y, double tau, const Vec<N>& xi) const {
    double c = coefficient(wrap_unit(y), wrap_unit(tau));
    return p_power(xi, constants_.p) * c;
  }

  // Public operation: validates inputs, then evaluates.
  Vec<N> eval_flux(const Vec<N>& y, double tau, const Vec<N>& xi) const {
    if (!y.finite() || !std::isfinite(tau) || !xi.finite())
      throw std::invalid_argument("eval_flux: non-finite input");
    return eval(y, tau, xi);
  }

  bool linear_in_xi() const { return constants_.p == 2.0; }

  bool time_dependent() const {
    return std::visit([](const auto& c) { return c.time_dependent(); }, coeff_);
  }

  double coefficient_lower_bound() const {
    return std::visit([](const auto& c) { return c.lower_bound(); }, coeff_);
  }
  double coefficient_upper_bound() const {
    return std::visit([](const auto& c) { return c.upper_bound(); }, coeff_);
  }

  const SeparableCoefficient<N>* separable() const {
    return std::get_if<SeparableCoefficient<N>>(&coeff_);
  }
  const CheckerboardCoefficient<N>* checkerboard() const {
    return std::get_if<CheckerboardCoefficient<N>>(&coeff_);
  }

  nlohmann::json to_json() const;
  static FluxModel<N> from_json(const nlohmann::json& j);

  // Content hash over the canonical serialization, for table provenance.
  std::uint64_t hash() const {
    std::string s = to_json().dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  void validate() const {
    constants_.validate();
    if (family_ == FluxFamily::linear && constants_.p != 2.0)
      throw ConfigError("linear flux family requires p = 2");
    if (coefficient_lower_bound() <= 0.0)
      throw ConfigError("flux coefficient must be bounded below by a positive constant");
    if (const auto* cb = checkerboard()) {
      if (cb->k_space < 1 || cb->k_time < 1) throw ConfigError("checkerboard sub-lattice sizes must be >= 1");
      if (static_cast<int>(cb->values.size()) != cb->cell_count())
        throw ConfigError("checkerboard value table has wrong length");
    }
  }

  FluxFamily family_;
  StructureConstants constants_;
  std::variant<SeparableCoefficient<N>, CheckerboardCoefficient<N>> coeff_;
  std::optional<TimeModulus> modulus_;
};

// ---------------------------------------------------------------------------
// JSON serialization.  Top-level keys are fixed:
//   family, p, alpha, c0, c1, c2, coefficients, time_modulus
// The coefficients object is family-specific and carries the dimension.

namespace detail {

template <int N>
nlohmann::json spatial_to_json(const SpatialCoefficient<N>& c) {
  if (c.constant()) return {{"type", "constant"}, {"value", c.base}};
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : c.modes) {
    nlohmann::json k = nlohmann::json::array();
    for (int i = 0; i < N; ++i) k.push_back(m.k[i]);
    modes.push_back({{"k", k}, {"cos", m.cos_amp}, {"sin", m.sin_amp}});
  }
  return {{"type", "fourier"}, {"base", c.base}, {"modes", modes}};
}

inline nlohmann::json temporal_to_json(const TemporalCoefficient& c) {
  if (c.constant()) return {{"type", "constant"}, {"value", c.base}};
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : c.modes) modes.push_back({{"k", m.k[0]}, {"cos", m.cos_amp}, {"sin", m.sin_amp}});
  return {{"type", "fourier"}, {"base", c.base}, {"modes", modes}};
}

template <int N>
SpatialCoefficient<N> spatial_from_json(const nlohmann::json& j) {
  SpatialCoefficient<N> c;
  std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    c.base = j.at("value").get<double>();
    return c;
  }
  if (type != "fourier") throw ConfigError("spatial coefficient type must be 'constant' or 'fourier'");
  c.base = j.at("base").get<double>();
  for (const auto& jm : j.at("modes")) {
    FourierMode<N> m;
    const auto& k = jm.at("k");
    if (static_cast<int>(k.size()) != N) throw ConfigError("fourier mode frequency vector has wrong length");
    for (int i = 0; i < N; ++i) m.k[i] = k[i].get<int>();
    m.cos_amp = jm.value("cos", 0.0);
    m.sin_amp = jm.value("sin", 0.0);
    c.modes.push_back(m);
  }
  return c;
}

inline TemporalCoefficient temporal_from_json(const nlohmann::json& j) {
  TemporalCoefficient c;
  std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    c.base = j.at("value").get<double>();
    return c;
  }
  if (type != "fourier") throw ConfigError("temporal coefficient type must be 'constant' or 'fourier'");
  c.base = j.at("base").get<double>();
  for (const auto& jm : j.at("modes")) {
    FourierMode<1> m;
    m.k[0] = jm.at("k").get<int>();
    m.cos_amp = jm.value("cos", 0.0);
    m.sin_amp = jm.value("sin", 0.0);
    c.modes.push_back(m);
  }
  return c;
}

}  // namespace detail

template <int N>
nlohmann::json FluxModel<N>::to_json() const {
  nlohmann::json coeff;
  coeff["dim"] = N;
  if (const auto* sep = separable()) {
    coeff["space"] = detail::spatial_to_json<N>(sep->space);
    coeff["time"] = detail::temporal_to_json(sep->time);
  } else {
    const auto* cb = checkerboard();
    coeff["k_space"] = cb->k_space;
    coeff["k_time"] = cb->k_time;
    coeff["values"] = cb->values;
  }
  nlohmann::json j;
  j["family"] = family_name(family_);
  j["p"] = constants_.p;
  j["alpha"] = constants_.alpha;
  j["c0"] = constants_.c0;
  j["c1"] = constants_.c1;
  j["c2"] = constants_.c2;
  j["coefficients"] = coeff;
  j["time_modulus"] =
      modulus_ ? nlohmann::json{{"type", "lipschitz"}, {"constant", modulus_->lipschitz_constant}}
               : nlohmann::json(nullptr);
  return j;
}

template <int N>
FluxModel<N> FluxModel<N>::from_json(const nlohmann::json& j) {
  StructureConstants sc;
  sc.p = j.at("p").get<double>();
  sc.alpha = j.at("alpha").get<double>();
  sc.c0 = j.at("c0").get<double>();
  sc.c1 = j.at("c1").get<double>();
  sc.c2 = j.at("c2").get<double>();

  std::string fam = j.at("family").get<std::string>();
  FluxFamily family;
  if (fam == "linear")
    family = FluxFamily::linear;
  else if (fam == "p_laplacian")
    family = FluxFamily::p_laplacian;
  else if (fam == "checkerboard")
    family = FluxFamily::checkerboard;
  else
    throw ConfigError("unknown flux family '" + fam + "'");

  const auto& coeff = j.at("coefficients");
  int dim = coeff.value("dim", 1);
  if (dim != N) throw ConfigError("flux model has dim " + std::to_string(dim) + ", expected " + std::to_string(N));

  std::optional<TimeModulus> modulus;
  if (j.contains("time_modulus") && !j.at("time_modulus").is_null()) {
    const auto& tm = j.at("time_modulus");
    if (tm.at("type").get<std::string>() != "lipschitz")
      throw ConfigError("time_modulus type must be 'lipschitz'");
    modulus = TimeModulus{tm.at("constant").get<double>()};
  }

  if (family == FluxFamily::checkerboard) {
    CheckerboardCoefficient<N> cb;
    cb.k_space = coeff.at("k_space").get<int>();
    cb.k_time = coeff.at("k_time").get<int>();
    cb.values = coeff.at("values").get<std::vector<double>>();
    return FluxModel<N>(family, sc, std::move(cb), modulus);
  }
  SeparableCoefficient<N> sep;
  sep.space = detail::spatial_from_json<N>(coeff.at("space"));
  if (coeff.contains("time")) sep.time = detail::temporal_from_json(coeff.at("time"));
  return FluxModel<N>(family, sc, std::move(sep), modulus);
}

// Declared structure constants valid for a coefficient range [cmin, cmax]:
// monotonicity constant degrades by 2^(2-p) for the p-power nonlinearity and
// the Hölder constant picks up the factor (p-1).  A relative guard keeps the
// sampled margins nonnegative where piecewise-constant coefficients attain
// the bounds exactly (roundoff would otherwise flip ties).
inline StructureConstants derived_constants(double p, double cmin, double cmax) {
  constexpr double guard = 1e-12;
  StructureConstants sc;
  sc.p = p;
  sc.alpha = 1.0;
  sc.c0 = cmax;
  sc.c1 = cmax * (p - 1.0) * (1.0 + guard);
  sc.c2 = (p == 2.0 ? cmin : cmin * std::pow(2.0, 2.0 - p)) * (1.0 - guard);
  return sc;
}

}  // namespace homog

#endif  // HOMOG_FLUX_MODEL_HPP
