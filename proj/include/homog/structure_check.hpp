#ifndef HOMOG_STRUCTURE_CHECK_HPP
#define HOMOG_STRUCTURE_CHECK_HPP

#include <algorithm>

#include "homog/flux_model.hpp"

namespace homog {

// Worst-case margins of the structure conditions over sampled points.
// A margin is (bound) - (quantity it must dominate); passing means every
// margin stays above -tolerance.
struct StructureReport {
  double bound_margin = 0.0;         // c0 - |a(y,tau,0)|
  double continuity_margin = 0.0;    // Hölder bound minus |a(xi1)-a(xi2)|
  double monotonicity_margin = 0.0;  // (da, dxi) - c2 |dxi|^p
  bool pass = false;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double tolerance = 0.0;
};

template <int N>
StructureReport check_structure(const FluxModel<N>& model, int n_samples, std::uint64_t seed,
                                double tolerance = 0.0, double xi_range = 3.0) {
  if (n_samples < 1) throw std::invalid_argument("check_structure: n_samples must be >= 1");
  const StructureConstants& sc = model.constants();
  Rng rng(seed);

  StructureReport rep;
  rep.n_samples = n_samples;
  rep.seed = seed;
  rep.tolerance = tolerance;
  double worst_bound = std::numeric_limits<double>::infinity();
  double worst_cont = std::numeric_limits<double>::infinity();
  double worst_mono = std::numeric_limits<double>::infinity();

  for (int s = 0; s < n_samples; ++s) {
    Vec<N> y = rng.uniform_vec<N>(0.0, 1.0);
    double tau = rng.uniform();
    Vec<N> xi1 = rng.uniform_vec<N>(-xi_range, xi_range);
    Vec<N> xi2 = rng.uniform_vec<N>(-xi_range, xi_range);

    worst_bound = std::min(worst_bound, sc.c0 - model.eval(y, tau, Vec<N>{}).norm());

    Vec<N> d = xi1 - xi2;
    double dn = d.norm();
    if (dn == 0.0) continue;  // both sides vanish, never a violation
    Vec<N> da = model.eval(y, tau, xi1) - model.eval(y, tau, xi2);

    double holder = sc.c1 * std::pow(1.0 + xi1.norm() + xi2.norm(), sc.p - 1.0 - sc.alpha) *
                    std::pow(dn, sc.alpha);
    worst_cont = std::min(worst_cont, holder - da.norm());
    worst_mono = std::min(worst_mono, Vec<N>::dot(da, d) - sc.c2 * std::pow(dn, sc.p));
  }

  rep.bound_margin = worst_bound;
  rep.continuity_margin = worst_cont;
  rep.monotonicity_margin = worst_mono;
  rep.pass = worst_bound >= -tolerance && worst_cont >= -tolerance && worst_mono >= -tolerance;
  return rep;
}

struct TimeModulusReport {
  double worst_margin = 0.0;  // omega(t-s)(1+|xi|^{p-1}) - |a(y,t,xi)-a(y,s,xi)|
  bool pass = false;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

template <int N>
TimeModulusReport check_time_modulus(const FluxModel<N>& model, int n_samples, std::uint64_t seed,
                                     double xi_range = 3.0) {
  if (!model.time_modulus())
    throw ConfigError("check_time_modulus: model has no time_modulus descriptor");
  const TimeModulus& omega = *model.time_modulus();
  const double p = model.p();
  Rng rng(seed);

  TimeModulusReport rep;
  rep.n_samples = n_samples;
  rep.seed = seed;
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < n_samples; ++s) {
    Vec<N> y = rng.uniform_vec<N>(0.0, 1.0);
    double t = rng.uniform();
    double u = rng.uniform();
    Vec<N> xi = rng.uniform_vec<N>(-xi_range, xi_range);
    double lhs = (model.eval(y, t, xi) - model.eval(y, u, xi)).norm();
    double rhs = omega.eval(t - u) * (1.0 + std::pow(xi.norm(), p - 1.0));
    worst = std::min(worst, rhs - lhs);
  }
  rep.worst_margin = worst;
  rep.pass = worst >= 0.0;
  return rep;
}

}  // namespace homog

#endif  // HOMOG_STRUCTURE_CHECK_HPP
