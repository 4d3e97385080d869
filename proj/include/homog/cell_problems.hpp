#ifndef HOMOG_CELL_PROBLEMS_HPP
#define HOMOG_CELL_PROBLEMS_HPP

#include <cstdio>
#include <fstream>

#include "homog/fields.hpp"
#include "homog/flux_model.hpp"
#include "homog/monotone_solver.hpp"
#include "homog/structure_check.hpp"

namespace homog {

enum class CellRegime { elliptic_parametric, parabolic_periodic, time_averaged };

inline std::string regime_name(CellRegime r) {
  switch (r) {
    case CellRegime::elliptic_parametric: return "elliptic-parametric";
    case CellRegime::parabolic_periodic: return "parabolic-periodic";
    case CellRegime::time_averaged: return "time-averaged";
  }
  return "?";
}

// Periodic corrector field on the unit cell for one frozen gradient xi.
// Depending on the regime the solution carries one spatial slice or one per
// cell time node.
template <int N>
struct CellSolution {
  Vec<N> xi{};
  CellRegime regime = CellRegime::elliptic_parametric;
  CellGrid grid;
  std::vector<double> slice_taus;
  std::vector<std::vector<double>> v;      // [slice][node], mean zero per slice
  std::vector<std::vector<Vec<N>>> grad;   // [slice][element]
  Vec<N> b{};                              // flux average over the cell
  double residual_norm = 0.0;
  double periodicity_gap = -1.0;           // mu = 2 only
  std::vector<double> gap_history;

  int slices() const { return static_cast<int>(v.size()); }
  long elements() const { return grid_elements<N>(grid.n_space); }

  const Vec<N>& grad_at(int slice, long elem) const { return grad[slice][elem]; }
  Vec<N> p_at(int slice, long elem) const { return xi + grad[slice][elem]; }

  double max_abs_mean() const {
    double worst = 0.0;
    for (const auto& slice : v) {
      double m = 0.0;
      for (double x : slice) m += x;
      worst = std::max(worst, std::abs(m / static_cast<double>(slice.size())));
    }
    return worst;
  }

  // Cell average of p(.,.,xi); equals xi identically in the discrete setting.
  Vec<N> p_mean() const {
    Vec<N> s{};
    double w = std::pow(grid.h(), N) / slices();
    for (const auto& slice : grad)
      for (const auto& g : slice) s += g * w;
    return xi + s;
  }

  nlohmann::json to_json() const {
    nlohmann::json jxi = nlohmann::json::array();
    nlohmann::json jb = nlohmann::json::array();
    for (int i = 0; i < N; ++i) {
      jxi.push_back(xi[i]);
      jb.push_back(b[i]);
    }
    return {{"xi", jxi},
            {"regime", regime_name(regime)},
            {"b", jb},
            {"residual", residual_norm},
            {"grid", {{"n_space", grid.n_space}, {"n_time", grid.n_time}}}};
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "slice," << (N == 1 ? "ix" : "ix,iy") << ",v";
    for (int c = 0; c < N; ++c) out << ",g" << c;
    out << "\n";
    char buf[64];
    int n = grid.n_space;
    for (int s = 0; s < slices(); ++s) {
      for (long e = 0; e < elements(); ++e) {
        out << s;
        long r = e;
        for (int i = 0; i < N; ++i) {
          out << "," << (r % n);
          r /= n;
        }
        std::snprintf(buf, sizeof buf, ",%.17g", v[s][e]);
        out << buf;
        for (int c = 0; c < N; ++c) {
          std::snprintf(buf, sizeof buf, ",%.17g", grad[s][e][c]);
          out << buf;
        }
        out << "\n";
      }
    }
  }
};

namespace detail {

template <int N>
Vec<N> cell_element_center(int n, long e) {
  Vec<N> c;
  for (int i = 0; i < N; ++i) {
    c[i] = (static_cast<double>(e % n) + 0.5) / n;
    e /= n;
  }
  return c;
}

template <int N, class CoeffFn>
std::vector<double> element_coefficients(int n, CoeffFn&& c) {
  std::vector<double> out(grid_elements<N>(n));
  for (long e = 0; e < static_cast<long>(out.size()); ++e)
    out[e] = c(cell_element_center<N>(n, e));
  return out;
}

template <int N>
Vec<N> flux_average(const std::vector<double>& coeff, double p, const std::vector<Vec<N>>& grad,
                    const Vec<N>& xi, int n) {
  Vec<N> s{};
  double w = std::pow(1.0 / n, N);
  for (long e = 0; e < static_cast<long>(grad.size()); ++e)
    s += p_power(grad[e] + xi, p) * (coeff[e] * w);
  return s;
}

}  // namespace detail

// The time-averaged map a~(y, xi) of the mu > 2 regime, realized by averaging
// the scalar coefficient over the cell time nodes (exact for the built-in
// coefficient-scaled families).
template <int N>
struct TimeAveragedFlux {
  const FluxModel<N>* model;
  int n_time;

  double coefficient(const Vec<N>& y) const {
    double s = 0.0;
    for (int k = 0; k < n_time; ++k) s += model->coefficient(y, (k + 0.5) / n_time);
    return s / n_time;
  }

  Vec<N> eval(const Vec<N>& y, const Vec<N>& xi) const {
    return p_power(xi, model->p()) * coefficient(wrap_unit(y));
  }
};

template <int N>
TimeAveragedFlux<N> time_average_flux(const FluxModel<N>& model, const CellGrid& grid) {
  grid.validate();
  return TimeAveragedFlux<N>{&model, grid.n_time};
}

namespace detail {

template <int N>
CellSolution<N> solve_cell_stationary(const FluxModel<N>& model, std::vector<double> coeff,
                                      double tau, const Vec<N>& xi, const CellGrid& grid,
                                      const SolverOptions& opts, CellRegime regime) {
  int n = grid.n_space;
  ShiftedLaplaceSolver<N> P(BoundaryKind::periodic, n, 0.0);

  ImplicitProblem<N> prob;
  prob.bc = BoundaryKind::periodic;
  prob.n = n;
  prob.beta = 0.0;
  prob.coeff = std::move(coeff);
  prob.p = model.p();
  prob.xi = xi;
  prob.precond = &P;

  std::vector<double> v(grid_points<N>(BoundaryKind::periodic, n), 0.0);
  IterationLog log = implicit_solve(prob, v, opts);
  subtract_mean<N>(v);

  CellSolution<N> sol;
  sol.xi = xi;
  sol.regime = regime;
  sol.grid = grid;
  sol.slice_taus = {tau};
  sol.grad.push_back(element_gradients<N>(BoundaryKind::periodic, n, v));
  sol.v.push_back(std::move(v));
  sol.b = detail::flux_average<N>(prob.coeff, prob.p, sol.grad[0], xi, n);
  sol.residual_norm = log.final_residual;
  return sol;
}

}  // namespace detail

// Parameter-dependent elliptic cell problem at frozen time tau:
//   -div(a(y, tau, Dv + xi)) = 0,  v Y-periodic with mean zero.
template <int N>
CellSolution<N> solve_cell_elliptic(const FluxModel<N>& model, double tau, const Vec<N>& xi,
                                    const CellGrid& grid, const SolverOptions& opts) {
  grid.validate();
  if (!xi.finite()) throw std::invalid_argument("solve_cell_elliptic: xi must be finite");
  auto coeff = detail::element_coefficients<N>(
      grid.n_space, [&](const Vec<N>& y) { return model.coefficient(y, wrap_unit(tau)); });
  return detail::solve_cell_stationary(model, std::move(coeff), tau, xi, grid, opts,
                                       CellRegime::elliptic_parametric);
}

// Time-periodic parabolic cell problem (mu = 2):
//   v' - div(a(y, tau, Dv + xi)) = 0,  v periodic in Y x T0, mean zero in y.
// Backward-Euler marching over whole periods from the tau = 0 elliptic
// solution until the periodicity gap contracts below opts.period_tol.
template <int N>
CellSolution<N> solve_cell_parabolic_periodic(const FluxModel<N>& model, const Vec<N>& xi,
                                              const CellGrid& grid, const SolverOptions& opts) {
  grid.validate();
  if (!xi.finite()) throw std::invalid_argument("solve_cell_parabolic_periodic: xi must be finite");
  int n = grid.n_space;
  int nt = grid.n_time;
  double dtau = grid.dtau();

  CellSolution<N> init = solve_cell_elliptic(model, 0.0, xi, grid, opts);
  std::vector<double> v = init.v[0];

  ShiftedLaplaceSolver<N> P(BoundaryKind::periodic, n, 1.0 / dtau);

  // per-step coefficient arrays (periodic in tau, so one period suffices)
  std::vector<std::vector<double>> coeffs(nt);
  for (int k = 1; k <= nt; ++k)
    coeffs[k - 1] = detail::element_coefficients<N>(
        n, [&](const Vec<N>& y) { return model.coefficient(y, wrap_unit(k * dtau)); });

  CellSolution<N> sol;
  sol.xi = xi;
  sol.regime = CellRegime::parabolic_periodic;
  sol.grid = grid;
  sol.v.assign(nt, {});
  sol.grad.assign(nt, {});
  sol.slice_taus.resize(nt);
  for (int k = 1; k <= nt; ++k) sol.slice_taus[k - 1] = k * dtau;

  double worst_residual = 0.0;
  bool settled = false;
  for (int sweep = 0; sweep < opts.max_sweeps && !settled; ++sweep) {
    std::vector<double> v_start = v;
    worst_residual = 0.0;
    for (int k = 1; k <= nt; ++k) {
      std::vector<double> v_prev = v;
      ImplicitProblem<N> prob;
      prob.bc = BoundaryKind::periodic;
      prob.n = n;
      prob.beta = 1.0 / dtau;
      prob.coeff = coeffs[k - 1];
      prob.p = model.p();
      prob.xi = xi;
      prob.v_prev = &v_prev;
      prob.precond = &P;
      IterationLog log = implicit_solve(prob, v, opts);
      worst_residual = std::max(worst_residual, log.final_residual);
      subtract_mean<N>(v);
      sol.v[k - 1] = v;
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double d = v[i] - v_start[i];
      gap += d * d;
    }
    gap = std::sqrt(gap * std::pow(1.0 / n, N));
    sol.gap_history.push_back(gap);
    settled = gap < opts.period_tol;
  }
  if (!settled)
    throw SolverError("parabolic-periodic cell solve: periodicity gap did not contract below " +
                          std::to_string(opts.period_tol),
                      sol.gap_history);

  sol.periodicity_gap = sol.gap_history.back();
  sol.residual_norm = std::max(worst_residual, init.residual_norm);
  Vec<N> bsum{};
  for (int k = 0; k < nt; ++k) {
    sol.grad[k] = element_gradients<N>(BoundaryKind::periodic, n, sol.v[k]);
    bsum += detail::flux_average<N>(coeffs[k], model.p(), sol.grad[k], xi, n);
  }
  sol.b = bsum * (1.0 / nt);
  return sol;
}

// Elliptic cell problem for the time-averaged map (mu > 2).
template <int N>
CellSolution<N> solve_cell_time_averaged(const FluxModel<N>& model, const Vec<N>& xi,
                                         const CellGrid& grid, const SolverOptions& opts) {
  grid.validate();
  if (!xi.finite()) throw std::invalid_argument("solve_cell_time_averaged: xi must be finite");
  TimeAveragedFlux<N> avg = time_average_flux(model, grid);
  auto coeff =
      detail::element_coefficients<N>(grid.n_space, [&](const Vec<N>& y) { return avg.coefficient(y); });
  return detail::solve_cell_stationary(model, std::move(coeff), 0.0, xi, grid, opts,
                                       CellRegime::time_averaged);
}

template <int N>
struct EffectiveFluxResult {
  Vec<N> b{};
  CellSolution<N> solution;
};

// Effective flux b(xi) with regime dispatch on mu:
//   0 < mu < 2 : elliptic solves at the cell time quadrature nodes, fluxes
//                averaged over tau (requires the time-modulus descriptor for
//                time-dependent models);
//   mu = 2     : one time-periodic parabolic solve;
//   mu > 2     : one elliptic solve for the time-averaged map.
template <int N>
EffectiveFluxResult<N> effective_flux(const FluxModel<N>& model, double mu, const Vec<N>& xi,
                                      const CellGrid& grid, const SolverOptions& opts) {
  if (!(mu > 0.0)) throw std::invalid_argument("effective_flux: mu must be positive");
  grid.validate();

  EffectiveFluxResult<N> result;
  if (mu < 2.0) {
    if (model.time_dependent() && !model.time_modulus())
      throw ConfigError("effective_flux: regime 0 < mu < 2 requires a time_modulus descriptor");
    int nt = grid.n_time;
    CellSolution<N> family;
    family.xi = xi;
    family.regime = CellRegime::elliptic_parametric;
    family.grid = grid;
    Vec<N> bsum{};
    for (int k = 0; k < nt; ++k) {
      double tau = (k + 0.5) / nt;
      CellSolution<N> snap = solve_cell_elliptic(model, tau, xi, grid, opts);
      bsum += snap.b;
      family.slice_taus.push_back(tau);
      family.v.push_back(std::move(snap.v[0]));
      family.grad.push_back(std::move(snap.grad[0]));
      family.residual_norm = std::max(family.residual_norm, snap.residual_norm);
    }
    family.b = bsum * (1.0 / nt);
    result.b = family.b;
    result.solution = std::move(family);
  } else if (mu == 2.0) {
    result.solution = solve_cell_parabolic_periodic(model, xi, grid, opts);
    result.b = result.solution.b;
  } else {
    result.solution = solve_cell_time_averaged(model, xi, grid, opts);
    result.b = result.solution.b;
  }
  return result;
}

// |\iint (a(y,tau,p), p) dy dtau - (b(xi), xi)|, the discrete form of the
// cell energy identity.  Diagnostic: always returns, never throws.
template <int N>
double energy_identity_check(const CellSolution<N>& sol, const FluxModel<N>& model) {
  int n = sol.grid.n_space;
  double w = std::pow(1.0 / n, N) / sol.slices();
  double energy = 0.0;
  TimeAveragedFlux<N> avg{&model, sol.grid.n_time};
  for (int s = 0; s < sol.slices(); ++s) {
    for (long e = 0; e < sol.elements(); ++e) {
      Vec<N> y = detail::cell_element_center<N>(n, e);
      Vec<N> p = sol.p_at(s, e);
      Vec<N> a = sol.regime == CellRegime::time_averaged ? avg.eval(y, p)
                                                         : model.eval(y, sol.slice_taus[s], p);
      energy += w * Vec<N>::dot(a, p);
    }
  }
  return std::abs(energy - Vec<N>::dot(sol.b, sol.xi));
}

}  // namespace homog

#endif  // HOMOG_CELL_PROBLEMS_HPP
