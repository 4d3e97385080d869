#ifndef HOMOG_PARABOLIC_HPP
#define HOMOG_PARABOLIC_HPP

#include "homog/fields.hpp"
#include "homog/flux_table.hpp"

namespace homog {

// Source term f(x, t) = space(x) * time(t).
template <int N>
struct Source {
  SpatialCoefficient<N> space;  // base 0 means no source
  TemporalCoefficient time;

  double eval(const Vec<N>& x, double t) const { return space.eval(x) * time.eval(t); }
  bool zero() const { return space.constant() && space.base == 0.0; }
};

// Initial data vanishing on the boundary: zero or a product of sine modes.
template <int N>
struct InitialData {
  bool zero = true;
  double amplitude = 1.0;
  std::array<int, N> modes{};  // u0 = amplitude * prod_a sin(modes[a] pi x_a)

  double eval(const Vec<N>& x) const {
    if (zero) return 0.0;
    double v = amplitude;
    for (int i = 0; i < N; ++i) v *= std::sin(std::numbers::pi * modes[i] * x[i]);
    return v;
  }
};

template <int N>
struct ProblemSpec {
  double T = 1.0;
  Source<N> f;
  InitialData<N> u0;

  void validate() const {
    if (!(T > 0.0)) throw ConfigError("problem: T must be positive");
    if (!u0.zero)
      for (int i = 0; i < N; ++i)
        if (u0.modes[i] < 1) throw ConfigError("problem: initial sine modes must be >= 1");
  }
};

struct EnergyRow {
  int step = 0;
  double t = 0.0;
  double dissipation = 0.0;     // sum_e h^N (a(Du), Du) at this step
  double l2_half_delta = 0.0;   // (||u_k||^2 - ||u_{k-1}||^2) / 2
  double source_pairing = 0.0;  // sum_i h^N f_i u_i
  double residual = 0.0;        // nonlinear residual dual-norm of the step
};

template <int N>
struct SolveResult {
  SpaceTimeGrid<N> grid;
  std::vector<std::vector<double>> states;  // nodal u at t_0 .. t_{n_t}
  DiscreteField<N> gradient;                // Du at steps 1..n_t
  std::vector<EnergyRow> ledger;

  const std::vector<double>& initial() const { return states.front(); }
  const std::vector<double>& final_state() const { return states.back(); }

  void write_trajectory_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "t," << (N == 1 ? "ix" : "ix,iy") << ",u\n";
    char buf[64];
    int pts = grid.n_x + 1;
    for (std::size_t k = 0; k < states.size(); ++k) {
      double t = k * grid.dt();
      for (long i = 0; i < static_cast<long>(states[k].size()); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << buf;
        long r = i;
        for (int a = 0; a < N; ++a) {
          out << "," << (r % pts);
          r /= pts;
        }
        std::snprintf(buf, sizeof buf, ",%.17g", states[k][i]);
        out << buf << "\n";
      }
    }
  }

  void write_ledger_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "step,t,dissipation,l2_half_delta,source_pairing,residual\n";
    char buf[192];
    for (const auto& row : ledger) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step, row.t,
                    row.dissipation, row.l2_half_delta, row.source_pairing, row.residual);
      out << buf;
    }
  }
};

// Effective-flux evaluator for the homogenized problem: a gradient-to-flux
// map plus optional exact-linear fast paths (scalar or constant matrix).
template <int N>
struct EffectiveFluxEval {
  std::function<Vec<N>(const Vec<N>&)> b;
  double linear_scalar = 0.0;   // > 0: b(xi) = linear_scalar * xi
  std::vector<Vec<N>> matrix;   // non-empty: b(xi) = sum_a matrix[a] xi[a]

  // captures the table by reference; it must outlive the evaluator
  static EffectiveFluxEval from_table(const FluxTable<N>& table) {
    EffectiveFluxEval ev;
    ev.b = [&table](const Vec<N>& xi) { return eval_b(table, xi); };
    return ev;
  }
};

namespace detail {

// Exact integrals of the lowest-order interpolants (consistent mass): the
// ledger reports the actual L^2 quantities of the discrete trajectory, while
// the time stepping itself stays mass-lumped.
template <int N>
double consistent_pairing(int n, const std::vector<double>& f, const std::vector<double>& u) {
  double h = 1.0 / n;
  double s = 0.0;
  if constexpr (N == 1) {
    for (int e = 0; e < n; ++e)
      s += h / 6.0 * (2.0 * f[e] * u[e] + f[e] * u[e + 1] + f[e + 1] * u[e] +
                      2.0 * f[e + 1] * u[e + 1]);
  } else {
    int pts = n + 1;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        long id[4] = {i + static_cast<long>(pts) * j, i + 1 + static_cast<long>(pts) * j,
                      i + static_cast<long>(pts) * (j + 1),
                      i + 1 + static_cast<long>(pts) * (j + 1)};
        // corner pair weights: same 4, edge 2, diagonal 1
        static const int w[4][4] = {{4, 2, 2, 1}, {2, 4, 1, 2}, {2, 1, 4, 2}, {1, 2, 2, 4}};
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) s += h * h / 36.0 * w[a][b] * f[id[a]] * u[id[b]];
      }
  }
  return s;
}

template <int N>
double consistent_l2_sq(int n, const std::vector<double>& u) {
  return consistent_pairing<N>(n, u, u);
}

template <int N>
std::vector<double> nodal_values(int n, std::function<double(const Vec<N>&)> fn) {
  int pts = n + 1;
  std::vector<double> out(grid_points<N>(BoundaryKind::dirichlet, n));
  for (long i = 0; i < static_cast<long>(out.size()); ++i) {
    Vec<N> x;
    long r = i;
    for (int a = 0; a < N; ++a) {
      x[a] = static_cast<double>(r % pts) / n;
      r /= pts;
    }
    out[i] = fn(x);
  }
  return out;
}

template <int N>
double dissipation_term(const ImplicitProblem<N>& prob, const std::vector<Vec<N>>& grads) {
  double w = std::pow(1.0 / prob.n, N);
  double s = 0.0;
  for (long e = 0; e < static_cast<long>(grads.size()); ++e) {
    Vec<N> a;
    if (prob.family_path())
      a = p_power(grads[e], prob.p) * prob.coeff[e];
    else if (prob.matrix_path())
      a = prob.matrix_flux(grads[e]);
    else
      a = prob.generic(grads[e]);
    s += w * Vec<N>::dot(a, grads[e]);
  }
  return s;
}

// Shared backward-Euler driver over Omega x (0, T) with homogeneous
// Dirichlet data.  FluxBuilder(t, prob) configures the flux for the step
// ending at time t.
template <int N, class FluxBuilder>
SolveResult<N> march(const ProblemSpec<N>& spec, const SpaceTimeGrid<N>& grid,
                     const SolverOptions& opts, double p_exponent, FluxBuilder&& build_flux) {
  spec.validate();
  grid.validate();
  int n = grid.n_x;
  double dt = grid.dt();

  SolveResult<N> result;
  result.grid = grid;
  result.gradient = DiscreteField<N>(grid);

  std::vector<double> u =
      detail::nodal_values<N>(n, [&](const Vec<N>& x) { return spec.u0.eval(x); });
  zero_boundary<N>(n, u);
  result.states.push_back(u);

  ShiftedLaplaceSolver<N> P(BoundaryKind::dirichlet, n, 1.0 / dt);

  double prev_l2sq = detail::consistent_l2_sq<N>(n, u);

  for (int k = 1; k <= grid.n_t; ++k) {
    double t = k * dt;
    std::vector<double> v_prev = u;

    ImplicitProblem<N> prob;
    prob.bc = BoundaryKind::dirichlet;
    prob.n = n;
    prob.beta = 1.0 / dt;
    prob.p = p_exponent;
    prob.v_prev = &v_prev;
    prob.precond = &P;
    build_flux(t, prob);

    std::vector<double> f;
    if (!spec.f.zero()) {
      f = detail::nodal_values<N>(n, [&](const Vec<N>& x) { return spec.f.eval(x, t); });
      prob.f_nodal = &f;
    }

    IterationLog log;
    try {
      log = implicit_solve(prob, u, opts);
    } catch (SolverError& e) {
      e.step_index = k;
      throw;
    }
    zero_boundary<N>(n, u);
    result.states.push_back(u);

    auto grads = element_gradients<N>(BoundaryKind::dirichlet, n, u);
    for (long e = 0; e < grid.elements(); ++e) result.gradient.at(k, e) = grads[e];

    double l2sq = detail::consistent_l2_sq<N>(n, u);
    EnergyRow row;
    row.step = k;
    row.t = t;
    row.dissipation = detail::dissipation_term<N>(prob, grads);
    row.l2_half_delta = 0.5 * (l2sq - prev_l2sq);
    row.source_pairing = prob.f_nodal ? detail::consistent_pairing<N>(n, *prob.f_nodal, u) : 0.0;
    row.residual = log.final_residual;
    result.ledger.push_back(row);
    prev_l2sq = l2sq;
  }
  return result;
}

}  // namespace detail

// Fine-scale solve of  u' - div(a(x/eps, t/eps^mu, Du)) = f  by backward
// Euler; coefficients are frozen at the end-of-step time.
template <int N>
SolveResult<N> solve_fine(const ProblemSpec<N>& spec, const FluxModel<N>& model,
                          const SpaceTimeGrid<N>& grid, const SolverOptions& opts) {
  if (grid.mu < 2.0 && model.time_dependent()) {
    if (!model.time_modulus())
      throw ConfigError("solve_fine: regime 0 < mu < 2 requires a time_modulus descriptor");
    TimeModulusReport gate = check_time_modulus(model, 4000, 2024);
    if (!gate.pass)
      throw ConfigError("solve_fine: time-modulus gate failed (worst margin " +
                        std::to_string(gate.worst_margin) + ")");
  }
  double eps = grid.epsilon;
  double tpow = grid.time_cell_length();
  return detail::march<N>(spec, grid, opts, model.p(), [&](double t, ImplicitProblem<N>& prob) {
    double tau = wrap_unit(t / tpow);
    prob.coeff.resize(grid.elements());
    for (long e = 0; e < grid.elements(); ++e) {
      Vec<N> y = grid.element_center(e);
      for (int i = 0; i < N; ++i) y[i] = wrap_unit(y[i] / eps);
      prob.coeff[e] = model.coefficient(y, tau);
    }
  });
}

// Homogenized solve of  u' - div(b(Du)) = f  with a tabulated or exact
// effective-flux evaluator; out-of-box queries surface as range errors.
template <int N>
SolveResult<N> solve_homogenized(const ProblemSpec<N>& spec, const EffectiveFluxEval<N>& flux,
                                 const SpaceTimeGrid<N>& grid, const SolverOptions& opts) {
  try {
    if (flux.linear_scalar > 0.0) {
      double c = flux.linear_scalar;
      return detail::march<N>(spec, grid, opts, 2.0, [&](double, ImplicitProblem<N>& prob) {
        prob.coeff.assign(grid.elements(), c);
      });
    }
    if (!flux.matrix.empty()) {
      return detail::march<N>(spec, grid, opts, 2.0, [&](double, ImplicitProblem<N>& prob) {
        prob.matrix = flux.matrix;
      });
    }
    return detail::march<N>(spec, grid, opts, 2.0, [&](double, ImplicitProblem<N>& prob) {
      prob.generic = flux.b;
    });
  } catch (const std::out_of_range& e) {
    throw std::out_of_range(std::string(e.what()) +
                            " — enlarge the tabulated xi box to cover the solution gradients");
  }
}

// |sum_k (a(Du_k), Du_k) dt + ||u(T)||^2/2 - ||u(0)||^2/2 - sum_k <f, u_k> dt|
// The backward-Euler version carries an O(dt) defect.
template <int N>
double energy_balance(const SolveResult<N>& result) {
  double dt = result.grid.dt();
  double dissipation = 0.0, source = 0.0, delta = 0.0;
  for (const auto& row : result.ledger) {
    dissipation += dt * row.dissipation;
    source += dt * row.source_pairing;
    delta += row.l2_half_delta;
  }
  return std::abs(dissipation + delta - source);
}

}  // namespace homog

#endif  // HOMOG_PARABOLIC_HPP
