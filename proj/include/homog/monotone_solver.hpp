#ifndef HOMOG_MONOTONE_SOLVER_HPP
#define HOMOG_MONOTONE_SOLVER_HPP

#include <cstdio>
#include <functional>

#include "homog/linear_solver.hpp"

namespace homog {

struct SolverOptions {
  double residual_tol = 1e-10;   // nonlinear residual dual-norm tolerance
  int max_iterations = 800;
  double linear_rel_tol = 1e-13;
  int linear_max_iterations = 2000;
  double period_tol = 1e-8;      // time-periodicity gap tolerance (mu = 2)
  int max_sweeps = 400;
  double energy_tol = 1e-6;      // energy identity tolerance
  double step_initial = 1.0;
  double step_min = 1e-10;
  double step_max = 8.0;
  double step_growth = 1.5;
};

inline SolverOptions default_options(double p) {
  SolverOptions o;
  o.residual_tol = p == 2.0 ? 1e-10 : 1e-8;
  return o;
}

struct IterationLog {
  std::vector<double> residuals;  // dual norms across accepted iterates
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
};

// --- element-level kernels ----------------------------------------------

template <int N>
inline long grid_points(BoundaryKind bc, int n) {
  long pts = bc == BoundaryKind::periodic ? n : n + 1;
  long m = 1;
  for (int i = 0; i < N; ++i) m *= pts;
  return m;
}

template <int N>
inline long grid_elements(int n) {
  long m = 1;
  for (int i = 0; i < N; ++i) m *= n;
  return m;
}

// Gradient of the lowest-order interpolant at the element midpoint.
template <int N>
inline Vec<N> element_gradient(BoundaryKind bc, int n, const std::vector<double>& v, long e) {
  double h = 1.0 / n;
  if constexpr (N == 1) {
    int i = static_cast<int>(e);
    int ip = bc == BoundaryKind::periodic ? (i + 1) % n : i + 1;
    Vec<1> g;
    g[0] = (v[ip] - v[i]) / h;
    return g;
  } else {
    int pts = bc == BoundaryKind::periodic ? n : n + 1;
    int i = static_cast<int>(e % n), j = static_cast<int>(e / n);
    int ip = bc == BoundaryKind::periodic ? (i + 1) % n : i + 1;
    int jp = bc == BoundaryKind::periodic ? (j + 1) % n : j + 1;
    double a = v[i + static_cast<long>(pts) * j];
    double b = v[ip + static_cast<long>(pts) * j];
    double c = v[i + static_cast<long>(pts) * jp];
    double d = v[ip + static_cast<long>(pts) * jp];
    Vec<2> g;
    g[0] = (b + d - a - c) / (2.0 * h);
    g[1] = (c + d - a - b) / (2.0 * h);
    return g;
  }
}

template <int N>
std::vector<Vec<N>> element_gradients(BoundaryKind bc, int n, const std::vector<double>& v) {
  std::vector<Vec<N>> g(grid_elements<N>(n));
  for (long e = 0; e < static_cast<long>(g.size()); ++e) g[e] = element_gradient<N>(bc, n, v, e);
  return g;
}

// Accumulate sum_e |e| (flux_e, Dphi_i|_e) into R.  flux(e, g) receives the
// element index and the (already shifted) midpoint gradient.
template <int N, class FluxFn>
void add_flux_divergence(BoundaryKind bc, int n, FluxFn&& flux, const std::vector<double>& v,
                         const Vec<N>& xi, std::vector<double>& R) {
  double h = 1.0 / n;
  if constexpr (N == 1) {
    for (int e = 0; e < n; ++e) {
      int ip = bc == BoundaryKind::periodic ? (e + 1) % n : e + 1;
      Vec<1> g;
      g[0] = (v[ip] - v[e]) / h + xi[0];
      double q = flux(e, g)[0];
      R[e] -= q;
      R[ip] += q;
    }
  } else {
    int pts = bc == BoundaryKind::periodic ? n : n + 1;
    for (int j = 0; j < n; ++j) {
      int jp = bc == BoundaryKind::periodic ? (j + 1) % n : j + 1;
      for (int i = 0; i < n; ++i) {
        int ip = bc == BoundaryKind::periodic ? (i + 1) % n : i + 1;
        long ia = i + static_cast<long>(pts) * j;
        long ib = ip + static_cast<long>(pts) * j;
        long ic = i + static_cast<long>(pts) * jp;
        long id = ip + static_cast<long>(pts) * jp;
        Vec<2> g;
        g[0] = (v[ib] + v[id] - v[ia] - v[ic]) / (2.0 * h) + xi[0];
        g[1] = (v[ic] + v[id] - v[ia] - v[ib]) / (2.0 * h) + xi[1];
        Vec<2> q = flux(i + static_cast<long>(n) * j, g);
        double sx = 0.5 * h * q[0], sy = 0.5 * h * q[1];
        R[ia] -= sx + sy;
        R[ib] += sx - sy;
        R[ic] += sy - sx;
        R[id] += sx + sy;
      }
    }
  }
}

template <int N>
inline void zero_boundary(int n, std::vector<double>& v) {
  if constexpr (N == 1) {
    v[0] = v[n] = 0.0;
  } else {
    int pts = n + 1;
    for (int i = 0; i <= n; ++i) {
      v[i] = v[i + static_cast<long>(pts) * n] = 0.0;
      v[static_cast<long>(pts) * i] = v[n + static_cast<long>(pts) * i] = 0.0;
    }
  }
}

template <int N>
inline void subtract_mean(std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  for (double& x : v) x -= m;
}

// For 2D periodic grids the midpoint-quadrature operator annihilates the
// alternating mode (-1)^(i+j) in addition to constants; keep iterates in the
// orthogonal complement.
inline void subtract_alternating(int n, std::vector<double>& v) {
  double m = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      m += s * v[i + static_cast<long>(n) * j];
    }
  m /= static_cast<double>(n) * n;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      v[i + static_cast<long>(n) * j] -= s * m;
    }
}

// --- one implicit monotone system ----------------------------------------
//
// Residual of  beta h^N (v - v_prev) + div-form flux(Dv + xi) - h^N f  with
// the configured boundary condition.  The flux is either the family path
// (per-element scalar coefficient times the p-power nonlinearity) or a
// generic gradient-to-flux callable.
template <int N>
struct ImplicitProblem {
  BoundaryKind bc = BoundaryKind::periodic;
  int n = 0;
  double beta = 0.0;
  std::vector<double> coeff;  // family path when non-empty
  double p = 2.0;
  std::vector<Vec<N>> matrix;  // constant linear map b(g) = sum_a matrix[a] g[a]
  std::function<Vec<N>(const Vec<N>&)> generic;
  Vec<N> xi{};
  const std::vector<double>* v_prev = nullptr;
  const std::vector<double>* f_nodal = nullptr;
  const ShiftedLaplaceSolver<N>* precond = nullptr;

  long size() const { return grid_points<N>(bc, n); }
  bool family_path() const { return !coeff.empty(); }
  bool matrix_path() const { return !matrix.empty(); }
  bool linear() const { return (family_path() && p == 2.0) || (matrix_path() && matrix_symmetric()); }
  bool singular() const { return bc == BoundaryKind::periodic && beta == 0.0; }

  bool matrix_symmetric() const {
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b)
        if (std::abs(matrix[a][b] - matrix[b][a]) >
            1e-12 * (1.0 + std::abs(matrix[a][b]) + std::abs(matrix[b][a])))
          return false;
    return true;
  }

  Vec<N> matrix_flux(const Vec<N>& g) const {
    Vec<N> q{};
    for (int a = 0; a < N; ++a) q += matrix[a] * g[a];
    return q;
  }

  void residual(const std::vector<double>& v, std::vector<double>& R) const {
    R.assign(size(), 0.0);
    double hN = std::pow(1.0 / n, N);
    if (family_path()) {
      const double pexp = p;
      const std::vector<double>& c = coeff;
      add_flux_divergence<N>(bc, n,
                             [&](long e, const Vec<N>& g) { return p_power(g, pexp) * c[e]; }, v,
                             xi, R);
    } else if (matrix_path()) {
      add_flux_divergence<N>(bc, n, [&](long, const Vec<N>& g) { return matrix_flux(g); }, v, xi,
                             R);
    } else {
      add_flux_divergence<N>(bc, n, [&](long, const Vec<N>& g) { return generic(g); }, v, xi, R);
    }
    if (beta != 0.0) {
      for (long i = 0; i < size(); ++i)
        R[i] += beta * hN * (v[i] - (v_prev ? (*v_prev)[i] : 0.0));
    }
    if (f_nodal) {
      for (long i = 0; i < size(); ++i) R[i] -= hN * (*f_nodal)[i];
    }
    if (bc == BoundaryKind::dirichlet) zero_boundary<N>(n, R);
  }

  // A v for the linear paths (coefficient- or matrix-weighted stiffness plus
  // mass).
  void apply_linear(const std::vector<double>& v, std::vector<double>& Av) const {
    Av.assign(size(), 0.0);
    if (family_path()) {
      const std::vector<double>& c = coeff;
      add_flux_divergence<N>(bc, n, [&](long e, const Vec<N>& g) { return g * c[e]; }, v, Vec<N>{},
                             Av);
    } else {
      add_flux_divergence<N>(bc, n, [&](long, const Vec<N>& g) { return matrix_flux(g); }, v,
                             Vec<N>{}, Av);
    }
    if (beta != 0.0) {
      double hN = std::pow(1.0 / n, N);
      for (long i = 0; i < size(); ++i) Av[i] += beta * hN * v[i];
    }
    if (bc == BoundaryKind::dirichlet) zero_boundary<N>(n, Av);
  }

  void project(std::vector<double>& v) const {
    if (bc != BoundaryKind::periodic) return;
    subtract_mean<N>(v);
    if constexpr (N == 2) {
      if (singular()) subtract_alternating(n, v);
    }
  }

  // Secant conductivity per element at the current iterate; the floor keeps
  // the linearized operator elliptic where the flux degenerates.
  std::vector<double> secant_coefficients(const std::vector<double>& v) const {
    std::vector<double> s(grid_elements<N>(n));
    double smax = 0.0;
    for (long e = 0; e < static_cast<long>(s.size()); ++e) {
      Vec<N> g = element_gradient<N>(bc, n, v, e) + xi;
      if (family_path()) {
        double gn = g.norm();
        s[e] = coeff[e] * (p == 2.0 ? 1.0 : power_abs(gn, p - 2.0));
      } else {
        double g2 = Vec<N>::dot(g, g);
        Vec<N> q = matrix_path() ? matrix_flux(g) : generic(g);
        s[e] = g2 > 0.0 ? std::max(Vec<N>::dot(q, g) / g2, 0.0) : 0.0;
      }
      smax = std::max(smax, s[e]);
    }
    double floor = 1e-8 * (1.0 + smax);
    for (double& x : s) x = std::max(x, floor);
    return s;
  }

  double dual_norm(const std::vector<double>& R, std::vector<double>& z) const {
    precond->solve(R, z);
    if (singular()) project(z);
    double s = 0.0;
    for (long i = 0; i < size(); ++i) s += R[i] * z[i];
    return std::sqrt(std::max(s, 0.0));
  }
};

// Preconditioned conjugate gradients for the linear family path.
template <int N>
IterationLog pcg_solve(const ImplicitProblem<N>& prob, std::vector<double>& v,
                       const SolverOptions& opts) {
  long m = prob.size();
  std::vector<double> R(m), r(m), z(m), d(m), q(m);

  prob.residual(v, R);
  r = R;  // linear residual g - A v = -R(v)
  for (double& x : r) x = -x;
  if (prob.singular()) prob.project(r);

  prob.precond->solve(r, z);
  if (prob.singular()) prob.project(z);
  double rho = 0.0;
  for (long i = 0; i < m; ++i) rho += r[i] * z[i];
  double rho0 = rho;
  d = z;

  IterationLog log;
  int it = 0;
  double floor2 = 1e-300;
  while (rho > std::max(opts.linear_rel_tol * opts.linear_rel_tol * rho0, floor2) &&
         it < opts.linear_max_iterations) {
    prob.apply_linear(d, q);
    double dq = 0.0;
    for (long i = 0; i < m; ++i) dq += d[i] * q[i];
    if (dq <= 0.0) break;
    double alpha = rho / dq;
    for (long i = 0; i < m; ++i) {
      v[i] += alpha * d[i];
      r[i] -= alpha * q[i];
    }
    prob.precond->solve(r, z);
    if (prob.singular()) prob.project(z);
    double rho_new = 0.0;
    for (long i = 0; i < m; ++i) rho_new += r[i] * z[i];
    double beta = rho_new / rho;
    rho = rho_new;
    for (long i = 0; i < m; ++i) d[i] = z[i] + beta * d[i];
    ++it;
  }
  if (prob.bc == BoundaryKind::periodic) prob.project(v);
  if (prob.bc == BoundaryKind::dirichlet) zero_boundary<N>(prob.n, v);

  prob.residual(v, R);
  log.final_residual = prob.dual_norm(R, z);
  log.iterations = it;
  log.residuals = {log.final_residual};
  log.converged = log.final_residual <= opts.residual_tol;
  return log;
}

// Damped fixed-point iteration for the monotone system: each step solves the
// secant-linearized problem with the Laplacian-preconditioned CG and moves
// v <- v + rho (w - v), rho chosen by backtracking so the residual dual-norm
// decreases.  Monotonicity makes the full step a descent direction away from
// degenerate configurations; the damping safeguards the rest.
template <int N>
IterationLog damped_solve(const ImplicitProblem<N>& prob, std::vector<double>& v,
                          const SolverOptions& opts) {
  long m = prob.size();
  std::vector<double> R(m), z(m), w(m), vt(m), Rt(m), zt(m);

  if (prob.bc == BoundaryKind::periodic) prob.project(v);
  prob.residual(v, R);
  double rn = prob.dual_norm(R, z);

  IterationLog log;
  log.residuals.push_back(rn);
  double step_secant = std::min(opts.step_initial, 1.0);
  double step_grad = opts.step_initial;

  // backtracking line probe along a candidate direction
  auto try_direction = [&](const std::vector<double>& dir, double& step, double cap) {
    while (step >= opts.step_min) {
      for (long i = 0; i < m; ++i) vt[i] = v[i] + step * dir[i];
      if (prob.bc == BoundaryKind::periodic)
        prob.project(vt);
      else
        zero_boundary<N>(prob.n, vt);
      prob.residual(vt, Rt);
      double rnt = prob.dual_norm(Rt, zt);
      if (rnt < rn) {
        v.swap(vt);
        R.swap(Rt);
        z.swap(zt);
        rn = rnt;
        step = std::min(step * opts.step_growth, cap);
        return true;
      }
      step *= 0.5;
    }
    step = opts.step_min;
    return false;
  };

  std::vector<double> dir(m);
  while (rn > opts.residual_tol && log.iterations < opts.max_iterations) {
    ImplicitProblem<N> lin = prob;
    lin.coeff = prob.secant_coefficients(v);
    lin.p = 2.0;
    lin.matrix.clear();
    lin.generic = nullptr;
    w = v;
    pcg_solve(lin, w, opts);
    for (long i = 0; i < m; ++i) dir[i] = w[i] - v[i];

    bool accepted = try_direction(dir, step_secant, 1.0);
    if (!accepted) {
      // the scalar-secant fixed point can sit off the true solution
      // (anisotropic fluxes); fall back to the preconditioned residual
      for (long i = 0; i < m; ++i) dir[i] = -z[i];
      accepted = try_direction(dir, step_grad, opts.step_max);
    }
    ++log.iterations;
    log.residuals.push_back(rn);
    if (!accepted) break;
  }

  log.final_residual = rn;
  log.converged = rn <= opts.residual_tol;
  return log;
}

// Dispatch: exact linear solve for linear fluxes, damped iteration otherwise.
template <int N>
IterationLog implicit_solve(const ImplicitProblem<N>& prob, std::vector<double>& v,
                            const SolverOptions& opts) {
  IterationLog log = prob.linear() ? pcg_solve(prob, v, opts) : damped_solve(prob, v, opts);
  if (!log.converged) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "implicit solve failed to reach residual tolerance %g (final %g after %d "
                  "iterations)",
                  opts.residual_tol, log.final_residual, log.iterations);
    throw SolverError(msg, log.residuals);
  }
  return log;
}

template <int N>
inline double nodal_l2(int n, const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s * std::pow(1.0 / n, N));
}

}  // namespace homog

#endif  // HOMOG_MONOTONE_SOLVER_HPP
