#ifndef HOMOG_LINEAR_SOLVER_HPP
#define HOMOG_LINEAR_SOLVER_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "homog/common.hpp"

namespace homog {

// Constant-coefficient tridiagonal system tridiag(off, diag, off), prefactored.
class Tridiagonal {
 public:
  Tridiagonal() = default;
  Tridiagonal(int n, double diag, double off) : n_(n), off_(off), cp_(n), diag_(n) {
    diag_[0] = diag;
    cp_[0] = off / diag;
    for (int i = 1; i < n; ++i) {
      diag_[i] = diag - off * cp_[i - 1];
      cp_[i] = off / diag_[i];
    }
  }

  // Variant with a modified first/last diagonal entry (Sherman-Morrison core).
  Tridiagonal(int n, double diag, double off, double d_first, double d_last)
      : n_(n), off_(off), cp_(n), diag_(n) {
    diag_[0] = d_first;
    cp_[0] = off / d_first;
    for (int i = 1; i < n; ++i) {
      double d = (i == n - 1) ? d_last : diag;
      diag_[i] = d - off * cp_[i - 1];
      cp_[i] = off / diag_[i];
    }
  }

  void solve(const double* r, double* z) const {
    z[0] = r[0] / diag_[0];
    for (int i = 1; i < n_; ++i) z[i] = (r[i] - off_ * z[i - 1]) / diag_[i];
    for (int i = n_ - 2; i >= 0; --i) z[i] -= cp_[i] * z[i + 1];
  }

  int size() const { return n_; }

 private:
  int n_ = 0;
  double off_ = 0.0;
  std::vector<double> cp_;
  std::vector<double> diag_;
};

// Cyclic constant-coefficient tridiagonal system via Sherman-Morrison.
class CyclicTridiagonal {
 public:
  CyclicTridiagonal() = default;
  CyclicTridiagonal(int n, double diag, double off) : n_(n), off_(off) {
    double gamma = -diag;
    core_ = Tridiagonal(n, diag, off, diag - gamma, diag - off * off / gamma);
    gamma_ = gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = off;
    q_.resize(n);
    core_.solve(u.data(), q_.data());
    denom_ = 1.0 + q_[0] + (off / gamma) * q_[n - 1];
  }

  void solve(const double* r, double* z) const {
    core_.solve(r, z);
    double vy = z[0] + (off_ / gamma_) * z[n_ - 1];
    double f = vy / denom_;
    for (int i = 0; i < n_; ++i) z[i] -= f * q_[i];
  }

 private:
  int n_ = 0;
  double off_ = 0.0, gamma_ = 0.0, denom_ = 1.0;
  Tridiagonal core_;
  std::vector<double> q_;
};

// Direct solver for the singular periodic problem (kappa/h)(2z_i - z_{i-1} -
// z_{i+1}) = r_i on mean-zero data: integrate the flux differences twice.
inline void periodic_poisson_1d(int n, double h_over_kappa, const double* r, double* z) {
  double mean_r = 0.0;
  for (int i = 0; i < n; ++i) mean_r += r[i];
  mean_r /= n;

  // d_i = z_{i+1} - z_i = c - h/kappa * cumsum(r)
  double cum = 0.0, cum_sum = 0.0;
  std::vector<double> d(n);
  for (int i = 0; i < n; ++i) {
    cum += h_over_kappa * (r[i] - mean_r);
    d[i] = -cum;
    cum_sum += d[i];
  }
  double c = -cum_sum / n;
  z[0] = 0.0;
  for (int i = 0; i < n - 1; ++i) z[i + 1] = z[i] + d[i] + c;
  double mean_z = 0.0;
  for (int i = 0; i < n; ++i) mean_z += z[i];
  mean_z /= n;
  for (int i = 0; i < n; ++i) z[i] -= mean_z;
}

enum class BoundaryKind { periodic, dirichlet };

// Eigen-decomposition of the 1D stencil [-1, 2, -1] for one axis; dense basis
// used only by the 2D solver.
struct AxisEigenBasis {
  int n = 0;       // elements per axis
  int modes = 0;   // periodic: n, dirichlet: n-1
  std::vector<double> lambda;  // stencil eigenvalues per mode
  std::vector<double> q;       // row-major (point index) x (mode index)

  static AxisEigenBasis make(BoundaryKind bc, int n) {
    AxisEigenBasis b;
    b.n = n;
    if (bc == BoundaryKind::periodic) {
      b.modes = n;
      b.lambda.resize(n);
      b.q.assign(static_cast<std::size_t>(n) * n, 0.0);
      int col = 0;
      auto set = [&](int c, int j, double v) { b.q[static_cast<std::size_t>(j) * n + c] = v; };
      for (int j = 0; j < n; ++j) set(col, j, 1.0 / std::sqrt(double(n)));
      b.lambda[col++] = 0.0;
      for (int k = 1; 2 * k < n; ++k) {
        double lam = 2.0 - 2.0 * std::cos(two_pi_() * k / n);
        for (int j = 0; j < n; ++j) set(col, j, std::sqrt(2.0 / n) * std::cos(two_pi_() * k * j / n));
        b.lambda[col++] = lam;
        for (int j = 0; j < n; ++j) set(col, j, std::sqrt(2.0 / n) * std::sin(two_pi_() * k * j / n));
        b.lambda[col++] = lam;
      }
      if (n % 2 == 0) {
        for (int j = 0; j < n; ++j) set(col, j, (j % 2 == 0 ? 1.0 : -1.0) / std::sqrt(double(n)));
        b.lambda[col++] = 4.0;
      }
    } else {
      int m = n - 1;
      b.modes = m;
      b.lambda.resize(m);
      b.q.assign(static_cast<std::size_t>(m) * m, 0.0);
      for (int k = 0; k < m; ++k) {
        b.lambda[k] = 2.0 - 2.0 * std::cos(std::numbers::pi * (k + 1) / n);
        for (int j = 0; j < m; ++j)
          b.q[static_cast<std::size_t>(j) * m + k] =
              std::sqrt(2.0 / n) * std::sin(std::numbers::pi * (k + 1) * (j + 1) / n);
      }
    }
    return b;
  }

 private:
  static double two_pi_() { return 2.0 * std::numbers::pi; }
};

// Direct solver for (beta h^N I + kappa L) z = r where L is the FEM-scaled
// discrete Laplacian h^(N-2) sum of axis stencils, with periodic or Dirichlet
// boundary.  For periodic beta = 0 the constant mode of r is projected out and
// z is returned mean-zero.
//
// Layouts: periodic stores n values per axis; Dirichlet stores n+1 nodal
// values per axis with the boundary entries held at zero.
template <int N>
class ShiftedLaplaceSolver {
 public:
  ShiftedLaplaceSolver(BoundaryKind bc, int n, double beta, double kappa = 1.0)
      : bc_(bc), n_(n), beta_(beta), kappa_(kappa) {
    double h = 1.0 / n;
    if constexpr (N == 1) {
      double diag_shift = beta * h;           // lumped mass
      double off = -kappa_ / h;
      double diag = diag_shift + 2.0 * kappa_ / h;
      if (bc == BoundaryKind::dirichlet) {
        tri_ = Tridiagonal(n - 1, diag, off);
      } else if (beta > 0.0) {
        cyc_ = CyclicTridiagonal(n, diag, off);
      }
    } else {
      basis_ = AxisEigenBasis::make(bc, n);
      // per x-mode 1D solve in y: (beta h^2 + kappa lam_k) I + kappa stencil_y
      mode_tri_.resize(basis_.modes);
      mode_cyc_.resize(basis_.modes);
      for (int k = 0; k < basis_.modes; ++k) {
        double shift = beta * h * h + kappa_ * basis_.lambda[k];
        double diag = shift + 2.0 * kappa_;
        double off = -kappa_;
        if (bc == BoundaryKind::dirichlet)
          mode_tri_[k] = Tridiagonal(n - 1, diag, off);
        else if (shift > 0.0)
          mode_cyc_[k] = std::make_unique<CyclicTridiagonal>(n, diag, off);
        // shift == 0 (k = 0, beta = 0): handled by periodic_poisson_1d
      }
    }
  }

  long size() const {
    long m = 1;
    int pts = bc_ == BoundaryKind::periodic ? n_ : n_ + 1;
    for (int i = 0; i < N; ++i) m *= pts;
    return m;
  }

  void solve(const std::vector<double>& r, std::vector<double>& z) const {
    z.assign(r.size(), 0.0);
    double h = 1.0 / n_;
    if constexpr (N == 1) {
      if (bc_ == BoundaryKind::dirichlet) {
        tri_.solve(r.data() + 1, z.data() + 1);
        z[0] = z[n_] = 0.0;
      } else if (beta_ > 0.0) {
        cyc_.solve(r.data(), z.data());
      } else {
        periodic_poisson_1d(n_, h / kappa_, r.data(), z.data());
      }
    } else {
      solve_2d(r, z);
    }
  }

 private:
  void solve_2d(const std::vector<double>& r, std::vector<double>& z) const {
    int pts = bc_ == BoundaryKind::periodic ? n_ : n_ + 1;
    int m = basis_.modes;
    int y0 = bc_ == BoundaryKind::periodic ? 0 : 1;
    int ny = bc_ == BoundaryKind::periodic ? n_ : n_ - 1;
    int x0 = y0;

    // forward transform in x: hat[k + m*jy] = sum_j Q[j][k] r[x0+j, y0+jy]
    std::vector<double> hat(static_cast<std::size_t>(m) * ny, 0.0);
    for (int j = 0; j < m; ++j) {
      const double* qrow = &basis_.q[static_cast<std::size_t>(j) * m];
      for (int jy = 0; jy < ny; ++jy) {
        double rv = r[(x0 + j) + static_cast<std::size_t>(pts) * (y0 + jy)];
        if (rv == 0.0) continue;
        double* hcol = &hat[static_cast<std::size_t>(jy) * m];
        for (int k = 0; k < m; ++k) hcol[k] += qrow[k] * rv;
      }
    }

    // per-mode solve in y
    std::vector<double> rhs(ny), sol(ny);
    std::vector<double> out(hat.size(), 0.0);
    for (int k = 0; k < m; ++k) {
      for (int jy = 0; jy < ny; ++jy) rhs[jy] = hat[static_cast<std::size_t>(jy) * m + k];
      if (bc_ == BoundaryKind::dirichlet) {
        mode_tri_[k].solve(rhs.data(), sol.data());
      } else if (mode_cyc_[k]) {
        mode_cyc_[k]->solve(rhs.data(), sol.data());
      } else {
        periodic_poisson_1d(n_, 1.0 / kappa_, rhs.data(), sol.data());
      }
      for (int jy = 0; jy < ny; ++jy) out[static_cast<std::size_t>(jy) * m + k] = sol[jy];
    }

    // backward transform
    for (int j = 0; j < m; ++j) {
      const double* qrow = &basis_.q[static_cast<std::size_t>(j) * m];
      for (int jy = 0; jy < ny; ++jy) {
        const double* ocol = &out[static_cast<std::size_t>(jy) * m];
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += qrow[k] * ocol[k];
        z[(x0 + j) + static_cast<std::size_t>(pts) * (y0 + jy)] = s;
      }
    }
  }

  BoundaryKind bc_;
  int n_;
  double beta_, kappa_;
  Tridiagonal tri_;
  CyclicTridiagonal cyc_;
  AxisEigenBasis basis_;
  std::vector<Tridiagonal> mode_tri_;
  std::vector<std::unique_ptr<CyclicTridiagonal>> mode_cyc_;
};

}  // namespace homog

#endif  // HOMOG_LINEAR_SOLVER_HPP
