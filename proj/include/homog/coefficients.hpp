#ifndef HOMOG_COEFFICIENTS_HPP
#define HOMOG_COEFFICIENTS_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "homog/common.hpp"

namespace homog {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// One truncated-Fourier mode of a periodic coefficient.
template <int N>
struct FourierMode {
  std::array<int, N> k{};
  double cos_amp = 0.0;
  double sin_amp = 0.0;
};

// Scalar Y-periodic coefficient given by a finite Fourier sum.
template <int N>
struct SpatialCoefficient {
  double base = 1.0;
  std::vector<FourierMode<N>> modes;

  double eval(const Vec<N>& y) const {
    double s = base;
    for (const auto& m : modes) {
      double phase = 0.0;
      for (int i = 0; i < N; ++i) phase += m.k[i] * y[i];
      phase *= two_pi;
      s += m.cos_amp * std::cos(phase) + m.sin_amp * std::sin(phase);
    }
    return s;
  }

  bool constant() const { return modes.empty(); }

  double lower_bound() const { return base - amplitude_sum(); }
  double upper_bound() const { return base + amplitude_sum(); }

  double amplitude_sum() const {
    double a = 0.0;
    for (const auto& m : modes) a += std::hypot(m.cos_amp, m.sin_amp);
    return a;
  }
};

// Scalar T0-periodic coefficient, same representation in one variable.
struct TemporalCoefficient {
  double base = 1.0;
  std::vector<FourierMode<1>> modes;

  double eval(double tau) const {
    double s = base;
    for (const auto& m : modes) {
      double phase = two_pi * m.k[0] * tau;
      s += m.cos_amp * std::cos(phase) + m.sin_amp * std::sin(phase);
    }
    return s;
  }

  bool constant() const { return modes.empty(); }

  double amplitude_sum() const {
    double a = 0.0;
    for (const auto& m : modes) a += std::hypot(m.cos_amp, m.sin_amp);
    return a;
  }

  double lower_bound() const { return base - amplitude_sum(); }
  double upper_bound() const { return base + amplitude_sum(); }

  // |c(t) - c(s)| <= L |t - s| with L the sum of mode slopes.
  double lipschitz_bound() const {
    double l = 0.0;
    for (const auto& m : modes) l += two_pi * std::abs(m.k[0]) * std::hypot(m.cos_amp, m.sin_amp);
    return l;
  }
};

// Product coefficient c(y, tau) = c_space(y) * c_time(tau).
template <int N>
struct SeparableCoefficient {
  SpatialCoefficient<N> space;
  TemporalCoefficient time;

  double eval(const Vec<N>& y, double tau) const { return space.eval(y) * time.eval(tau); }
  bool time_dependent() const { return !time.constant(); }
  double lower_bound() const { return space.lower_bound() * time.lower_bound(); }
  double upper_bound() const { return space.upper_bound() * time.upper_bound(); }
};

// Piecewise-constant coefficient on a k_space^N x k_time sub-lattice of the
// unit space-time cell.  Sub-cells are half-open [lower, upper) so evaluation
// on internal boundaries is deterministic.
template <int N>
struct CheckerboardCoefficient {
  int k_space = 2;
  int k_time = 1;
  std::vector<double> values;  // layout: x fastest, then y, then tau

  int cell_count() const {
    int c = k_time;
    for (int i = 0; i < N; ++i) c *= k_space;
    return c;
  }

  double eval(const Vec<N>& y, double tau) const {
    int idx = 0;
    int stride = 1;
    for (int i = 0; i < N; ++i) {
      int c = static_cast<int>(y[i] * k_space);
      if (c >= k_space) c = k_space - 1;
      if (c < 0) c = 0;
      idx += c * stride;
      stride *= k_space;
    }
    int ct = static_cast<int>(tau * k_time);
    if (ct >= k_time) ct = k_time - 1;
    if (ct < 0) ct = 0;
    idx += ct * stride;
    return values[idx];
  }

  bool time_dependent() const {
    if (k_time <= 1) return false;
    int per_slice = cell_count() / k_time;
    for (int c = 0; c < per_slice; ++c)
      for (int t = 1; t < k_time; ++t)
        if (values[c + t * per_slice] != values[c]) return true;
    return false;
  }

  double lower_bound() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::min(m, v);
    return m;
  }
  double upper_bound() const {
    double m = values.empty() ? 0.0 : values[0];
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

}  // namespace homog

#endif  // HOMOG_COEFFICIENTS_HPP
