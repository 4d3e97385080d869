#ifndef HOMOG_COMMON_HPP
#define HOMOG_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace homog {

// Small fixed-size vector for spatial dimension N (N = 1 or 2 throughout).
template <int N>
struct Vec {
  std::array<double, N> v{};

  Vec() = default;
  explicit Vec(double x) {
    static_assert(N >= 1);
    v[0] = x;
    for (int i = 1; i < N; ++i) v[i] = 0.0;
  }
  Vec(double x, double y) {
    static_assert(N == 2);
    v[0] = x;
    v[1] = y;
  }

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }

  Vec operator+(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.v[i] = v[i] + o.v[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.v[i] = v[i] - o.v[i];
    return r;
  }
  Vec operator*(double s) const {
    Vec r;
    for (int i = 0; i < N; ++i) r.v[i] = v[i] * s;
    return r;
  }
  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < N; ++i) v[i] += o.v[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < N; ++i) v[i] -= o.v[i];
    return *this;
  }
  bool operator==(const Vec& o) const { return v == o.v; }

  double norm() const { return std::sqrt(dot(*this, *this)); }

  static double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += a.v[i] * b.v[i];
    return s;
  }

  bool finite() const {
    for (int i = 0; i < N; ++i)
      if (!std::isfinite(v[i])) return false;
    return true;
  }
};

template <int N>
inline Vec<N> operator*(double s, const Vec<N>& a) {
  return a * s;
}

// Wrap a coordinate into [0,1).  For arguments already shifted by an exact
// integer the subtraction is exact (Sterbenz), so periodic extension is
// arithmetic, not approximate.
inline double wrap_unit(double s) {
  double w = s - std::floor(s);
  if (w >= 1.0) w = 0.0;  // floor(s) == s for negative -0-ish edge cases
  return w;
}

template <int N>
inline Vec<N> wrap_unit(const Vec<N>& y) {
  Vec<N> r;
  for (int i = 0; i < N; ++i) r[i] = wrap_unit(y[i]);
  return r;
}

// Configuration / input validation problem: CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Nonlinear or linear solve failed to reach tolerance: CLI exit code 3.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& msg, std::vector<double> history, int step = -1)
      : std::runtime_error(msg), residual_history(std::move(history)), step_index(step) {}
  std::vector<double> residual_history;
  int step_index;
};

// Filesystem problem: CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cell-solution cache exceeded its configured budget.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& msg, std::size_t count)
      : std::runtime_error(msg), entry_count(count) {}
  std::size_t entry_count;
};

// Deterministic uniform sampler.  The raw engine is std::mt19937_64; the
// conversion to doubles is done by hand so streams do not depend on the
// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    // xorshift* keeps the stream implementation-defined-free as well.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1DULL;
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  template <int N>
  Vec<N> uniform_vec(double a, double b) {
    Vec<N> r;
    for (int i = 0; i < N; ++i) r[i] = uniform(a, b);
    return r;
  }

 private:
  std::uint64_t state_;
};

inline double power_abs(double s, double e) { return s == 0.0 ? 0.0 : std::pow(s, e); }

// |g|^(p-2) g, the p-power nonlinearity; p == 2 short-circuits to identity.
template <int N>
inline Vec<N> p_power(const Vec<N>& g, double p) {
  if (p == 2.0) return g;
  double m = g.norm();
  if (m == 0.0) return Vec<N>{};
  return g * std::pow(m, p - 2.0);
}

}  // namespace homog

#endif  // HOMOG_COMMON_HPP
