#ifndef HOMOG_FIELDS_HPP
#define HOMOG_FIELDS_HPP

#include <cstdio>
#include <fstream>
#include <sstream>

#include "homog/grids.hpp"

namespace homog {

// Vector field sampled at element centers for time steps 1..n_t.
// Layout: values[(k-1) * elements + e] for step k, element e.
template <int N>
struct DiscreteField {
  SpaceTimeGrid<N> grid;
  std::vector<Vec<N>> values;

  DiscreteField() = default;
  explicit DiscreteField(const SpaceTimeGrid<N>& g) : grid(g), values(g.elements() * g.n_t) {}

  long elements() const { return grid.elements(); }
  int steps() const { return grid.n_t; }

  Vec<N>& at(int step, long elem) { return values[(step - 1) * elements() + elem]; }
  const Vec<N>& at(int step, long elem) const { return values[(step - 1) * elements() + elem]; }

  bool finite() const {
    for (const auto& v : values)
      if (!v.finite()) return false;
    return true;
  }

  // Discrete L^p(0,T; L^p(Omega)) norm: right-endpoint rectangle rule in time,
  // midpoint rule in space.
  double norm_lp(double p) const {
    double w = grid.dt() * std::pow(grid.h(), N);
    double s = 0.0;
    for (const auto& v : values) s += std::pow(v.norm(), p);
    return std::pow(w * s, 1.0 / p);
  }

  double norm_lp_pow(double p) const {
    double w = grid.dt() * std::pow(grid.h(), N);
    double s = 0.0;
    for (const auto& v : values) s += std::pow(v.norm(), p);
    return w * s;
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << (N == 1 ? "ix" : "ix,iy") << ",it";
    for (int c = 0; c < N; ++c) out << ",v" << c;
    out << "\n";
    char buf[64];
    for (int k = 1; k <= steps(); ++k) {
      for (long e = 0; e < elements(); ++e) {
        long r = e;
        for (int i = 0; i < N; ++i) {
          out << (r % grid.n_x) << ",";
          r /= grid.n_x;
        }
        out << k;
        const Vec<N>& v = at(k, e);
        for (int c = 0; c < N; ++c) {
          std::snprintf(buf, sizeof buf, ",%.17g", v[c]);
          out << buf;
        }
        out << "\n";
      }
    }
  }
};

template <int N>
void require_same_grid(const DiscreteField<N>& a, const DiscreteField<N>& b, const char* what) {
  const auto& g = a.grid;
  const auto& h = b.grid;
  if (g.n_x != h.n_x || g.n_t != h.n_t || g.T != h.T || g.epsilon != h.epsilon || g.mu != h.mu)
    throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

}  // namespace homog

#endif  // HOMOG_FIELDS_HPP
