#ifndef HOMOG_GRIDS_HPP
#define HOMOG_GRIDS_HPP

#include <cmath>

#include "homog/common.hpp"

namespace homog {

// Uniform discretization of the unit space-time cell Y x T0.
struct CellGrid {
  int n_space = 32;  // elements per spatial axis, power of two
  int n_time = 8;    // time steps / quadrature nodes per unit period

  double h() const { return 1.0 / n_space; }
  double dtau() const { return 1.0 / n_time; }

  void validate() const {
    if (n_space < 4 || (n_space & (n_space - 1)) != 0)
      throw ConfigError("cell grid: n_space must be a power of two >= 4");
    if (n_time < 2) throw ConfigError("cell grid: n_time must be >= 2");
  }
};

// Uniform grid over Omega x (0, T) carrying the oscillation scale epsilon and
// the temporal exponent mu.  The spatial grid resolves the eps-cells exactly;
// the temporal eps^mu-partition may end with a partial cell, which is treated
// as boundary (excluded from the interior index set).
template <int N>
struct SpaceTimeGrid {
  int n_x = 32;  // elements per spatial axis
  int n_t = 32;  // time steps
  double T = 1.0;
  double epsilon = 0.25;
  double mu = 2.0;

  double h() const { return 1.0 / n_x; }
  double dt() const { return T / n_t; }

  int cells_per_axis() const { return static_cast<int>(std::lround(1.0 / epsilon)); }
  int elems_per_cell_axis() const { return n_x / cells_per_axis(); }

  double time_cell_length() const { return std::pow(epsilon, mu); }

  // Number of whole eps^mu-cells inside (0, T).
  int time_cells() const {
    double len = time_cell_length();
    int full = static_cast<int>(std::floor(T / len * (1.0 + 1e-12)));
    return std::max(full, 0);
  }

  // First time step (1-based, right-endpoint labeling) of temporal cell j.
  int time_cell_first_step(int j) const {
    return static_cast<int>(std::lround(j * time_cell_length() / dt())) + 1;
  }
  // Last time step of temporal cell j (inclusive).
  int time_cell_last_step(int j) const {
    return static_cast<int>(std::lround((j + 1) * time_cell_length() / dt()));
  }

  int spatial_cells() const {
    int c = 1;
    for (int i = 0; i < N; ++i) c *= cells_per_axis();
    return c;
  }

  long elements() const {
    long e = 1;
    for (int i = 0; i < N; ++i) e *= n_x;
    return e;
  }

  long nodes() const {
    long m = 1;
    for (int i = 0; i < N; ++i) m *= (n_x + 1);
    return m;
  }

  void validate() const {
    if (!(T > 0.0)) throw ConfigError("space-time grid: T must be positive");
    if (n_x < 2 || n_t < 1) throw ConfigError("space-time grid: n_x >= 2 and n_t >= 1 required");
    if (!(epsilon > 0.0) || !(epsilon <= 1.0)) throw ConfigError("space-time grid: epsilon must lie in (0, 1]");
    double inv = 1.0 / epsilon;
    if (std::abs(inv - std::lround(inv)) > 1e-9)
      throw ConfigError("space-time grid: 1/epsilon must be an integer");
    if (n_x % cells_per_axis() != 0)
      throw ConfigError("space-time grid: n_x must be a multiple of 1/epsilon");
    if (!(mu > 0.0)) throw ConfigError("space-time grid: mu must be positive");
    if (time_cells() >= 1) {
      for (int j = 0; j < time_cells(); ++j)
        if (time_cell_last_step(j) < time_cell_first_step(j))
          throw ConfigError("space-time grid: n_t too coarse for the eps^mu time partition");
    }
  }

  // Center of element e (multi-index decoded x fastest).
  Vec<N> element_center(long e) const {
    Vec<N> c;
    for (int i = 0; i < N; ++i) {
      c[i] = (static_cast<double>(e % n_x) + 0.5) * h();
      e /= n_x;
    }
    return c;
  }

  // Spatial cell index (flattened) containing element e.
  int spatial_cell_of_element(long e) const {
    int m = elems_per_cell_axis();
    int idx = 0;
    int stride = 1;
    for (int i = 0; i < N; ++i) {
      idx += static_cast<int>((e % n_x) / m) * stride;
      stride *= cells_per_axis();
      e /= n_x;
    }
    return idx;
  }
};

}  // namespace homog

#endif  // HOMOG_GRIDS_HPP
