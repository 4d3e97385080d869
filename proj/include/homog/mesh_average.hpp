#ifndef HOMOG_MESH_AVERAGE_HPP
#define HOMOG_MESH_AVERAGE_HPP

#include "homog/fields.hpp"

namespace homog {

namespace detail {

// Mean of identical values short-circuits to the value itself, which makes
// the averaging operator idempotent bit-for-bit.
template <int N>
Vec<N> cell_mean(const std::vector<const Vec<N>*>& samples) {
  bool all_equal = true;
  for (const auto* s : samples)
    if (!(*s == *samples[0])) {
      all_equal = false;
      break;
    }
  if (all_equal) return *samples[0];
  Vec<N> sum{};
  for (const auto* s : samples) sum += *s;
  return sum * (1.0 / static_cast<double>(samples.size()));
}

}  // namespace detail

// Piecewise-constant projection onto eps-cell means: on each interior cell
// Y^i_eps x T^j_eps the value is the discrete cell mean; samples falling in
// the trailing partial time cell carry the value zero.
template <int N>
DiscreteField<N> mesh_average(const DiscreteField<N>& phi) {
  const SpaceTimeGrid<N>& g = phi.grid;
  g.validate();
  if (static_cast<long>(phi.values.size()) != g.elements() * g.n_t)
    throw std::invalid_argument("mesh_average: field does not match its grid");

  DiscreteField<N> out(g);
  int s_cells = g.spatial_cells();
  int t_cells = g.time_cells();

  // element ids per spatial cell (computed once)
  std::vector<std::vector<long>> cell_elems(s_cells);
  for (long e = 0; e < g.elements(); ++e) cell_elems[g.spatial_cell_of_element(e)].push_back(e);

  std::vector<const Vec<N>*> samples;
  for (int j = 0; j < t_cells; ++j) {
    int k_first = g.time_cell_first_step(j);
    int k_last = std::min(g.time_cell_last_step(j), g.n_t);
    for (int ci = 0; ci < s_cells; ++ci) {
      samples.clear();
      for (int k = k_first; k <= k_last; ++k)
        for (long e : cell_elems[ci]) samples.push_back(&phi.at(k, e));
      if (samples.empty()) continue;
      Vec<N> mean = detail::cell_mean<N>(samples);
      for (int k = k_first; k <= k_last; ++k)
        for (long e : cell_elems[ci]) out.at(k, e) = mean;
    }
  }
  // steps beyond the last whole time cell stay zero (boundary sliver)
  return out;
}

// ||M_eps phi - phi|| in the discrete L^p norm for a nested list of epsilons
// evaluated on the fixed grid of phi.
template <int N>
std::vector<double> identity_approximation_check(const DiscreteField<N>& phi,
                                                 const std::vector<double>& epsilons,
                                                 double p = 2.0) {
  if (epsilons.empty()) throw std::invalid_argument("identity_approximation_check: empty list");
  long prev_cells = 0, prev_tcells = 0;
  for (double eps : epsilons) {
    double inv = 1.0 / eps;
    if (std::abs(inv - std::lround(inv)) > 1e-9)
      throw std::invalid_argument("identity_approximation_check: 1/epsilon must be integral");
    long cells = std::lround(inv);
    if (phi.grid.n_x % cells != 0)
      throw std::invalid_argument("identity_approximation_check: epsilon does not divide the grid");
    if (prev_cells != 0 && cells % prev_cells != 0)
      throw std::invalid_argument("identity_approximation_check: epsilon list is not nested");
    prev_cells = cells;

    double tlen = std::pow(eps, phi.grid.mu);
    double tc = phi.grid.T / tlen;
    long tcells = std::lround(tc);
    if (std::abs(tc - tcells) > 1e-9 || tcells < 1 || phi.grid.n_t % tcells != 0)
      throw std::invalid_argument(
          "identity_approximation_check: eps^mu partition does not divide the time grid");
    if (prev_tcells != 0 && tcells % prev_tcells != 0)
      throw std::invalid_argument("identity_approximation_check: epsilon list is not nested in time");
    prev_tcells = tcells;
  }

  std::vector<double> norms;
  for (double eps : epsilons) {
    DiscreteField<N> phi_eps = phi;
    phi_eps.grid.epsilon = eps;
    DiscreteField<N> avg = mesh_average(phi_eps);
    double w = phi.grid.dt() * std::pow(phi.grid.h(), N);
    double s = 0.0;
    for (std::size_t i = 0; i < avg.values.size(); ++i)
      s += std::pow((avg.values[i] - phi.values[i]).norm(), p);
    norms.push_back(std::pow(w * s, 1.0 / p));
  }
  return norms;
}

}  // namespace homog

#endif  // HOMOG_MESH_AVERAGE_HPP
