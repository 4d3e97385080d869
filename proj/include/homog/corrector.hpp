#ifndef HOMOG_CORRECTOR_HPP
#define HOMOG_CORRECTOR_HPP

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "homog/flux_table.hpp"
#include "homog/mesh_average.hpp"

namespace homog {

// Cell solutions keyed by the quantized frozen gradient.  Concurrent
// insert-or-get; duplicate solves of the same key are permitted (solves are
// pure) and the first inserted value wins.
template <int N>
class CellSolutionCache {
 public:
  CellSolutionCache(const FluxModel<N>& model, double mu, const CellGrid& grid,
                    const SolverOptions& opts, double quantization,
                    std::size_t budget = 1 << 16)
      : model_(&model), mu_(mu), grid_(grid), opts_(opts), dxi_(quantization), budget_(budget) {
    if (dxi_ < 0.0) throw std::invalid_argument("cell cache: quantization must be >= 0");
  }

  double quantization() const { return dxi_; }
  double mu() const { return mu_; }
  const CellGrid& grid() const { return grid_; }
  const FluxModel<N>& model() const { return *model_; }

  // When disabled, lookups of gradients without a cached solution throw
  // instead of solving.
  void set_solving_enabled(bool enabled) { solve_enabled_ = enabled; }

  Vec<N> quantize(const Vec<N>& xi) const {
    if (dxi_ == 0.0) return xi;
    Vec<N> q;
    for (int i = 0; i < N; ++i) q[i] = dxi_ * std::round(xi[i] / dxi_);
    return q;
  }

  std::shared_ptr<const CellSolution<N>> get(const Vec<N>& xi) {
    Vec<N> q = quantize(xi);
    Key key = make_key(q);
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) return it->second;
      if (!solve_enabled_)
        throw std::runtime_error("cell solution unavailable: cache miss with solving disabled");
      if (entries_.size() >= budget_)
        throw ResourceError("cell cache budget exceeded (" + std::to_string(entries_.size()) +
                                " distinct quantized gradients)",
                            entries_.size());
    }
    auto sol = std::make_shared<CellSolution<N>>(effective_flux(*model_, mu_, q, grid_, opts_).solution);
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, sol);
    return it->second;
  }

  std::size_t size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
  }

  std::vector<std::shared_ptr<const CellSolution<N>>> snapshot() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::shared_ptr<const CellSolution<N>>> out;
    out.reserve(entries_.size());
    for (const auto& [k, v] : entries_) out.push_back(v);
    return out;
  }

 private:
  using Key = std::array<std::int64_t, N>;

  Key make_key(const Vec<N>& q) const {
    Key k{};
    for (int i = 0; i < N; ++i) {
      if (dxi_ == 0.0) {
        double x = q[i] == 0.0 ? 0.0 : q[i];  // collapse -0
        std::int64_t bits;
        static_assert(sizeof bits == sizeof x);
        std::memcpy(&bits, &x, sizeof bits);
        k[i] = bits;
      } else {
        k[i] = static_cast<std::int64_t>(std::llround(q[i] / dxi_));
      }
    }
    return k;
  }

  const FluxModel<N>* model_;
  double mu_;
  CellGrid grid_;
  SolverOptions opts_;
  double dxi_;
  std::size_t budget_;
  bool solve_enabled_ = true;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::shared_ptr<const CellSolution<N>>> entries_;
};

namespace detail {

// Cell-grid element containing the wrapped spatial point y.
template <int N>
long cell_element_of(const CellGrid& g, const Vec<N>& y) {
  long e = 0;
  long stride = 1;
  for (int i = 0; i < N; ++i) {
    int c = static_cast<int>(y[i] * g.n_space);
    c = std::min(std::max(c, 0), g.n_space - 1);
    e += c * stride;
    stride *= g.n_space;
  }
  return e;
}

// Nearest stored time slice for the wrapped cell time tau.
template <int N>
int slice_of(const CellSolution<N>& sol, double tau) {
  int s = sol.slices();
  if (s == 1) return 0;
  if (sol.regime == CellRegime::elliptic_parametric) {
    // slices at midpoints (k + 1/2)/s: containing interval = nearest midpoint
    int k = static_cast<int>(tau * s);
    return std::min(std::max(k, 0), s - 1);
  }
  // parabolic slices at k/s for k = 1..s; slice s holds tau = 0 == 1
  int k = static_cast<int>(std::lround(tau * s));
  if (k <= 0 || k > s) k = s;
  return k - 1;
}

}  // namespace detail

// Dv evaluated at the oscillation argument (x/eps mod 1, t/eps^mu mod 1)
// with element-constant gradients in y and nearest-slice lookup in tau.
template <int N>
Vec<N> corrector_gradient(const CellSolution<N>& sol, const Vec<N>& y_wrapped, double tau_wrapped) {
  int s = detail::slice_of(sol, tau_wrapped);
  return sol.grad_at(s, detail::cell_element_of<N>(sol.grid, y_wrapped));
}

// p_eps(x, t, xi) = xi + Dv(x/eps mod 1, t/eps^mu mod 1); the cell solution is
// taken at the quantized gradient, the affine part keeps the exact xi.
template <int N>
Vec<N> corrector_eval(CellSolutionCache<N>& cache, const Vec<N>& x, double t, const Vec<N>& xi,
                      const SpaceTimeGrid<N>& grid) {
  auto sol = cache.get(xi);
  Vec<N> y;
  for (int i = 0; i < N; ++i) y[i] = wrap_unit(x[i] / grid.epsilon);
  double tau = wrap_unit(t / grid.time_cell_length());
  return xi + corrector_gradient(*sol, y, tau);
}

// Oscillating corrector field p_eps(.,., M_eps Du) assembled cell by cell:
// the mesh average is quantized to the dxi-lattice, one cell problem is
// solved per distinct quantized value, and the local gradient field is
// composed with the exact cell mean.  distinct_values, when given, receives
// the number of distinct quantized gradients this assembly touched.
template <int N>
DiscreteField<N> assemble_corrector_field(const DiscreteField<N>& Du, CellSolutionCache<N>& cache,
                                          std::size_t* distinct_values = nullptr) {
  const SpaceTimeGrid<N>& g = Du.grid;
  DiscreteField<N> MDu = mesh_average(Du);
  DiscreteField<N> out(g);

  double eps = g.epsilon;
  double tlen = g.time_cell_length();
  int s_cells = g.spatial_cells();
  std::vector<std::vector<long>> cell_elems(s_cells);
  for (long e = 0; e < g.elements(); ++e) cell_elems[g.spatial_cell_of_element(e)].push_back(e);

  // oscillation argument per element, shared by all time steps
  std::vector<Vec<N>> y_of_elem(g.elements());
  for (long e = 0; e < g.elements(); ++e) {
    Vec<N> xc = g.element_center(e);
    for (int i = 0; i < N; ++i) y_of_elem[e][i] = wrap_unit(xc[i] / eps);
  }

  std::set<std::array<double, N>> seen;
  auto fill_cell = [&](int k_first, int k_last, const std::vector<long>& elems) {
    Vec<N> xi = MDu.at(k_first, elems.front());
    auto sol = cache.get(xi);
    seen.insert(cache.quantize(xi).v);
    for (int k = k_first; k <= k_last; ++k) {
      double tau = wrap_unit(k * g.dt() / tlen);
      for (long e : elems) out.at(k, e) = xi + corrector_gradient(*sol, y_of_elem[e], tau);
    }
  };

  for (int j = 0; j < g.time_cells(); ++j) {
    int k_first = g.time_cell_first_step(j);
    int k_last = std::min(g.time_cell_last_step(j), g.n_t);
    if (k_last < k_first) continue;
    for (int ci = 0; ci < s_cells; ++ci) fill_cell(k_first, k_last, cell_elems[ci]);
  }
  // trailing partial time cell: M_eps is zero there
  int sliver_first = g.time_cells() >= 1 ? g.time_cell_last_step(g.time_cells() - 1) + 1 : 1;
  if (sliver_first <= g.n_t)
    for (int ci = 0; ci < s_cells; ++ci) fill_cell(sliver_first, g.n_t, cell_elems[ci]);

  if (distinct_values) *distinct_values = seen.size();
  return out;
}

// Remainder r_eps = Du_eps - p_eps(.,., M_eps Du) and its L^p norm.
template <int N>
std::pair<DiscreteField<N>, double> remainder(const DiscreteField<N>& Du_fine,
                                              const DiscreteField<N>& corrector_field, double p) {
  require_same_grid(Du_fine, corrector_field, "remainder");
  DiscreteField<N> r(Du_fine.grid);
  for (std::size_t i = 0; i < r.values.size(); ++i)
    r.values[i] = Du_fine.values[i] - corrector_field.values[i];
  double norm = r.norm_lp(p);
  return {std::move(r), norm};
}

// Numerical counterparts of the corrector estimates: the cell L^p bound, the
// empirical xi-continuity constant, the uniform bound of the composed field,
// and higher-integrability probes at fixed exponents.
struct CorrectorDiagnostics {
  double lp_bound_ratio = 0.0;
  double xi_continuity_C = 0.0;
  double uniform_bound = 0.0;
  std::map<std::string, double> higher_integrability_probe;  // eta -> ratio

  nlohmann::json to_json() const {
    nlohmann::json probe = nlohmann::json::object();
    for (const auto& [k, v] : higher_integrability_probe) probe[k] = v;
    return {{"lp_bound_ratio", lp_bound_ratio},
            {"xi_continuity_C", xi_continuity_C},
            {"uniform_bound", uniform_bound},
            {"higher_integrability_probe", probe}};
  }
};

template <int N>
double cell_lp_mean(const CellSolution<N>& sol, double p) {
  double w = std::pow(sol.grid.h(), N) / sol.slices();
  double s = 0.0;
  for (int sl = 0; sl < sol.slices(); ++sl)
    for (long e = 0; e < sol.elements(); ++e) s += w * std::pow(sol.p_at(sl, e).norm(), p);
  return s;
}

template <int N>
CorrectorDiagnostics corrector_diagnostics(const CellSolutionCache<N>& cache,
                                           const DiscreteField<N>& corrector_field,
                                           const StructureConstants& sc) {
  CorrectorDiagnostics d;
  auto sols = cache.snapshot();
  const double p = sc.p;
  const double alpha = sc.alpha;

  for (const auto& sol : sols) {
    double ratio = cell_lp_mean(*sol, p) / (1.0 + std::pow(sol->xi.norm(), p));
    d.lp_bound_ratio = std::max(d.lp_bound_ratio, ratio);
    for (double eta : {0.1, 0.5}) {
      double r = cell_lp_mean(*sol, p + eta) / (1.0 + std::pow(sol->xi.norm(), p + eta));
      char key[32];
      std::snprintf(key, sizeof key, "eta_%g", eta);
      auto& slot = d.higher_integrability_probe[key];
      slot = std::max(slot, r);
    }
  }

  // pairwise xi-continuity over the cached solutions (same slicing per cache)
  for (std::size_t i = 0; i < sols.size(); ++i) {
    for (std::size_t j = i + 1; j < sols.size(); ++j) {
      const auto& a = *sols[i];
      const auto& b = *sols[j];
      Vec<N> dxi = a.xi - b.xi;
      double dn = dxi.norm();
      if (dn == 0.0 || a.slices() != b.slices()) continue;
      double w = std::pow(a.grid.h(), N) / a.slices();
      double lhs = 0.0;
      for (int sl = 0; sl < a.slices(); ++sl)
        for (long e = 0; e < a.elements(); ++e)
          lhs += w * std::pow((a.p_at(sl, e) - b.p_at(sl, e)).norm(), p);
      double denom = std::pow(1.0 + std::pow(a.xi.norm(), p) + std::pow(b.xi.norm(), p),
                              (p - 1.0 - alpha) / (p - alpha)) *
                     std::pow(dn, p / (p - alpha));
      d.xi_continuity_C = std::max(d.xi_continuity_C, lhs / denom);
    }
  }

  d.uniform_bound = corrector_field.norm_lp_pow(p);
  return d;
}

}  // namespace homog

#endif  // HOMOG_CORRECTOR_HPP
