#ifndef HOMOG_STUDY_HPP
#define HOMOG_STUDY_HPP

#include <cstdio>
#include <chrono>
#include <numeric>
#include <filesystem>

#include "homog/config_json.hpp"
#include "homog/corrector.hpp"
#include "homog/svg.hpp"

namespace homog {

inline constexpr const char* report_csv_header =
    "epsilon,grad_error_lp,averaged_error_lp,remainder_lp,energy_residual_fine,"
    "energy_residual_hom,cell_cache_entries,wall_time_s";

struct StudyRow {
  double epsilon = 0.0;
  double grad_error_lp = 0.0;
  double averaged_error_lp = 0.0;
  double remainder_lp = 0.0;
  double energy_residual_fine = 0.0;
  double energy_residual_hom = 0.0;
  std::size_t cell_cache_entries = 0;
  double wall_time_s = 0.0;
  double corrector_uniform_bound = 0.0;  // Lemma-5.1 diagnostic, not a CSV column
};

struct ConvergenceReport {
  std::vector<StudyRow> rows;
  int homogenized_solve_count = 0;

  std::string to_csv() const {
    std::string out = report_csv_header;
    out += "\n";
    char buf[256];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%zu,%.3f\n", r.epsilon,
                    r.grad_error_lp, r.averaged_error_lp, r.remainder_lp, r.energy_residual_fine,
                    r.energy_residual_hom, r.cell_cache_entries, r.wall_time_s);
      out += buf;
    }
    return out;
  }
};

// Nodal restriction of a trajectory onto a coarser nested grid, returning the
// element-midpoint gradient field on the coarse grid.
template <int N>
DiscreteField<N> restrict_gradient(const SolveResult<N>& fine, const SpaceTimeGrid<N>& coarse) {
  const SpaceTimeGrid<N>& ref = fine.grid;
  if (ref.n_x % coarse.n_x != 0 || ref.n_t % coarse.n_t != 0)
    throw std::invalid_argument("restrict_gradient: grids are not nested");
  int sx = ref.n_x / coarse.n_x;
  int st = ref.n_t / coarse.n_t;
  int cpts = coarse.n_x + 1;
  int rpts = ref.n_x + 1;

  DiscreteField<N> out(coarse);
  std::vector<double> sub(grid_points<N>(BoundaryKind::dirichlet, coarse.n_x));
  for (int k = 1; k <= coarse.n_t; ++k) {
    const std::vector<double>& state = fine.states[static_cast<std::size_t>(k) * st];
    for (long i = 0; i < static_cast<long>(sub.size()); ++i) {
      long r = i, src = 0, stride = 1;
      for (int a = 0; a < N; ++a) {
        src += (r % cpts) * sx * stride;
        stride *= rpts;
        r /= cpts;
      }
      sub[i] = state[src];
    }
    auto grads = element_gradients<N>(BoundaryKind::dirichlet, coarse.n_x, sub);
    for (long e = 0; e < coarse.elements(); ++e) out.at(k, e) = grads[e];
  }
  return out;
}

// Effective-flux evaluator for the homogenized solve of a study: the exact
// linear map for linear models, otherwise interpolation in a tabulated box.
template <int N>
struct HomogenizedFlux {
  EffectiveFluxEval<N> eval;
  std::shared_ptr<FluxTable<N>> table;  // kept alive for the evaluator
  std::array<Vec<N>, N> matrix{};       // linear path
};

template <int N>
HomogenizedFlux<N> build_homogenized_flux(const ExperimentConfig<N>& config, int threads = 1) {
  HomogenizedFlux<N> out;
  const FluxModel<N>& model = config.model;
  if (model.linear_in_xi()) {
    for (int a = 0; a < N; ++a) {
      Vec<N> e;
      e[a] = 1.0;
      out.matrix[a] = effective_flux(model, config.mu, e, config.cell_grid, config.options).b;
    }
    if constexpr (N == 1) {
      out.eval.linear_scalar = out.matrix[0][0];
      out.eval.b = [c = out.matrix[0][0]](const Vec<1>& xi) { return xi * c; };
    } else {
      auto m = out.matrix;
      out.eval.matrix.assign(m.begin(), m.end());
      out.eval.b = [m](const Vec<N>& xi) {
        Vec<N> r{};
        for (int a = 0; a < N; ++a) r += m[a] * xi[a];
        return r;
      };
    }
    return out;
  }
  if (!config.table)
    throw ConfigError(
        "study: nonlinear model requires a $.table box for the homogenized flux");
  auto [box, spacing] = *config.table;
  out.table = std::make_shared<FluxTable<N>>(tabulate_b(model, config.mu, box.first, box.second,
                                                        spacing, config.cell_grid, config.options,
                                                        threads));
  out.eval.b = [t = out.table](const Vec<N>& xi) { return eval_b(*t, xi); };
  return out;
}

inline void render_report_plots(const ConvergenceReport& report, const std::string& out_dir);

// The full convergence study: one homogenized solve on the finest grid, then
// per epsilon a fine solve, corrector assembly and remainder decomposition.
template <int N>
ConvergenceReport run_study(const ExperimentConfig<N>& config, std::ostream* log = nullptr,
                            int threads = 1) {
  if (config.epsilons.empty()) throw ConfigError("study: $.epsilons must be non-empty");
  const FluxModel<N>& model = config.model;
  const double p = model.p();

  StructureReport gate = check_structure(model, 20000, config.seed, 1e-12);
  if (!gate.pass)
    throw ConfigError("study: model failed the sampled structure check (worst margins " +
                      std::to_string(gate.monotonicity_margin) + ", " +
                      std::to_string(gate.continuity_margin) + ")");
  if (config.mu < 2.0 && model.time_dependent()) {
    if (!model.time_modulus())
      throw ConfigError("study: regime 0 < mu < 2 requires a time_modulus descriptor");
    TimeModulusReport tm = check_time_modulus(model, 4000, config.seed);
    if (!tm.pass) throw ConfigError("study: time-modulus gate failed");
  }

  // the homogenized solve is restricted onto every epsilon grid, so the
  // epsilon list must be spatially nested and the reference step count a
  // common multiple
  long finest_cells = std::lround(1.0 / config.epsilons.back());
  for (double eps : config.epsilons)
    if (finest_cells % std::lround(1.0 / eps) != 0)
      throw ConfigError("study: $.epsilons must be nested (each 1/eps divides the finest 1/eps)");

  ConvergenceReport report;
  std::string stage = "homogenized-flux";
  std::filesystem::create_directories(config.output_dir);

  try {
    HomogenizedFlux<N> hom_flux = build_homogenized_flux(config, threads);

    stage = "homogenized-solve";
    SpaceTimeGrid<N> ref_grid = config.grid_for(config.epsilons.back());
    for (double eps : config.epsilons)
      ref_grid.n_t = std::lcm<long>(ref_grid.n_t, config.grid_for(eps).n_t);
    ref_grid.validate();
    SolveResult<N> u_hom = solve_homogenized(config.problem, hom_flux.eval, ref_grid, config.options);
    report.homogenized_solve_count = 1;
    double energy_hom = energy_balance(u_hom);
    if (log)
      *log << "homogenized solve: 1 run on " << ref_grid.n_x << "x" << ref_grid.n_t
           << " grid, energy residual " << energy_hom << "\n";

    double dxi = config.quantization;
    if (dxi == 0.0) {
      double max_grad = 0.0;
      for (const auto& g : u_hom.gradient.values) max_grad = std::max(max_grad, g.norm());
      dxi = 0.05 * (1.0 + max_grad);
    }
    CellSolutionCache<N> cache(model, config.mu, config.cell_grid, config.options, dxi);

    auto run_eps = [&](double eps, StudyRow& row) {
      auto t0 = std::chrono::steady_clock::now();
      SpaceTimeGrid<N> grid = config.grid_for(eps);
      SolveResult<N> u_eps = solve_fine(config.problem, model, grid, config.options);
      DiscreteField<N> Du = restrict_gradient(u_hom, grid);
      DiscreteField<N> MDu = mesh_average(Du);
      std::size_t distinct = 0;
      DiscreteField<N> corr = assemble_corrector_field(Du, cache, &distinct);
      auto [r_eps, r_norm] = remainder(u_eps.gradient, corr, p);

      row.epsilon = eps;
      row.remainder_lp = r_norm;
      DiscreteField<N> diff(grid);
      for (std::size_t i = 0; i < diff.values.size(); ++i)
        diff.values[i] = u_eps.gradient.values[i] - Du.values[i];
      row.grad_error_lp = diff.norm_lp(p);
      for (std::size_t i = 0; i < diff.values.size(); ++i)
        diff.values[i] = u_eps.gradient.values[i] - MDu.values[i];
      row.averaged_error_lp = diff.norm_lp(p);
      row.energy_residual_fine = energy_balance(u_eps);
      row.energy_residual_hom = energy_hom;
      row.corrector_uniform_bound = corr.norm_lp_pow(p);
      row.cell_cache_entries = distinct;

      CorrectorDiagnostics diag = corrector_diagnostics(cache, corr, model.constants());
      char fname[128];
      std::snprintf(fname, sizeof fname, "%s/diagnostics_eps_%g.json", config.output_dir.c_str(),
                    eps);
      std::ofstream dj(fname);
      if (dj) dj << diag.to_json().dump(2) << "\n";

      auto t1 = std::chrono::steady_clock::now();
      row.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    };

    report.rows.resize(config.epsilons.size());
    stage = "fine-pipeline";
    if (threads <= 1 || config.epsilons.size() == 1) {
      for (std::size_t i = 0; i < config.epsilons.size(); ++i)
        run_eps(config.epsilons[i], report.rows[i]);
    } else {
      // per-epsilon pipelines are independent; rows are reduced in list order
      std::vector<std::future<void>> fut;
      for (std::size_t i = 0; i < config.epsilons.size(); ++i)
        fut.push_back(std::async(std::launch::async, [&, i] {
          run_eps(config.epsilons[i], report.rows[i]);
        }));
      for (auto& f : fut) f.get();
    }
  } catch (const std::exception& e) {
    // flush completed rows before reporting the failing stage
    std::ofstream csv(config.output_dir + "/report.csv");
    ConvergenceReport partial;
    for (const auto& r : report.rows)
      if (r.epsilon > 0.0) partial.rows.push_back(r);
    if (csv) csv << partial.to_csv();
    std::string msg = "study aborted during stage '" + stage + "': " + e.what();
    if (dynamic_cast<const ConfigError*>(&e)) throw ConfigError(msg);
    if (const auto* se = dynamic_cast<const SolverError*>(&e))
      throw SolverError(msg, se->residual_history, se->step_index);
    if (dynamic_cast<const std::out_of_range*>(&e)) throw std::out_of_range(msg);
    throw std::runtime_error(msg);
  }

  std::ofstream csv(config.output_dir + "/report.csv");
  if (!csv) throw IoError("cannot write " + config.output_dir + "/report.csv");
  csv << report.to_csv();
  csv.close();
  render_report_plots(report, config.output_dir);
  if (log) *log << "study: " << report.rows.size() << " epsilon rows, " << "cell cache entries "
                << (report.rows.empty() ? 0 : report.rows.back().cell_cache_entries) << "\n";
  return report;
}

inline void render_report_plots(const ConvergenceReport& report, const std::string& out_dir) {
  SvgSeries grad{"grad_error_lp", "#1f77b4", {}};
  SvgSeries rem{"remainder_lp", "#d62728", {}};
  for (const auto& r : report.rows) {
    grad.points.push_back({r.epsilon, r.grad_error_lp});
    rem.points.push_back({r.epsilon, r.remainder_lp});
  }
  write_loglog_chart(out_dir + "/convergence.svg", "gradient error and corrector remainder",
                     "epsilon", "L^p norm", {grad, rem});
}

inline ConvergenceReport read_report_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty report CSV");
  if (line != report_csv_header) throw ConfigError("report CSV header mismatch in '" + path + "'");
  ConvergenceReport rep;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    StudyRow r;
    unsigned long entries = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lu,%lf", &r.epsilon, &r.grad_error_lp,
                    &r.averaged_error_lp, &r.remainder_lp, &r.energy_residual_fine,
                    &r.energy_residual_hom, &entries, &r.wall_time_s) != 8)
      throw ConfigError("malformed report CSV row: " + line);
    r.cell_cache_entries = entries;
    rep.rows.push_back(r);
  }
  return rep;
}

}  // namespace homog

#endif  // HOMOG_STUDY_HPP
