// homog — command-line front end for structure checks, cell solves, effective
// flux tabulation, fine/homogenized solves and convergence studies.

#include <CLI11.hpp>

#include <iostream>

#include "homog/study.hpp"

namespace {

using namespace homog;

struct CliArgs {
  std::string config_path;
  std::string out_dir;  // overrides config output_dir when set
  int threads = 1;
  std::int64_t seed = -1;  // overrides config seed when >= 0
};

template <int N>
ExperimentConfig<N> load_typed(const CliArgs& args) {
  nlohmann::json j = load_config_file(args.config_path);
  auto cfg = ExperimentConfig<N>::parse(j);
  if (!args.out_dir.empty()) cfg.output_dir = args.out_dir;
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  return cfg;
}

template <int N>
int cmd_check_structure(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  StructureReport rep = check_structure(cfg.model, 100000, cfg.seed);
  std::printf("structure check: %s\n", rep.pass ? "pass" : "FAIL");
  std::printf("  bound margin (ii)        % .6e\n", rep.bound_margin);
  std::printf("  continuity margin (iv)   % .6e\n", rep.continuity_margin);
  std::printf("  monotonicity margin (v)  % .6e\n", rep.monotonicity_margin);
  bool modulus_ok = true;
  if (cfg.model.time_modulus()) {
    TimeModulusReport tm = check_time_modulus(cfg.model, 100000, cfg.seed);
    modulus_ok = tm.pass;
    std::printf("time modulus check: %s (worst margin % .6e)\n", tm.pass ? "pass" : "FAIL",
                tm.worst_margin);
  }
  return rep.pass && modulus_ok ? 0 : 1;
}

template <int N>
int cmd_cell_solve(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  auto result = effective_flux(cfg.model, cfg.mu, cfg.xi, cfg.cell_grid, cfg.options);
  std::printf("b(");
  for (int i = 0; i < N; ++i) std::printf("%s%g", i ? "," : "", cfg.xi[i]);
  std::printf(") = (");
  for (int i = 0; i < N; ++i) std::printf("%s%.6f", i ? ", " : "", result.b[i]);
  std::printf(")  regime=%s residual=%.3e energy_identity=%.3e\n",
              regime_name(result.solution.regime).c_str(), result.solution.residual_norm,
              energy_identity_check(result.solution, cfg.model));
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream js(cfg.output_dir + "/cell_solution.json");
  js << result.solution.to_json().dump(2) << "\n";
  result.solution.write_csv(cfg.output_dir + "/cell_solution.csv");
  return 0;
}

template <int N>
int cmd_tabulate(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  if (!cfg.table) throw ConfigError("tabulate requires a $.table section");
  auto [box, spacing] = *cfg.table;
  std::filesystem::create_directories(cfg.output_dir);
  std::string json_path = cfg.output_dir + "/flux_table.json";

  // cache reuse keyed by (model hash, mu, cell grid, tolerance)
  if (std::filesystem::exists(json_path)) {
    try {
      FluxTable<N> existing = load_table<N>(json_path);
      if (existing.mu == cfg.mu && existing.provenance.model_hash == cfg.model.hash() &&
          existing.provenance.grid.n_space == cfg.cell_grid.n_space &&
          existing.provenance.grid.n_time == cfg.cell_grid.n_time &&
          existing.provenance.residual_tol == cfg.options.residual_tol) {
        std::printf("existing table matches (model hash %016llx); skipping recomputation\n",
                    static_cast<unsigned long long>(existing.provenance.model_hash));
        return 0;
      }
    } catch (const std::exception&) {
      // unreadable or mismatched: recompute below
    }
  }

  FluxTable<N> table =
      tabulate_b(cfg.model, cfg.mu, box.first, box.second, spacing, cfg.cell_grid, cfg.options,
                 args.threads);
  save_table(table, json_path, cfg.output_dir + "/flux_table.csv");
  BEstimatesReport est = verify_b_estimates(table, cfg.model.constants(), 1000, cfg.seed);
  std::printf("tabulated %ld nodes (mu=%g); monotonicity margin % .6e (%s), empirical C %.6f\n",
              table.node_count(), cfg.mu, est.min_monotonicity_margin,
              est.pass ? "pass" : "FAIL", est.empirical_holder_constant);
  return 0;
}

template <int N>
int cmd_solve(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  SpaceTimeGrid<N> grid;
  grid.T = cfg.problem.T;
  grid.mu = cfg.mu;
  grid.epsilon = cfg.solve_kind == "fine" ? cfg.solve_epsilon : 1.0;
  grid.n_x = cfg.solve_n_x > 0 ? cfg.solve_n_x
                               : cfg.elements_per_cell * static_cast<int>(std::lround(1.0 / grid.epsilon));
  grid.n_t = cfg.solve_n_t > 0 ? cfg.solve_n_t : cfg.min_steps;
  grid.validate();

  SolveResult<N> result;
  if (cfg.solve_kind == "fine") {
    result = solve_fine(cfg.problem, cfg.model, grid, cfg.options);
  } else {
    HomogenizedFlux<N> flux = build_homogenized_flux(cfg, args.threads);
    result = solve_homogenized(cfg.problem, flux.eval, grid, cfg.options);
  }
  std::filesystem::create_directories(cfg.output_dir);
  result.write_trajectory_csv(cfg.output_dir + "/trajectory.csv");
  result.write_ledger_csv(cfg.output_dir + "/energy_ledger.csv");
  result.gradient.write_csv(cfg.output_dir + "/gradient.csv");
  std::printf("%s solve: %dx%d grid, %d steps, energy balance residual %.6e\n",
              cfg.solve_kind.c_str(), grid.n_x, grid.n_t, grid.n_t, energy_balance(result));
  return 0;
}

template <int N>
int cmd_study(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  ConvergenceReport rep = run_study(cfg, &std::cout, args.threads);
  std::printf("%s\n", rep.to_csv().c_str());
  std::printf("report written to %s/report.csv, plots to %s/convergence.svg\n",
              cfg.output_dir.c_str(), cfg.output_dir.c_str());
  return 0;
}

template <int N>
int cmd_report(const CliArgs& args) {
  auto cfg = load_typed<N>(args);
  ConvergenceReport rep = read_report_csv(cfg.output_dir + "/report.csv");
  render_report_plots(rep, cfg.output_dir);
  std::printf("re-rendered %s/convergence.svg from %zu rows\n", cfg.output_dir.c_str(),
              rep.rows.size());
  return 0;
}

template <int N>
int dispatch(const std::string& sub, const CliArgs& args) {
  if (sub == "check-structure") return cmd_check_structure<N>(args);
  if (sub == "cell-solve") return cmd_cell_solve<N>(args);
  if (sub == "tabulate") return cmd_tabulate<N>(args);
  if (sub == "solve") return cmd_solve<N>(args);
  if (sub == "study") return cmd_study<N>(args);
  if (sub == "report") return cmd_report<N>(args);
  throw ConfigError("unknown subcommand '" + sub + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical homogenization workbench for monotone parabolic operators"};
  app.require_subcommand(1);

  CliArgs args;
  std::vector<CLI::App*> subs;
  for (const char* name : {"check-structure", "cell-solve", "tabulate", "solve", "study", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config_path, "JSON configuration file")->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option("--threads", args.threads, "worker threads for independent solves");
    sub->add_option("--seed", args.seed, "RNG seed (overrides config)");
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    std::string sub = app.get_subcommands().front()->get_name();
    nlohmann::json j = homog::load_config_file(args.config_path);
    int dim = homog::config_dim(j);
    if (dim == 1) return dispatch<1>(sub, args);
    if (dim == 2) return dispatch<2>(sub, args);
    throw homog::ConfigError("$.model.coefficients.dim must be 1 or 2");
  } catch (const homog::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const homog::SolverError& e) {
    std::fprintf(stderr, "solver failure: %s\n", e.what());
    return 3;
  } catch (const homog::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  } catch (const std::out_of_range& e) {
    std::fprintf(stderr, "range error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
