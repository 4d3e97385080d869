#ifndef HOMOG_CONFIG_JSON_HPP
#define HOMOG_CONFIG_JSON_HPP

#include <filesystem>
#include <optional>

#include "homog/parabolic.hpp"

namespace homog {

namespace schema {

inline void require_keys(const nlohmann::json& j, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("expected an object at " + path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw ConfigError("unexpected key at " + path + "." + it.key());
  }
}

inline void check_coefficient(const nlohmann::json& j, const std::string& path) {
  require_keys(j, path, {"type", "value", "base", "modes"});
  std::string type = j.at("type").get<std::string>();
  if (type == "constant") {
    if (!j.contains("value")) throw ConfigError("missing key " + path + ".value");
    return;
  }
  if (type != "fourier") throw ConfigError(path + ".type must be 'constant' or 'fourier'");
  if (!j.contains("base")) throw ConfigError("missing key " + path + ".base");
  if (!j.contains("modes")) throw ConfigError("missing key " + path + ".modes");
  int i = 0;
  for (const auto& m : j.at("modes")) {
    require_keys(m, path + ".modes[" + std::to_string(i) + "]", {"k", "cos", "sin"});
    ++i;
  }
}

inline void check_model(const nlohmann::json& j, const std::string& path) {
  require_keys(j, path, {"family", "p", "alpha", "c0", "c1", "c2", "coefficients", "time_modulus"});
  for (const char* k : {"family", "p", "alpha", "c0", "c1", "c2", "coefficients"})
    if (!j.contains(k)) throw ConfigError("missing key " + path + "." + k);
  const auto& c = j.at("coefficients");
  std::string fam = j.at("family").get<std::string>();
  if (fam == "checkerboard") {
    require_keys(c, path + ".coefficients", {"dim", "k_space", "k_time", "values"});
  } else {
    require_keys(c, path + ".coefficients", {"dim", "space", "time"});
    if (c.contains("space")) check_coefficient(c.at("space"), path + ".coefficients.space");
    if (c.contains("time")) check_coefficient(c.at("time"), path + ".coefficients.time");
  }
  if (j.contains("time_modulus") && !j.at("time_modulus").is_null())
    require_keys(j.at("time_modulus"), path + ".time_modulus", {"type", "constant"});
}

inline void check_problem(const nlohmann::json& j, const std::string& path) {
  require_keys(j, path, {"T", "source", "initial"});
  if (j.contains("source")) {
    require_keys(j.at("source"), path + ".source", {"space", "time"});
    if (j.at("source").contains("space"))
      check_coefficient(j.at("source").at("space"), path + ".source.space");
    if (j.at("source").contains("time"))
      check_coefficient(j.at("source").at("time"), path + ".source.time");
  }
  if (j.contains("initial")) {
    require_keys(j.at("initial"), path + ".initial", {"type", "amplitude", "modes"});
  }
}

inline void check_top_level(const nlohmann::json& j) {
  require_keys(j, "$",
               {"model", "mu", "epsilons", "problem", "cell_grid", "space_time_grid",
                "quantization", "tolerances", "table", "output_dir", "seed", "xi", "solve"});
  if (!j.contains("model")) throw ConfigError("missing key $.model");
  check_model(j.at("model"), "$.model");
  if (j.contains("problem")) check_problem(j.at("problem"), "$.problem");
  if (j.contains("cell_grid")) require_keys(j.at("cell_grid"), "$.cell_grid", {"n_space", "n_time"});
  if (j.contains("space_time_grid"))
    require_keys(j.at("space_time_grid"), "$.space_time_grid",
                 {"elements_per_cell", "steps_per_cell", "min_steps"});
  if (j.contains("tolerances"))
    require_keys(j.at("tolerances"), "$.tolerances",
                 {"residual", "period", "energy", "linear_rel", "max_iterations", "max_sweeps"});
  if (j.contains("table")) require_keys(j.at("table"), "$.table", {"lo", "hi", "spacing"});
  if (j.contains("solve"))
    require_keys(j.at("solve"), "$.solve", {"kind", "epsilon", "n_x", "n_t"});
}

}  // namespace schema

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  schema::check_top_level(j);
  return j;
}

inline int config_dim(const nlohmann::json& j) {
  return j.at("model").at("coefficients").value("dim", 1);
}

namespace detail {

template <int N>
SpatialCoefficient<N> parse_spatial(const nlohmann::json& j) {
  return spatial_from_json<N>(j);
}

inline TemporalCoefficient parse_temporal(const nlohmann::json& j) { return temporal_from_json(j); }

}  // namespace detail

// Typed view of a configuration document for dimension N.
template <int N>
struct ExperimentConfig {
  explicit ExperimentConfig(FluxModel<N> m) : model(std::move(m)) {}

  FluxModel<N> model;
  double mu = 2.0;
  std::vector<double> epsilons;
  ProblemSpec<N> problem;
  CellGrid cell_grid;
  int elements_per_cell = 32;
  int steps_per_cell = 4;
  int min_steps = 8;
  double quantization = 0.0;  // 0: default 0.05 (1 + max |M_eps Du|)
  SolverOptions options;
  std::optional<std::pair<std::pair<Vec<N>, Vec<N>>, double>> table;  // (lo, hi), spacing
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  Vec<N> xi{};  // cell-solve subcommand
  std::string solve_kind = "fine";
  double solve_epsilon = 0.25;
  int solve_n_x = 0, solve_n_t = 0;

  static ExperimentConfig parse(const nlohmann::json& j) {
    ExperimentConfig c(FluxModel<N>::from_json(j.at("model")));
    c.options = default_options(c.model.p());
    c.mu = j.value("mu", 2.0);
    if (!(c.mu > 0.0)) throw ConfigError("$.mu must be positive");
    if (j.contains("epsilons")) {
      c.epsilons = j.at("epsilons").get<std::vector<double>>();
      double prev = std::numeric_limits<double>::infinity();
      for (double e : c.epsilons) {
        if (!(e > 0.0) || !(e < prev))
          throw ConfigError("$.epsilons must be positive and strictly decreasing");
        double inv = 1.0 / e;
        if (std::abs(inv - std::lround(inv)) > 1e-9)
          throw ConfigError("$.epsilons entries must have integral 1/epsilon");
        prev = e;
      }
    }
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      c.problem.T = p.value("T", 1.0);
      if (p.contains("source")) {
        const auto& s = p.at("source");
        if (s.contains("space")) c.problem.f.space = detail::parse_spatial<N>(s.at("space"));
        if (s.contains("time")) c.problem.f.time = detail::parse_temporal(s.at("time"));
      } else {
        c.problem.f.space.base = 0.0;
      }
      if (p.contains("initial")) {
        const auto& u0 = p.at("initial");
        std::string type = u0.value("type", "zero");
        if (type == "zero") {
          c.problem.u0.zero = true;
        } else if (type == "sine") {
          c.problem.u0.zero = false;
          c.problem.u0.amplitude = u0.value("amplitude", 1.0);
          if (u0.contains("modes")) {
            const auto& modes = u0.at("modes");
            if (static_cast<int>(modes.size()) != N)
              throw ConfigError("$.problem.initial.modes must have one entry per axis");
            for (int i = 0; i < N; ++i) c.problem.u0.modes[i] = modes[i].get<int>();
          } else {
            for (int i = 0; i < N; ++i) c.problem.u0.modes[i] = 1;
          }
        } else {
          throw ConfigError("$.problem.initial.type must be 'zero' or 'sine'");
        }
      }
    } else {
      c.problem.f.space.base = 0.0;
    }
    if (j.contains("cell_grid")) {
      c.cell_grid.n_space = j.at("cell_grid").value("n_space", 32);
      c.cell_grid.n_time = j.at("cell_grid").value("n_time", 8);
    }
    c.cell_grid.validate();
    if (j.contains("space_time_grid")) {
      const auto& g = j.at("space_time_grid");
      c.elements_per_cell = g.value("elements_per_cell", 32);
      c.steps_per_cell = g.value("steps_per_cell", 4);
      c.min_steps = g.value("min_steps", 8);
    }
    c.quantization = j.value("quantization", 0.0);
    if (c.quantization < 0.0) throw ConfigError("$.quantization must be >= 0");
    if (j.contains("tolerances")) {
      const auto& t = j.at("tolerances");
      c.options.residual_tol = t.value("residual", c.options.residual_tol);
      c.options.period_tol = t.value("period", c.options.period_tol);
      c.options.energy_tol = t.value("energy", c.options.energy_tol);
      c.options.linear_rel_tol = t.value("linear_rel", c.options.linear_rel_tol);
      c.options.max_iterations = t.value("max_iterations", c.options.max_iterations);
      c.options.max_sweeps = t.value("max_sweeps", c.options.max_sweeps);
      for (double tol : {c.options.residual_tol, c.options.period_tol, c.options.energy_tol,
                         c.options.linear_rel_tol})
        if (!(tol > 0.0)) throw ConfigError("$.tolerances entries must be positive");
    }
    if (j.contains("table")) {
      const auto& t = j.at("table");
      Vec<N> lo, hi;
      if (static_cast<int>(t.at("lo").size()) != N || static_cast<int>(t.at("hi").size()) != N)
        throw ConfigError("$.table.lo/hi must have one entry per axis");
      for (int i = 0; i < N; ++i) {
        lo[i] = t.at("lo")[i].get<double>();
        hi[i] = t.at("hi")[i].get<double>();
      }
      c.table = {{lo, hi}, t.at("spacing").get<double>()};
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("xi")) {
      const auto& x = j.at("xi");
      if (static_cast<int>(x.size()) != N) throw ConfigError("$.xi must have one entry per axis");
      for (int i = 0; i < N; ++i) c.xi[i] = x[i].get<double>();
    } else {
      c.xi = Vec<N>(1.0);
    }
    if (j.contains("solve")) {
      const auto& s = j.at("solve");
      c.solve_kind = s.value("kind", "fine");
      if (c.solve_kind != "fine" && c.solve_kind != "homogenized")
        throw ConfigError("$.solve.kind must be 'fine' or 'homogenized'");
      c.solve_epsilon = s.value("epsilon", 0.25);
      c.solve_n_x = s.value("n_x", 0);
      c.solve_n_t = s.value("n_t", 0);
    }
    return c;
  }

  // Space-time grid for one epsilon of a study.
  SpaceTimeGrid<N> grid_for(double eps) const {
    SpaceTimeGrid<N> g;
    g.epsilon = eps;
    g.mu = mu;
    g.T = problem.T;
    g.n_x = elements_per_cell * static_cast<int>(std::lround(1.0 / eps));
    double cells = problem.T / std::pow(eps, mu);
    g.n_t = std::max(min_steps, static_cast<int>(std::lround(steps_per_cell * cells)));
    g.validate();
    return g;
  }
};

}  // namespace homog

#endif  // HOMOG_CONFIG_JSON_HPP
