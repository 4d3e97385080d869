#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "homog/parabolic.hpp"

using namespace homog;

namespace {

FluxModel<1> heat_model() {
  SeparableCoefficient<1> sep;
  return FluxModel<1>(FluxFamily::p_laplacian, derived_constants(2.0, 1.0, 1.0), sep);
}

FluxModel<1> linear_osc() {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  sep.space.modes.push_back({{1}, 0.0, 1.0});
  return FluxModel<1>(FluxFamily::linear, derived_constants(2.0, 1.0, 3.0), sep);
}

SpaceTimeGrid<1> make_grid(int n_x, int n_t, double T, double eps = 1.0, double mu = 2.0) {
  SpaceTimeGrid<1> g;
  g.n_x = n_x;
  g.n_t = n_t;
  g.T = T;
  g.epsilon = eps;
  g.mu = mu;
  g.validate();
  return g;
}

ProblemSpec<1> sine_ic_problem(double T) {
  ProblemSpec<1> spec;
  spec.T = T;
  spec.f.space.base = 0.0;
  spec.u0.zero = false;
  spec.u0.amplitude = 1.0;
  spec.u0.modes = {1};
  return spec;
}

const double pi = std::numbers::pi;

}  // namespace

TEST_CASE("heat-equation oracle: max-node error below 1e-3 at the stated resolution") {
  auto res = solve_fine(sine_ic_problem(0.1), heat_model(), make_grid(256, 1024, 0.1),
                        default_options(2.0));
  double maxerr = 0.0;
  for (int k = 0; k <= 1024; ++k) {
    double t = k * res.grid.dt();
    for (int i = 0; i <= 256; ++i) {
      double exact = std::exp(-pi * pi * t) * std::sin(pi * i / 256.0);
      maxerr = std::max(maxerr, std::abs(res.states[k][i] - exact));
    }
  }
  CHECK(maxerr < 1e-3);
}

TEST_CASE("energy balance halves when n_t doubles") {
  auto r1 = solve_fine(sine_ic_problem(0.1), heat_model(), make_grid(128, 256, 0.1),
                       default_options(2.0));
  auto r2 = solve_fine(sine_ic_problem(0.1), heat_model(), make_grid(128, 512, 0.1),
                       default_options(2.0));
  double e1 = energy_balance(r1), e2 = energy_balance(r2);
  CHECK(e2 < e1);
  CHECK(e2 / e1 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("zero data gives the zero solution and zero energy residual") {
  ProblemSpec<1> spec;
  spec.T = 0.25;
  spec.f.space.base = 0.0;
  auto res = solve_fine(spec, linear_osc(), make_grid(64, 32, 0.25, 0.25), default_options(2.0));
  for (const auto& state : res.states)
    for (double x : state) CHECK(x == 0.0);
  CHECK(energy_balance(res) == 0.0);
}

TEST_CASE("boundary and initial conditions hold exactly at every step") {
  ProblemSpec<1> spec = sine_ic_problem(0.2);
  spec.f.space.base = 1.0;
  auto res = solve_fine(spec, linear_osc(), make_grid(64, 64, 0.2, 0.25), default_options(2.0));
  for (int i = 0; i <= 64; ++i)
    CHECK(res.states[0][i] == doctest::Approx(std::sin(pi * i / 64.0)).epsilon(1e-15));
  for (const auto& state : res.states) {
    CHECK(state.front() == 0.0);
    CHECK(state.back() == 0.0);
  }
}

TEST_CASE("discrete energy dissipation: the L2 norm decreases when f = 0") {
  auto res = solve_fine(sine_ic_problem(0.1), linear_osc(), make_grid(64, 64, 0.1, 0.25),
                        default_options(2.0));
  double prev = std::numeric_limits<double>::infinity();
  for (const auto& state : res.states) {
    double l2 = nodal_l2<1>(64, state);
    CHECK(l2 <= prev + 1e-15);
    prev = l2;
  }
}

TEST_CASE("constant-coefficient model: homogenized solve equals the fine solve for any eps") {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  FluxModel<1> m(FluxFamily::linear, derived_constants(2.0, 2.0, 2.0), sep);
  ProblemSpec<1> spec = sine_ic_problem(0.2);
  spec.f.space.base = 1.0;
  EffectiveFluxEval<1> hom;
  hom.linear_scalar = 2.0;
  hom.b = [](const Vec<1>& xi) { return xi * 2.0; };
  for (double eps : {0.25, 0.125}) {
    auto grid = make_grid(64, 32, 0.2, eps);
    auto fine = solve_fine(spec, m, grid, default_options(2.0));
    auto homog_res = solve_homogenized(spec, hom, grid, default_options(2.0));
    for (std::size_t k = 0; k < fine.states.size(); ++k)
      for (std::size_t i = 0; i < fine.states[k].size(); ++i)
        CHECK(std::abs(fine.states[k][i] - homog_res.states[k][i]) < 1e-10);
  }
}

TEST_CASE("homogenized steady state matches x(1-x)/(2 sqrt 3)") {
  ProblemSpec<1> spec;
  spec.T = 3.0;
  spec.f.space.base = 1.0;
  EffectiveFluxEval<1> flux;
  flux.linear_scalar = std::sqrt(3.0);
  flux.b = [](const Vec<1>& xi) { return xi * std::sqrt(3.0); };
  auto res = solve_homogenized(spec, flux, make_grid(128, 192, 3.0), default_options(2.0));
  for (int i = 0; i <= 128; ++i) {
    double x = i / 128.0;
    CHECK(std::abs(res.final_state()[i] - x * (1.0 - x) / (2.0 * std::sqrt(3.0))) < 1e-4);
  }
}

TEST_CASE("homogenized solve with a table raises an advisory range error out of box") {
  FluxModel<1> m = linear_osc();
  FluxTable<1> table = tabulate_b(m, 2.0, Vec<1>(-0.01), Vec<1>(0.01), 0.01, CellGrid{32, 4},
                                  default_options(2.0));
  ProblemSpec<1> spec;
  spec.T = 0.5;
  spec.f.space.base = 5.0;  // drives gradients far beyond the tiny box
  auto flux = EffectiveFluxEval<1>::from_table(table);
  try {
    solve_homogenized(spec, flux, make_grid(64, 32, 0.5), default_options(2.0));
    FAIL("expected std::out_of_range");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("enlarge") != std::string::npos);
  }
}

TEST_CASE("energy ledger rows carry the discrete balance pieces") {
  ProblemSpec<1> spec = sine_ic_problem(0.1);
  auto res = solve_fine(spec, heat_model(), make_grid(64, 32, 0.1), default_options(2.0));
  REQUIRE(res.ledger.size() == 32);
  double dt = res.grid.dt();
  // per-step identity: dissipation*dt + l2_half_delta + defect = source = 0,
  // so dissipation*dt + l2_half_delta <= 0 and the defect is nonnegative
  for (const auto& row : res.ledger) {
    CHECK(row.source_pairing == 0.0);
    CHECK(row.dissipation * dt + row.l2_half_delta <= 1e-15);
    CHECK(row.residual <= default_options(2.0).residual_tol);
  }
}

TEST_CASE("comparison sanity: ||u_eps - u|| decreases as eps decreases") {
  FluxModel<1> m = linear_osc();
  ProblemSpec<1> spec;
  spec.T = 0.25;
  spec.f.space.base = 1.0;
  EffectiveFluxEval<1> hom;
  hom.linear_scalar = std::sqrt(3.0);
  hom.b = [](const Vec<1>& xi) { return xi * std::sqrt(3.0); };

  std::vector<double> errors;
  for (double eps : {0.25, 0.125, 0.0625}) {
    int n_x = static_cast<int>(32 / eps);
    int n_t = 64;
    auto grid = make_grid(n_x, n_t, 0.25, eps, 1.0);
    auto fine = solve_fine(spec, m, grid, default_options(2.0));
    auto homog_res = solve_homogenized(spec, hom, grid, default_options(2.0));
    double err = 0.0;
    double w = grid.dt() / n_x;
    for (std::size_t k = 1; k < fine.states.size(); ++k)
      for (int i = 0; i <= n_x; ++i) {
        double d = fine.states[k][i] - homog_res.states[k][i];
        err += w * d * d;
      }
    errors.push_back(std::sqrt(err));
  }
  CHECK(errors[1] < errors[0]);
  CHECK(errors[2] < errors[1]);
}

TEST_CASE("determinism: identical inputs give bit-identical trajectories") {
  ProblemSpec<1> spec = sine_ic_problem(0.1);
  spec.f.space.base = 0.5;
  auto a = solve_fine(spec, linear_osc(), make_grid(64, 32, 0.1, 0.25), default_options(2.0));
  auto b = solve_fine(spec, linear_osc(), make_grid(64, 32, 0.1, 0.25), default_options(2.0));
  for (std::size_t k = 0; k < a.states.size(); ++k)
    for (std::size_t i = 0; i < a.states[k].size(); ++i) CHECK(a.states[k][i] == b.states[k][i]);
}

TEST_CASE("nonlinear step failure carries the step index and residual history") {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  sep.space.modes.push_back({{1}, 0.0, 1.0});
  FluxModel<1> m(FluxFamily::p_laplacian, derived_constants(4.0, 1.0, 3.0), sep);
  ProblemSpec<1> spec = sine_ic_problem(0.1);
  SolverOptions opts = default_options(4.0);
  opts.max_iterations = 1;
  opts.residual_tol = 1e-300;
  try {
    solve_fine(spec, m, make_grid(32, 8, 0.1, 0.25), opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.step_index == 1);
    CHECK_FALSE(e.residual_history.empty());
  }
}

TEST_CASE("trajectory, ledger and gradient CSV exports are well formed") {
  ProblemSpec<1> spec = sine_ic_problem(0.1);
  spec.f.space.base = 1.0;
  auto res = solve_fine(spec, linear_osc(), make_grid(16, 8, 0.1, 0.25), default_options(2.0));
  auto dir = std::filesystem::temp_directory_path() / "homog_csv_test";
  std::filesystem::create_directories(dir);

  res.write_trajectory_csv((dir / "traj.csv").string());
  res.write_ledger_csv((dir / "ledger.csv").string());
  res.gradient.write_csv((dir / "grad.csv").string());

  auto read_lines = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::string> lines;
    std::string l;
    while (std::getline(in, l)) lines.push_back(l);
    return lines;
  };
  auto traj = read_lines(dir / "traj.csv");
  CHECK(traj.front() == "t,ix,u");
  CHECK(traj.size() == 1 + 9 * 17);  // (n_t + 1) states x (n_x + 1) nodes
  auto ledger = read_lines(dir / "ledger.csv");
  CHECK(ledger.front() == "step,t,dissipation,l2_half_delta,source_pairing,residual");
  CHECK(ledger.size() == 1 + 8);
  auto grad = read_lines(dir / "grad.csv");
  CHECK(grad.front() == "ix,it,v0");
  CHECK(grad.size() == 1 + 8 * 16);
}

TEST_CASE("fine solve with mu < 2 and a time-dependent model requires the modulus gate") {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  sep.time.base = 1.0;
  sep.time.modes.push_back({{1}, 0.0, 0.5});
  FluxModel<1> no_modulus(FluxFamily::linear, derived_constants(2.0, 1.0, 3.0), sep);
  ProblemSpec<1> spec = sine_ic_problem(0.1);
  CHECK_THROWS_AS(solve_fine(spec, no_modulus, make_grid(32, 16, 0.1, 0.25, 1.0),
                             default_options(2.0)),
                  ConfigError);

  FluxModel<1> with_modulus(FluxFamily::linear, derived_constants(2.0, 1.0, 3.0), sep,
                            TimeModulus{2.0 * two_pi});
  auto res = solve_fine(spec, with_modulus, make_grid(32, 16, 0.1, 0.25, 1.0),
                        default_options(2.0));
  CHECK(res.states.size() == 17);
}
