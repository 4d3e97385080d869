#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "homog/study.hpp"

using namespace homog;

namespace {

nlohmann::json minimal_model() {
  return nlohmann::json::parse(R"({
    "family": "linear", "p": 2, "alpha": 1, "c0": 3, "c1": 3, "c2": 1,
    "coefficients": {
      "dim": 1,
      "space": {"type": "fourier", "base": 2, "modes": [{"k": [1], "cos": 0, "sin": 1}]},
      "time": {"type": "constant", "value": 1}
    },
    "time_modulus": null
  })");
}

nlohmann::json study_config() {
  nlohmann::json j;
  j["model"] = minimal_model();
  j["mu"] = 2.0;
  j["epsilons"] = {0.25, 0.125};
  j["problem"] = {{"T", 0.5},
                  {"source", {{"space", {{"type", "constant"}, {"value", 1}}}}},
                  {"initial", {{"type", "zero"}}}};
  j["cell_grid"] = {{"n_space", 16}, {"n_time", 4}};
  j["space_time_grid"] = {{"elements_per_cell", 16}, {"steps_per_cell", 2}, {"min_steps", 4}};
  j["quantization"] = 0.02;
  j["output_dir"] = "cfg_test_out";
  j["seed"] = 3;
  return j;
}

}  // namespace

TEST_CASE("a valid study config parses into typed form") {
  nlohmann::json j = study_config();
  schema::check_top_level(j);
  auto cfg = ExperimentConfig<1>::parse(j);
  CHECK(cfg.mu == 2.0);
  CHECK(cfg.epsilons.size() == 2);
  CHECK(cfg.cell_grid.n_space == 16);
  CHECK(cfg.quantization == 0.02);
  CHECK(cfg.problem.u0.zero);
  CHECK(cfg.model.linear_in_xi());

  SpaceTimeGrid<1> g = cfg.grid_for(0.25);
  CHECK(g.n_x == 64);
  CHECK(g.n_t == 16);  // steps_per_cell * T/eps^2 = 2 * 8
}

TEST_CASE("unknown keys are rejected with their JSON path") {
  nlohmann::json j = study_config();
  j["model"]["bogus"] = 1;
  try {
    schema::check_top_level(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$.model.bogus") != std::string::npos);
  }

  nlohmann::json j2 = study_config();
  j2["extra_top"] = true;
  CHECK_THROWS_AS(schema::check_top_level(j2), ConfigError);

  nlohmann::json j3 = study_config();
  j3["problem"]["initial"]["typo"] = 1;
  try {
    schema::check_top_level(j3);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("$.problem.initial.typo") != std::string::npos);
  }
}

TEST_CASE("epsilon list validation") {
  nlohmann::json j = study_config();
  j["epsilons"] = {0.125, 0.25};  // not decreasing
  CHECK_THROWS_AS(ExperimentConfig<1>::parse(j), ConfigError);
  j["epsilons"] = {0.3};  // 1/eps not integral
  CHECK_THROWS_AS(ExperimentConfig<1>::parse(j), ConfigError);
  j["epsilons"] = nlohmann::json::array();
  auto cfg = ExperimentConfig<1>::parse(j);
  CHECK_THROWS_AS(run_study(cfg), ConfigError);  // empty list fails before any solve
}

TEST_CASE("tolerances must be positive") {
  nlohmann::json j = study_config();
  j["tolerances"] = {{"residual", -1.0}};
  CHECK_THROWS_AS(ExperimentConfig<1>::parse(j), ConfigError);
  j["tolerances"] = {{"residual", 1e-9}, {"period", 1e-7}};
  auto cfg = ExperimentConfig<1>::parse(j);
  CHECK(cfg.options.residual_tol == 1e-9);
  CHECK(cfg.options.period_tol == 1e-7);
}

TEST_CASE("model JSON uses the exact published key names") {
  nlohmann::json j = minimal_model();
  FluxModel<1> m = FluxModel<1>::from_json(j);
  nlohmann::json back = m.to_json();
  for (const char* key : {"family", "p", "alpha", "c0", "c1", "c2", "coefficients", "time_modulus"})
    CHECK(back.contains(key));
  CHECK(back.size() == 8);
  CHECK(back.at("time_modulus").is_null());
}

TEST_CASE("dimension dispatch honors coefficients.dim") {
  nlohmann::json j = minimal_model();
  CHECK(j.at("coefficients").value("dim", 1) == 1);
  CHECK_THROWS_AS(FluxModel<2>::from_json(j), ConfigError);
}

TEST_CASE("report CSV round trip and header exactness") {
  ConvergenceReport rep;
  StudyRow r;
  r.epsilon = 0.25;
  r.grad_error_lp = 0.04;
  r.averaged_error_lp = 0.047;
  r.remainder_lp = 0.025;
  r.energy_residual_fine = 1e-4;
  r.energy_residual_hom = 3e-6;
  r.cell_cache_entries = 16;
  r.wall_time_s = 0.01;
  rep.rows.push_back(r);
  std::string csv = rep.to_csv();
  CHECK(csv.rfind("epsilon,grad_error_lp,averaged_error_lp,remainder_lp,energy_residual_fine,"
                  "energy_residual_hom,cell_cache_entries,wall_time_s\n",
                  0) == 0);
  auto dir = std::filesystem::temp_directory_path() / "homog_cfg_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.csv");
    out << csv;
  }
  ConvergenceReport back = read_report_csv((dir / "report.csv").string());
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0].epsilon == 0.25);
  CHECK(back.rows[0].cell_cache_entries == 16);
}

TEST_CASE("plots re-render identically from the same CSV") {
  ConvergenceReport rep;
  for (double eps : {0.25, 0.125, 0.0625}) {
    StudyRow r;
    r.epsilon = eps;
    r.grad_error_lp = 0.04;
    r.remainder_lp = 0.1 * eps;
    rep.rows.push_back(r);
  }
  auto dir = std::filesystem::temp_directory_path() / "homog_svg_test";
  std::filesystem::create_directories(dir);
  render_report_plots(rep, dir.string());
  std::ifstream f1(dir / "convergence.svg");
  std::string first((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  render_report_plots(rep, dir.string());
  std::ifstream f2(dir / "convergence.svg");
  std::string second((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(first == second);
  CHECK(first.find("<svg") == 0);
}

TEST_CASE("nonlinear study without a table box is a configuration error") {
  nlohmann::json j = study_config();
  j["model"]["family"] = "p_laplacian";
  j["model"]["p"] = 4.0;
  auto cfg = ExperimentConfig<1>::parse(j);
  CHECK_THROWS_AS(run_study(cfg), ConfigError);
}

TEST_CASE("study rows are identical across thread counts") {
  nlohmann::json j = study_config();
  j["output_dir"] = (std::filesystem::temp_directory_path() / "homog_thr1").string();
  auto cfg1 = ExperimentConfig<1>::parse(j);
  ConvergenceReport seq = run_study(cfg1, nullptr, 1);
  j["output_dir"] = (std::filesystem::temp_directory_path() / "homog_thr2").string();
  auto cfg2 = ExperimentConfig<1>::parse(j);
  ConvergenceReport par = run_study(cfg2, nullptr, 2);
  REQUIRE(seq.rows.size() == par.rows.size());
  for (std::size_t i = 0; i < seq.rows.size(); ++i) {
    CHECK(seq.rows[i].grad_error_lp == par.rows[i].grad_error_lp);
    CHECK(seq.rows[i].remainder_lp == par.rows[i].remainder_lp);
    CHECK(seq.rows[i].averaged_error_lp == par.rows[i].averaged_error_lp);
    CHECK(seq.rows[i].cell_cache_entries == par.rows[i].cell_cache_entries);
  }
}

TEST_CASE("constant-coefficient study: remainder bounded by the averaging error") {
  nlohmann::json j = study_config();
  j["model"]["coefficients"]["space"] = {{"type", "constant"}, {"value", 2.0}};
  j["quantization"] = 1e-9;
  j["output_dir"] = (std::filesystem::temp_directory_path() / "homog_const_study").string();
  auto cfg = ExperimentConfig<1>::parse(j);
  ConvergenceReport rep = run_study(cfg);
  REQUIRE(rep.rows.size() == cfg.epsilons.size());  // one row per requested epsilon
  for (const auto& r : rep.rows) {
    CHECK(r.remainder_lp <= r.averaged_error_lp + 1e-9);
    CHECK(r.grad_error_lp >= 0.0);
    CHECK(r.averaged_error_lp >= 0.0);
    CHECK(r.remainder_lp >= 0.0);
  }
  CHECK(rep.homogenized_solve_count == 1);
}

TEST_CASE("2D study runs end to end") {
  nlohmann::json j;
  j["model"] = nlohmann::json::parse(R"({
    "family": "linear", "p": 2, "alpha": 1, "c0": 3, "c1": 3, "c2": 1,
    "coefficients": {
      "dim": 2,
      "space": {"type": "fourier", "base": 2, "modes": [{"k": [1, 0], "cos": 0, "sin": 1}]},
      "time": {"type": "constant", "value": 1}
    },
    "time_modulus": null
  })");
  j["mu"] = 2.0;
  j["epsilons"] = {0.5, 0.25};
  j["problem"] = {{"T", 0.25},
                  {"source", {{"space", {{"type", "constant"}, {"value", 1}}}}},
                  {"initial", {{"type", "zero"}}}};
  j["cell_grid"] = {{"n_space", 8}, {"n_time", 4}};
  j["space_time_grid"] = {{"elements_per_cell", 8}, {"steps_per_cell", 4}, {"min_steps", 4}};
  j["quantization"] = 0.05;
  j["output_dir"] = (std::filesystem::temp_directory_path() / "homog_2d_study").string();
  j["seed"] = 5;
  schema::check_top_level(j);
  auto cfg = ExperimentConfig<2>::parse(j);
  ConvergenceReport rep = run_study(cfg);
  REQUIRE(rep.rows.size() == 2);
  // coarse eps: the remainder decrease is the meaningful desk-scale signal
  CHECK(rep.rows[1].remainder_lp < rep.rows[0].remainder_lp);
  for (const auto& r : rep.rows) {
    CHECK(r.remainder_lp > 0.0);
    CHECK(r.grad_error_lp > 0.0);
    CHECK(std::isfinite(r.corrector_uniform_bound));
  }
  CHECK(rep.homogenized_solve_count == 1);
}

TEST_CASE("study aborts flush completed rows and identify the failing stage") {
  nlohmann::json j = study_config();
  j["model"]["family"] = "p_laplacian";
  j["model"]["p"] = 4.0;
  j["model"]["c1"] = 9.5;
  j["model"]["c2"] = 0.22;
  j["tolerances"] = {{"residual", 1e-8}};
  // the box cannot cover the solution gradients: homogenized-solve stage fails
  j["table"] = {{"lo", {-0.01}}, {"hi", {0.01}}, {"spacing", 0.01}};
  auto dir = std::filesystem::temp_directory_path() / "homog_abort";
  j["output_dir"] = dir.string();
  auto cfg = ExperimentConfig<1>::parse(j);
  try {
    run_study(cfg);
    FAIL("expected stage failure");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("stage 'homogenized-solve'") != std::string::npos);
  }
  std::ifstream csv(dir / "report.csv");
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == report_csv_header);
}

TEST_CASE("non-dyadic mu: slivered time partitions run through the study") {
  nlohmann::json j = study_config();
  j["mu"] = 1.5;
  j["epsilons"] = {1.0 / 3.0, 1.0 / 9.0};
  j["space_time_grid"] = {{"elements_per_cell", 12}, {"steps_per_cell", 4}, {"min_steps", 4}};
  j["output_dir"] = (std::filesystem::temp_directory_path() / "homog_sliver_study").string();
  auto cfg = ExperimentConfig<1>::parse(j);
  ConvergenceReport rep = run_study(cfg);
  REQUIRE(rep.rows.size() == 2);
  CHECK(rep.rows[1].remainder_lp < rep.rows[0].remainder_lp);
}

TEST_CASE("non-nested epsilon lists are rejected up front") {
  nlohmann::json j = study_config();
  j["epsilons"] = {0.25, 1.0 / 6.0};
  auto cfg = ExperimentConfig<1>::parse(j);
  CHECK_THROWS_AS(run_study(cfg), ConfigError);
}
