// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>

#include "homog/study.hpp"

using namespace homog;

namespace {

int failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

FluxModel<1> linear_osc_1d() {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  sep.space.modes.push_back({{1}, 0.0, 1.0});
  return FluxModel<1>(FluxFamily::linear, derived_constants(2.0, 1.0, 3.0), sep);
}

FluxModel<1> separable(double p, bool time_osc) {
  SeparableCoefficient<1> sep;
  sep.space.base = 2.0;
  sep.space.modes.push_back({{1}, 0.0, 1.0});
  if (time_osc) {
    sep.time.base = 1.0;
    sep.time.modes.push_back({{1}, 0.0, 0.5});
  }
  double cmax = time_osc ? 4.5 : 3.0;
  double cmin = time_osc ? 0.5 : 1.0;
  std::optional<TimeModulus> mod;
  if (time_osc) mod = TimeModulus{3.0 * two_pi * 0.5 * std::pow(2.0, p - 2.0)};
  FluxFamily fam = p == 2.0 && time_osc ? FluxFamily::linear : FluxFamily::p_laplacian;
  if (p == 2.0 && !time_osc) fam = FluxFamily::linear;
  return FluxModel<1>(fam, derived_constants(p, cmin, cmax), sep, mod);
}

FluxModel<1> checkerboard(double p, bool time_varying) {
  CheckerboardCoefficient<1> cb;
  cb.k_space = 2;
  cb.k_time = time_varying ? 2 : 1;
  cb.values = time_varying ? std::vector<double>{1.0, 3.0, 2.5, 0.5}
                           : std::vector<double>{1.0, 3.0};
  double cmin = time_varying ? 0.5 : 1.0;
  std::optional<TimeModulus> mod;
  if (!time_varying) mod = TimeModulus{0.0};  // time-constant: zero modulus suffices
  return FluxModel<1>(FluxFamily::checkerboard, derived_constants(p, cmin, 3.0), cb, mod);
}

FluxModel<2> linear_2d() {
  SpatialCoefficient<2> cs;
  cs.base = 2.0;
  cs.modes.push_back({{1, 0}, 0.0, 1.0});
  SeparableCoefficient<2> sep;
  sep.space = cs;
  return FluxModel<2>(FluxFamily::linear, derived_constants(2.0, 1.0, 3.0), sep);
}

const double sqrt3 = std::sqrt(3.0);

ExperimentConfig<1> load_study_config(const std::string& out_dir) {
  std::string path = std::string(HOMOG_SOURCE_DIR) + "/configs/study_mu2_1d.json";
  auto cfg = ExperimentConfig<1>::parse(load_config_file(path));
  cfg.output_dir = out_dir;
  return cfg;
}

// --- criteria ---------------------------------------------------------------

void criterion_1() {
  CellGrid g{1024, 8};
  FluxModel<1> m = linear_osc_1d();
  SolverOptions opts = default_options(2.0);
  auto t0 = std::chrono::steady_clock::now();
  double b1 = effective_flux(m, 1.0, Vec<1>(1.0), g, opts).b[0];
  double b2 = effective_flux(m, 2.0, Vec<1>(1.0), g, opts).b[0];
  double b3 = effective_flux(m, 3.0, Vec<1>(1.0), g, opts).b[0];
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double worst = std::max({std::abs(b1 - sqrt3), std::abs(b2 - sqrt3), std::abs(b3 - sqrt3)});
  report(1, worst < 1e-4 && secs < 5.0,
         fmt("harmonic-mean oracle: |b-sqrt3| = %.3e for mu regimes {1,2,3} in %.2f s "
             "(bounds 1e-4, 5 s)",
             worst, secs));
}

void criteria_2_3() {
  struct Entry {
    std::string name;
    double mu;
    double worst_energy = 0.0;
  };
  double worst_energy = 0.0, worst_mean = 0.0, worst_pmean = 0.0;
  std::string worst_case = "-";
  CellGrid g{128, 8};
  CellGrid g2{16, 4};
  SolverOptions o2 = default_options(2.0), o4 = default_options(4.0);

  auto run1 = [&](const FluxModel<1>& m, double mu, const char* name) {
    for (double xi : {1.0, -0.7}) {
      auto r = effective_flux(m, mu, Vec<1>(xi), g, m.p() == 2.0 ? o2 : o4);
      double e = energy_identity_check(r.solution, m);
      if (e > worst_energy) {
        worst_energy = e;
        worst_case = fmt("%s mu=%g xi=%g", name, mu, xi);
      }
      worst_mean = std::max(worst_mean, r.solution.max_abs_mean());
      worst_pmean = std::max(worst_pmean, std::abs(r.solution.p_mean()[0] - xi));
    }
  };

  for (double p : {2.0, 4.0}) {
    for (double mu : {1.0, 2.0, 3.0}) {
      run1(separable(p, true), mu, p == 2.0 ? "linear/separable" : "p_laplacian/separable");
      run1(checkerboard(p, false), mu, "checkerboard/time-const");
    }
    run1(checkerboard(p, true), 3.0, "checkerboard/time-varying");
  }
  // 2D coverage
  {
    FluxModel<2> m2 = linear_2d();
    auto r = effective_flux(m2, 3.0, Vec<2>(1.0, 0.5), g2, o2);
    worst_energy = std::max(worst_energy, energy_identity_check(r.solution, m2));
    worst_mean = std::max(worst_mean, r.solution.max_abs_mean());
    worst_pmean = std::max(worst_pmean, (r.solution.p_mean() - Vec<2>(1.0, 0.5)).norm());
  }

  report(2, worst_energy < 1e-6,
         fmt("energy identity over the p x family x regime matrix: worst %.3e at %s (bound 1e-6)",
             worst_energy, worst_case.c_str()));
  report(3, worst_mean <= 1e-12 && worst_pmean <= 1e-6,
         fmt("mean identities: |mean v| = %.2e (bound 1e-12), |mean p - xi| = %.2e (bound 1e-6)",
             worst_mean, worst_pmean));
}

void criterion_4() {
  Rng rng(20240501);
  bool ok = true;
  int checked = 0;
  for (int trial = 0; trial < 100 && ok; ++trial) {
    for (double eps : {0.5, 0.25, 0.125, 0.0625, 0.03125}) {
      SpaceTimeGrid<1> g;
      g.n_x = 32;
      g.n_t = 32;
      g.T = 1.0;
      g.epsilon = eps;
      g.mu = 1.0;
      g.validate();
      DiscreteField<1> phi(g);
      for (auto& v : phi.values) v = rng.uniform_vec<1>(-1.0, 1.0);
      DiscreteField<1> avg = mesh_average(phi);
      for (double p : {2.0, 4.0}) {
        ok = ok && avg.norm_lp(p) <= phi.norm_lp(p);
        ++checked;
      }
    }
  }
  report(4, ok, fmt("Jensen bound holds exactly for %d averaged fields (100 seeds x eps sweep)",
                    checked));
}

void criterion_5() {
  double worst = std::numeric_limits<double>::infinity();
  std::string worst_model = "-";
  SolverOptions o2 = default_options(2.0), o4 = default_options(4.0);

  auto check1 = [&](const FluxModel<1>& m, double mu, const char* name) {
    FluxTable<1> t = tabulate_b(m, mu, Vec<1>(-2.0), Vec<1>(2.0), 0.5, CellGrid{128, 8},
                                m.p() == 2.0 ? o2 : o4);
    BEstimatesReport rep = verify_b_estimates(t, m.constants(), 1000, 17);
    if (rep.min_monotonicity_margin < worst) {
      worst = rep.min_monotonicity_margin;
      worst_model = name;
    }
  };
  check1(linear_osc_1d(), 2.0, "linear 1D");
  check1(separable(4.0, true), 3.0, "p_laplacian 1D");
  check1(checkerboard(2.0, true), 3.0, "checkerboard 1D");
  check1(checkerboard(4.0, false), 2.0, "checkerboard p=4 1D");
  {
    FluxTable<2> t = tabulate_b(linear_2d(), 3.0, Vec<2>(-1.0, -1.0), Vec<2>(1.0, 1.0), 0.5,
                                CellGrid{16, 4}, o2);
    BEstimatesReport rep = verify_b_estimates(t, linear_2d().constants(), 1000, 17);
    if (rep.min_monotonicity_margin < worst) {
      worst = rep.min_monotonicity_margin;
      worst_model = "linear 2D";
    }
  }
  report(5, worst >= 0.0,
         fmt("effective-map monotonicity with 0.9 slack over 1e3 pairs per model: worst margin "
             "%.3e at %s",
             worst, worst_model.c_str()));
}

void criterion_6() {
  SeparableCoefficient<1> unit;
  FluxModel<1> heat(FluxFamily::p_laplacian, derived_constants(2.0, 1.0, 1.0), unit);
  ProblemSpec<1> spec;
  spec.T = 0.1;
  spec.f.space.base = 0.0;
  spec.u0.zero = false;
  spec.u0.amplitude = 1.0;
  spec.u0.modes = {1};

  SpaceTimeGrid<1> g;
  g.n_x = 256;
  g.n_t = 1024;
  g.T = 0.1;
  g.epsilon = 1.0;
  g.mu = 2.0;
  g.validate();
  auto res = solve_fine(spec, heat, g, default_options(2.0));

  double maxerr = 0.0;
  const double pi = std::numbers::pi;
  for (int k = 0; k <= g.n_t; ++k) {
    double t = k * g.dt();
    for (int i = 0; i <= g.n_x; ++i)
      maxerr = std::max(maxerr,
                        std::abs(res.states[k][i] - std::exp(-pi * pi * t) * std::sin(pi * i / 256.0)));
  }
  double balance = energy_balance(res);

  g.n_t = 2048;
  auto res2 = solve_fine(spec, heat, g, default_options(2.0));
  double balance2 = energy_balance(res2);
  double ratio = balance2 / balance;

  bool pass = maxerr < 1e-3 && balance < 1e-4 && ratio < 0.6;
  report(6, pass,
         fmt("heat oracle: max-node %.3e (bound 1e-3), energy residual %.6e (bound 1e-4), "
             "halving ratio %.4f",
             maxerr, balance, ratio));
}

ConvergenceReport criterion_7(const std::string& out_dir) {
  auto cfg = load_study_config(out_dir);
  auto t0 = std::chrono::steady_clock::now();
  ConvergenceReport rep = run_study(cfg);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool decreasing = true;
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    decreasing = decreasing && rep.rows[i].remainder_lp < rep.rows[i - 1].remainder_lp;
  double factor = rep.rows.front().remainder_lp / rep.rows.back().remainder_lp;
  double min_grad = std::numeric_limits<double>::infinity();
  for (const auto& r : rep.rows) min_grad = std::min(min_grad, r.grad_error_lp);
  double separation = min_grad / rep.rows.back().remainder_lp;

  bool pass = rep.rows.size() == 4 && decreasing && factor >= 2.0 && separation >= 5.0 &&
              secs < 600.0;
  report(7, pass,
         fmt("convergence study: remainder %s, total decrease x%.2f (>= 2), min grad/final "
             "remainder %.1f (>= 5), %.1f s (< 600)",
             decreasing ? "strictly decreasing" : "NOT decreasing", factor, separation, secs));
  return rep;
}

void criterion_8() {
  SolverOptions opts = default_options(2.0);
  CellGrid g{64, 8};

  // three distinct code paths for the time-oscillating separable model
  FluxModel<1> osc = separable(2.0, true);
  auto r1 = effective_flux(osc, 1.0, Vec<1>(1.0), g, opts);
  auto r2 = effective_flux(osc, 2.0, Vec<1>(1.0), g, opts);
  auto r3 = effective_flux(osc, 3.0, Vec<1>(1.0), g, opts);
  bool distinct = r1.solution.regime == CellRegime::elliptic_parametric &&
                  r2.solution.regime == CellRegime::parabolic_periodic &&
                  r3.solution.regime == CellRegime::time_averaged;
  FluxTable<1> t1 = tabulate_b(osc, 1.0, Vec<1>(-1.0), Vec<1>(1.0), 0.5, g, opts);
  FluxTable<1> t2 = tabulate_b(osc, 2.0, Vec<1>(-1.0), Vec<1>(1.0), 0.5, g, opts);
  FluxTable<1> t3 = tabulate_b(osc, 3.0, Vec<1>(-1.0), Vec<1>(1.0), 0.5, g, opts);
  bool built = t1.node_count() == 5 && t2.node_count() == 5 && t3.node_count() == 5;

  // time-independent degeneration: the three regimes agree within 10x tol
  FluxModel<1> flat = separable(2.0, false);
  double worst = 0.0;
  for (double xi : {-1.0, -0.5, 0.5, 1.0}) {
    double b1 = effective_flux(flat, 1.0, Vec<1>(xi), g, opts).b[0];
    double b2 = effective_flux(flat, 2.0, Vec<1>(xi), g, opts).b[0];
    double b3 = effective_flux(flat, 3.0, Vec<1>(xi), g, opts).b[0];
    worst = std::max({worst, std::abs(b1 - b2), std::abs(b2 - b3), std::abs(b1 - b3)});
  }
  double bound = 10.0 * opts.residual_tol;
  report(8, distinct && built && worst < bound,
         fmt("regime dispatch: three paths %s, three tables built, degeneration agreement %.2e "
             "(bound %.0e)",
             distinct ? "distinct" : "NOT distinct", worst, bound));
}

void criterion_9(const ConvergenceReport& study) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : study.rows) {
    lo = std::min(lo, r.corrector_uniform_bound);
    hi = std::max(hi, r.corrector_uniform_bound);
  }
  double factor = hi / lo;
  report(9, factor < 2.0,
         fmt("uniform corrector bound across the eps sweep varies by x%.3f (bound x2)", factor));
}

void criterion_10(const ConvergenceReport& first) {
  auto strip_wall_time = [](const std::string& csv) {
    std::string out;
    std::istringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
      auto pos = line.rfind(',');
      out += line.substr(0, pos);
      out += "\n";
    }
    return out;
  };
  auto cfg = load_study_config(std::filesystem::temp_directory_path() / "homog_accept_rerun");
  ConvergenceReport second = run_study(cfg);
  bool same = strip_wall_time(first.to_csv()) == strip_wall_time(second.to_csv());
  report(10, same, "reproducibility: two study runs produce identical CSVs modulo wall_time_s");
}

}  // namespace

int main() {
  std::filesystem::path out = std::filesystem::temp_directory_path() / "homog_acceptance";
  std::filesystem::create_directories(out);

  criterion_1();
  criteria_2_3();
  criterion_4();
  criterion_5();
  criterion_6();
  ConvergenceReport study = criterion_7((out / "study").string());
  criterion_8();
  criterion_9(study);
  criterion_10(study);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
