#ifndef HOMOG_FLUX_TABLE_HPP
#define HOMOG_FLUX_TABLE_HPP

#include <cstdio>
#include <future>
#include <sstream>

#include "homog/cell_problems.hpp"

namespace homog {

// Effective flux b tabulated on an axis-aligned xi-lattice with multilinear
// interpolation in between.  No extrapolation outside the box.
template <int N>
struct FluxTable {
  double mu = 2.0;
  Vec<N> lo{}, hi{};
  std::array<int, N> nodes{};  // >= 2 per axis
  std::vector<Vec<N>> values;  // x fastest

  struct Provenance {
    CellGrid grid;
    double residual_tol = 0.0;
    std::uint64_t model_hash = 0;
  } provenance;

  double spacing(int axis) const { return (hi[axis] - lo[axis]) / (nodes[axis] - 1); }

  long node_count() const {
    long c = 1;
    for (int i = 0; i < N; ++i) c *= nodes[i];
    return c;
  }

  Vec<N> node_xi(long idx) const {
    Vec<N> xi;
    for (int i = 0; i < N; ++i) {
      xi[i] = lo[i] + spacing(i) * static_cast<double>(idx % nodes[i]);
      idx /= nodes[i];
    }
    return xi;
  }

  const Vec<N>& node_value(const std::array<int, N>& id) const {
    long idx = 0;
    long stride = 1;
    for (int i = 0; i < N; ++i) {
      idx += id[i] * stride;
      stride *= nodes[i];
    }
    return values[idx];
  }
};

// One effective-flux solve per lattice node, deterministic node ordering.
template <int N>
FluxTable<N> tabulate_b(const FluxModel<N>& model, double mu, const Vec<N>& lo, const Vec<N>& hi,
                        double spacing, const CellGrid& grid, const SolverOptions& opts,
                        int threads = 1) {
  if (!(spacing > 0.0)) throw std::invalid_argument("tabulate_b: spacing must be positive");
  FluxTable<N> table;
  table.mu = mu;
  table.lo = lo;
  table.hi = hi;
  for (int i = 0; i < N; ++i) {
    if (!(hi[i] > lo[i])) throw std::invalid_argument("tabulate_b: degenerate xi box");
    // snap the upper corner outward so the lattice covers the requested range
    table.nodes[i] = static_cast<int>(std::ceil((hi[i] - lo[i]) / spacing * (1.0 - 1e-12))) + 1;
    if (table.nodes[i] < 2) throw std::invalid_argument("tabulate_b: need >= 2 nodes per axis");
    table.hi[i] = lo[i] + spacing * (table.nodes[i] - 1);
  }
  if (mu < 2.0 && model.time_dependent()) {
    if (!model.time_modulus())
      throw ConfigError("tabulate_b: regime 0 < mu < 2 requires a time_modulus descriptor");
    TimeModulusReport gate = check_time_modulus(model, 4000, 2024);
    if (!gate.pass)
      throw ConfigError("tabulate_b: time-modulus gate failed (worst margin " +
                        std::to_string(gate.worst_margin) + ")");
  }

  table.values.resize(table.node_count());
  auto solve_node = [&](long idx) {
    Vec<N> xi = table.node_xi(idx);
    try {
      table.values[idx] = effective_flux(model, mu, xi, grid, opts).b;
    } catch (const SolverError& e) {
      std::string where = "(";
      for (int i = 0; i < N; ++i) where += (i ? "," : "") + std::to_string(xi[i]);
      where += ")";
      throw SolverError("tabulate_b: node xi=" + where + ": " + e.what(), e.residual_history);
    }
  };

  if (threads <= 1) {
    for (long idx = 0; idx < table.node_count(); ++idx) solve_node(idx);
  } else {
    std::vector<std::future<void>> batch;
    for (long idx = 0; idx < table.node_count(); ++idx) {
      batch.push_back(std::async(std::launch::async, solve_node, idx));
      if (static_cast<int>(batch.size()) == threads) {
        for (auto& f : batch) f.get();
        batch.clear();
      }
    }
    for (auto& f : batch) f.get();
  }

  table.provenance.grid = grid;
  table.provenance.residual_tol = opts.residual_tol;
  table.provenance.model_hash = model.hash();
  return table;
}

// Multilinear interpolation; exact at nodes, range error outside the box.
template <int N>
Vec<N> eval_b(const FluxTable<N>& table, const Vec<N>& xi) {
  std::array<int, N> cell{};
  std::array<double, N> w{};
  for (int i = 0; i < N; ++i) {
    double d = table.spacing(i);
    double slack = 1e-12 * (table.hi[i] - table.lo[i]);
    if (xi[i] < table.lo[i] - slack || xi[i] > table.hi[i] + slack)
      throw std::out_of_range("eval_b: xi outside the tabulated box (no extrapolation)");
    double s = (xi[i] - table.lo[i]) / d;
    int c = static_cast<int>(std::floor(s));
    c = std::min(std::max(c, 0), table.nodes[i] - 2);
    cell[i] = c;
    w[i] = s - c;
  }
  Vec<N> out{};
  int corners = 1 << N;
  for (int m = 0; m < corners; ++m) {
    double weight = 1.0;
    std::array<int, N> id = cell;
    for (int i = 0; i < N; ++i) {
      bool up = (m >> i) & 1;
      weight *= up ? w[i] : (1.0 - w[i]);
      id[i] += up ? 1 : 0;
    }
    if (weight != 0.0) out += table.node_value(id) * weight;
  }
  return out;
}

// Empirical verification of the effective-map estimates: monotonicity with a
// 0.9 slack on c2 over sampled node pairs and the smallest Hölder constant
// consistent with the samples.
struct BEstimatesReport {
  double min_monotonicity_margin = 0.0;
  double empirical_holder_constant = 0.0;
  int pairs_checked = 0;
  bool pass = false;
};

template <int N>
BEstimatesReport verify_b_estimates(const FluxTable<N>& table, const StructureConstants& sc,
                                    int n_pairs, std::uint64_t seed, double theta = 0.9) {
  if (table.values.empty()) throw std::invalid_argument("verify_b_estimates: empty table");
  Rng rng(seed);
  BEstimatesReport rep;
  double gamma = sc.gamma();
  double worst = std::numeric_limits<double>::infinity();
  double bestC = 0.0;
  long count = table.node_count();
  for (int s = 0; s < n_pairs; ++s) {
    long i = static_cast<long>(rng.uniform() * count);
    long j = static_cast<long>(rng.uniform() * count);
    i = std::min(i, count - 1);
    j = std::min(j, count - 1);
    Vec<N> xi1 = table.node_xi(i), xi2 = table.node_xi(j);
    Vec<N> d = xi1 - xi2;
    double dn = d.norm();
    if (dn == 0.0) continue;  // the estimates quantify over xi1 != xi2
    Vec<N> db = table.values[i] - table.values[j];
    worst = std::min(worst, Vec<N>::dot(db, d) - theta * sc.c2 * std::pow(dn, sc.p));
    double denom = std::pow(1.0 + xi1.norm() + xi2.norm(), sc.p - 1.0 - gamma) * std::pow(dn, gamma);
    bestC = std::max(bestC, db.norm() / denom);
    ++rep.pairs_checked;
  }
  rep.min_monotonicity_margin = worst;
  rep.empirical_holder_constant = bestC;
  rep.pass = worst >= 0.0;
  return rep;
}

// Persistence: JSON metadata next to a CSV of node rows; reload reproduces
// eval_b bit-identically (values are round-tripped at full precision).
template <int N>
void save_table(const FluxTable<N>& table, const std::string& json_path,
                const std::string& csv_path) {
  nlohmann::json j;
  j["mu"] = table.mu;
  nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array(),
                 nodes = nlohmann::json::array();
  for (int i = 0; i < N; ++i) {
    lo.push_back(table.lo[i]);
    hi.push_back(table.hi[i]);
    nodes.push_back(table.nodes[i]);
  }
  j["lo"] = lo;
  j["hi"] = hi;
  j["nodes"] = nodes;
  j["dim"] = N;
  j["provenance"] = {{"n_space", table.provenance.grid.n_space},
                     {"n_time", table.provenance.grid.n_time},
                     {"residual_tol", table.provenance.residual_tol},
                     {"model_hash", table.provenance.model_hash}};
  j["csv"] = csv_path;
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot open '" + json_path + "' for writing");
  out << j.dump(2) << "\n";

  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot open '" + csv_path + "' for writing");
  csv << "node";
  for (int i = 0; i < N; ++i) csv << ",xi" << i;
  for (int i = 0; i < N; ++i) csv << ",b" << i;
  csv << "\n";
  char buf[64];
  for (long idx = 0; idx < table.node_count(); ++idx) {
    csv << idx;
    Vec<N> xi = table.node_xi(idx);
    for (int i = 0; i < N; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", xi[i]);
      csv << buf;
    }
    for (int i = 0; i < N; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", table.values[idx][i]);
      csv << buf;
    }
    csv << "\n";
  }
}

template <int N>
FluxTable<N> load_table(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open '" + json_path + "'");
  nlohmann::json j;
  in >> j;
  if (j.value("dim", 1) != N) throw ConfigError("load_table: dimension mismatch");
  FluxTable<N> table;
  table.mu = j.at("mu").get<double>();
  for (int i = 0; i < N; ++i) {
    table.lo[i] = j.at("lo")[i].get<double>();
    table.hi[i] = j.at("hi")[i].get<double>();
    table.nodes[i] = j.at("nodes")[i].get<int>();
  }
  table.provenance.grid.n_space = j.at("provenance").at("n_space").get<int>();
  table.provenance.grid.n_time = j.at("provenance").at("n_time").get<int>();
  table.provenance.residual_tol = j.at("provenance").at("residual_tol").get<double>();
  table.provenance.model_hash = j.at("provenance").at("model_hash").get<std::uint64_t>();

  std::ifstream csv(j.at("csv").get<std::string>());
  if (!csv) throw IoError("cannot open table CSV '" + j.at("csv").get<std::string>() + "'");
  table.values.resize(table.node_count());
  std::string line;
  std::getline(csv, line);  // header
  long rows = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    long idx = std::stol(tok);
    for (int i = 0; i < N; ++i) std::getline(ss, tok, ',');  // xi columns
    Vec<N> v;
    for (int i = 0; i < N; ++i) {
      std::getline(ss, tok, ',');
      v[i] = std::stod(tok);
    }
    if (idx < 0 || idx >= table.node_count()) throw IoError("table CSV row index out of range");
    table.values[idx] = v;
    ++rows;
  }
  if (rows != table.node_count()) throw IoError("table CSV row count mismatch");
  return table;
}

}  // namespace homog

#endif  // HOMOG_FLUX_TABLE_HPP
