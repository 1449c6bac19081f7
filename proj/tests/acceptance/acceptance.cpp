// Acceptance runs. Prints one PASS/FAIL line per criterion; arguments select
// criteria by number (all by default). Exit code 1 when any selected one fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ensflow/experiments.hpp"
#include "ensflow/stochastic.hpp"
#include "oracle/compare.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string rate_list(const std::vector<RateRow>& rows) {
  std::string s;
  for (const auto& r : rows) {
    if (!r.rate_u) continue;
    if (!s.empty()) s += ",";
    s += g(*r.rate_u);
  }
  return s;
}

// Distance between the coupled and splitting schemes per gamma, velocity
// against reference values at h = 1/32.
Outcome gamma_sweep() {
  ExperimentConfig cfg;
  apply_command_defaults(cfg, "gamma-sweep");
  const std::map<double, double> reference = {
      {0.0, 3.9912},   {1e-2, 3.6882},   {1e-1, 2.7593},     {1.0, 0.93147},
      {10.0, 0.15728}, {1e2, 1.7306e-2}, {1e3, 1.7479e-3}};
  const SweepResult r = run_gamma_sweep(cfg, cfg.gamma_values);
  Outcome o{true, "rates " + rate_list(r.table)};
  std::optional<double> last;
  for (const auto& row : r.table) {
    const double ref = reference.at(row.param);
    const double factor = std::max(row.err_u / ref, ref / row.err_u);
    if (!(factor <= 3.0)) {
      o.pass = false;
      o.detail += "; gamma " + g(row.param) + " error " + g(row.err_u) + " vs " + g(ref);
    }
    if (row.rate_u) {
      if (last && !(*row.rate_u > *last)) {
        o.pass = false;
        o.detail += "; rate not increasing at gamma " + g(row.param);
      }
      last = row.rate_u;
    }
    if (row.param >= 1e2 && !(row.rate_u && *row.rate_u >= 0.9 && *row.rate_u <= 1.1)) {
      o.pass = false;
      o.detail += "; rate at gamma " + g(row.param) + " outside [0.9, 1.1]";
    }
  }
  return o;
}

Outcome space_sweep() {
  Outcome o{true, ""};
  for (double mean : {1e-2, 1e-3, 1e-4}) {
    ExperimentConfig cfg;
    cfg.nu_min = 0.9 * mean;
    cfg.nu_max = 1.1 * mean;
    apply_command_defaults(cfg, "space-sweep");
    const SweepResult r = run_spatial_sweep(cfg, cfg.h_values);
    o.detail += (o.detail.empty() ? "" : "; ") + ("E[nu]=" + g(mean) + " rates " + rate_list(r.table));
    for (const auto& row : r.table) {
      if (row.param == cfg.h_values.front()) continue;
      if (!(row.rate_u && *row.rate_u >= 1.85 && *row.rate_u <= 2.1)) o.pass = false;
    }
  }
  return o;
}

Outcome time_sweep() {
  ExperimentConfig cfg;
  apply_command_defaults(cfg, "time-sweep");
  const SweepResult r = run_temporal_sweep(cfg, {8, 16, 32, 64, 128});
  Outcome o{true, "rates " + rate_list(r.table)};
  for (const auto& row : r.table) {
    if (row.param == cfg.T / 8.0) continue;
    if (!(row.rate_u && *row.rate_u >= 0.9 && *row.rate_u <= 1.1)) o.pass = false;
  }
  return o;
}

struct PropertyRun {
  std::string problem;
  SchemeKind scheme;
  ElementPair pair;
  int n;
  double dt;
  double T;
};

// Contraction, discrete and pointwise divergence at every step.
Outcome property_suite() {
  const std::vector<PropertyRun> runs = {
      {"tgv", SchemeKind::SPP, ElementPair::TaylorHood, 8, 0.1, 2.0},
      {"tgv", SchemeKind::SPP, ElementPair::ScottVogelius, 8, 0.1, 2.0},
      {"cavity", SchemeKind::SPP, ElementPair::TaylorHood, 8, 1.0, 10.0},
      {"cavity", SchemeKind::SPP, ElementPair::ScottVogelius, 8, 1.0, 10.0},
      {"step", SchemeKind::SPP, ElementPair::TaylorHood, 0, 0.1, 2.0},
      {"tgv", SchemeKind::Coupled, ElementPair::ScottVogelius, 8, 0.1, 2.0},
      {"cavity", SchemeKind::Coupled, ElementPair::ScottVogelius, 8, 1.0, 10.0},
      {"step", SchemeKind::Coupled, ElementPair::ScottVogelius, 0, 0.1, 2.0},
  };
  // The contraction holds for zero normal boundary data; the step channel's
  // inflow makes the projection affine, so its value is only reported.
  double contraction = -INFINITY, inflow_contraction = -INFINITY, bdiv = 0.0, sv_div = 0.0;
  for (const auto& run : runs) {
    ExperimentConfig cfg;
    cfg.problem = run.problem;
    if (run.n > 0) {
      cfg.nx = cfg.ny = run.n;
    } else {
      cfg.h = 1.0;
    }
    cfg.dt = run.dt;
    cfg.T = run.T;
    const ProblemSpec problem = build_problem(cfg);
    const auto [nx, ny] = mesh_counts(cfg, problem.domain);
    const Discretization disc(problem, nx, ny, run.pair);
    SchemeConfig sc = scheme_config(cfg, run.scheme, run.pair);
    EnsembleSolver solver(problem, disc, sc);
    for (const auto& r : solver.run()) {
      if (run.scheme == SchemeKind::SPP) {
        double& c = run.problem == "step" ? inflow_contraction : contraction;
        c = std::max(c, r.contraction_max);
        bdiv = std::max(bdiv, r.projected_div_max);
        if (run.pair == ElementPair::ScottVogelius) sv_div = std::max(sv_div, r.projected_l2_div_max);
      } else {
        sv_div = std::max(sv_div, r.div_l2_max);
      }
    }
  }
  return {contraction <= 1e-12 && bdiv <= 1e-10 && sv_div <= 1e-10,
          "max contraction " + g(contraction) + ", max |B u~| " + g(bdiv) +
              ", max SV ||div u|| " + g(sv_div) + ", step channel contraction " +
              g(inflow_contraction) + " (inflow data, not bounded)"};
}

Outcome structural() {
  const auto mesh = testing::unit_square(4);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  std::mt19937_64 rng(11);
  double skew = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Vector w = testing::random_vector(v.n_dofs(), rng);
    const Vector x = testing::random_vector(v.n_dofs(), rng);
    const SparseMatrix n = as.convection(w);
    double scale = 0.0;
    for (int k = 0; k < n.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(n, k); it; ++it)
        scale += std::abs(it.value() * x[it.row()] * x[it.col()]);
    skew = std::max(skew, std::abs(x.dot(n * x)) / scale);
  }

  double oracle = 0.0;
  const std::vector<testing::OracleCase> cases = {
      {SchemeKind::Coupled, ElementPair::ScottVogelius, 0.0, ProjectionBoundary::Full},
      {SchemeKind::Coupled, ElementPair::TaylorHood, 0.0, ProjectionBoundary::Full},
      {SchemeKind::SPP, ElementPair::ScottVogelius, 10.0, ProjectionBoundary::Full},
      {SchemeKind::SPP, ElementPair::TaylorHood, 10.0, ProjectionBoundary::Normal},
  };
  for (const auto& c : cases) {
    const auto [du, dp] = testing::compare_with_oracle(c);
    oracle = std::max({oracle, du, dp});
  }

  double zero = 0.0;
  const ProblemSpec p = testing::zero_problem(3, 0.01);
  for (auto pair : {ElementPair::ScottVogelius, ElementPair::TaylorHood}) {
    const Discretization disc(testing::unit_square(2), pair);
    for (auto scheme : {SchemeKind::Coupled, SchemeKind::SPP}) {
      EnsembleSolver s(p, disc, testing::config(scheme, pair, 10.0));
      s.run();
      for (const auto& u : s.state().velocity) zero = std::max(zero, u.cwiseAbs().maxCoeff());
      for (const auto& q : s.state().pressure) zero = std::max(zero, q.cwiseAbs().maxCoeff());
    }
  }
  return {skew <= 1e-12 && oracle <= 1e-12 && zero == 0.0,
          "relative skew " + g(skew) + ", oracle difference " + g(oracle) +
              ", zero-data max " + g(zero)};
}

Outcome sparse_grid() {
  const SparseGrid grid = clenshaw_curtis_sparse_grid(5, 1);
  double sum = 0.0;
  for (double w : grid.weights) sum += w;
  double moments = 0.0;
  for (int axis = 0; axis < 5; ++axis) {
    std::vector<double> y1, y2;
    for (const auto& y : grid.points) {
      y1.push_back(y[axis]);
      y2.push_back(y[axis] * y[axis]);
    }
    moments = std::max({moments, std::abs(expect_qoi(y1, grid)),
                        std::abs(expect_qoi(y2, grid) - 1.0)});
  }
  return {grid.size() == 11 && std::abs(sum - 1.0) <= 1e-13 && moments <= 1e-12,
          std::to_string(grid.size()) + " points, |sum w - 1| " + g(std::abs(sum - 1.0)) +
              ", moment error " + g(moments)};
}

Outcome forcing_residual() {
  const ViscosityModel visc = uniform_viscosity(0.009, 0.011, 20, kDefaultSeed);
  const ProblemSpec p = manufactured_problem(0.01, visc);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, p.ensemble_size() - 1);
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    const int j = pick(rng);
    const Realization& r = p.realizations[j];
    for (int s = 0; s < 100; ++s) {
      const Point x{d(rng), d(rng)};
      const double t = d(rng);
      const Vec2 res = testing::fd_residual(r.exact->velocity, r.exact->pressure, r.forcing,
                                            visc.constants[j], x, t);
      worst = std::max(worst, res.cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-6, "max finite-difference residual " + g(worst)};
}

Outcome tgv_energy() {
  ExperimentConfig cfg;
  cfg.problem = "tgv";
  apply_command_defaults(cfg, "bench");
  const BenchResult coupled = run_benchmark(cfg, SchemeKind::Coupled);
  const BenchResult spp = run_benchmark(cfg, SchemeKind::SPP);
  if (coupled.blowup_step || spp.blowup_step || coupled.rows.size() != spp.rows.size()) {
    return {false, "run did not complete"};
  }
  double rel = 0.0;
  bool monotone = true;
  for (std::size_t n = 0; n < coupled.rows.size(); ++n) {
    const double a = coupled.rows[n].energy, b = spp.rows[n].energy;
    rel = std::max(rel, std::abs(a - b) / a);
    if (n > 0) {
      monotone = monotone && a <= coupled.rows[n - 1].energy && b <= spp.rows[n - 1].energy;
    }
  }
  return {rel <= 0.01 && monotone,
          std::to_string(coupled.velocity_dofs) + " velocity dofs, max relative energy gap " +
              g(rel) + (monotone ? ", monotone decay" : ", energy increased")};
}

double max_energy_jump(const BenchResult& r) {
  double m = 0.0;
  for (std::size_t n = 1; n < r.rows.size(); ++n)
    m = std::max(m, std::abs(r.rows[n].energy - r.rows[n - 1].energy));
  return m;
}

Outcome cavity_eev() {
  std::vector<BenchResult> runs;
  for (double mu : {0.0, 1.0}) {
    ExperimentConfig cfg;
    cfg.problem = "cavity";
    cfg.mu = mu;
    // Ten times the bench Reynolds number; at the bench value mu = 0 stays
    // stable on this mesh and there is nothing for the eddy viscosity to damp.
    cfg.kl_scale = 2.0 / 150000.0;
    apply_command_defaults(cfg, "bench");
    runs.push_back(run_benchmark(cfg, SchemeKind::Coupled));
  }
  const BenchResult& plain = runs[0];
  const BenchResult& eev = runs[1];
  if (eev.blowup_step) return {false, "mu = 1 blew up at step " + std::to_string(*eev.blowup_step)};
  if (plain.blowup_step) {
    return {true, "mu = 0 blew up at step " + std::to_string(*plain.blowup_step) +
                      ", mu = 1 completed"};
  }
  const double a = max_energy_jump(plain), b = max_energy_jump(eev);
  return {b < a, "both completed; max |dE| mu=0 " + g(a) + ", mu=1 " + g(b)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gamma sweep converges to the coupled scheme", gamma_sweep},
      {"second-order spatial convergence", space_sweep},
      {"first-order temporal convergence", time_sweep},
      {"projection and divergence properties", property_suite},
      {"skew-symmetry, oracle agreement, zero data", structural},
      {"sparse grid", sparse_grid},
      {"manufactured forcing", forcing_residual},
      {"TGV energy agreement", tgv_energy},
      {"cavity eddy viscosity stabilization", cavity_eev},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", argv[i]);
      return 2;
    }
    selected.insert(k);
  }
  bool all = true;
  for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
    if (!selected.empty() && !selected.count(k)) continue;
    Outcome o;
    try {
      o = criteria[k - 1].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("criterion %d %s: %s (%s)\n", k, o.pass ? "PASS" : "FAIL",
                criteria[k - 1].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
