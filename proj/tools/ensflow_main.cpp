#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ensflow/experiments.hpp"
#include "ensflow/format.hpp"

namespace fs = std::filesystem;
using namespace ensflow;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  int snapshots = 0;
  std::string bench_problem;
  std::string scheme = "both";
};

ExperimentConfig load(const Options& opt, const std::string& command) {
  ExperimentConfig cfg;
  if (!opt.config.empty()) cfg = load_config(opt.config);
  if (command == "bench") {
    if (cfg.is_set("problem") && cfg.problem != opt.bench_problem) {
      throw std::invalid_argument("config problem '" + cfg.problem +
                                  "' conflicts with bench " + opt.bench_problem);
    }
    cfg.problem = opt.bench_problem;
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
    cfg.explicit_keys.insert("stochastic.seed");
  }
  if (opt.threads) cfg.threads = *opt.threads;
  if (!opt.out.empty()) cfg.out_dir = opt.out;
  if (opt.snapshots > 0) cfg.snapshots = opt.snapshots;
  apply_command_defaults(cfg, command);
  fs::create_directories(cfg.out_dir);
  return cfg;
}

std::ofstream open_out(const ExperimentConfig& cfg, const std::string& name) {
  const fs::path path = fs::path(cfg.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << '\n';
  return out;
}

void report_sweep(const ExperimentConfig& cfg, const std::string& stem,
                  const SweepResult& result) {
  {
    auto out = open_out(cfg, stem + ".csv");
    write_rate_csv(out, result.table);
  }
  auto out = open_out(cfg, stem + "_series.csv");
  write_series_csv(out, result.series);
  write_rate_csv(std::cout, result.table);
}

void run_benchmarks(const ExperimentConfig& cfg, const std::string& which,
                    const std::string& stem) {
  std::vector<SchemeKind> schemes;
  if (which == "both" || which == "coupled") schemes.push_back(SchemeKind::Coupled);
  if (which == "both" || which == "spp") schemes.push_back(SchemeKind::SPP);
  if (schemes.empty()) throw std::invalid_argument("scheme must be coupled, spp or both");
  for (SchemeKind scheme : schemes) {
    const std::string tag = stem + "_" + to_string(scheme);
    SnapshotWriter snapshot;
    if (cfg.snapshots > 0) {
      snapshot = [&cfg, tag](const EnsembleSolver& s, const StepReport& r) {
        if (r.step % cfg.snapshots != 0) return;
        const fs::path path =
            fs::path(cfg.out_dir) / (tag + "_" + std::to_string(r.step) + ".vtk");
        std::ofstream out(path);
        write_vtk(out, s.discretization().velocity(), s.state().mean, "mean_velocity");
      };
    }
    const BenchResult result = run_benchmark(cfg, scheme, snapshot);
    auto out = open_out(cfg, tag + ".csv");
    write_time_series_csv(out, result.rows);
    std::cout << to_string(scheme) << ": " << result.rows.size() << " steps, "
              << result.velocity_dofs << " velocity dofs";
    if (!result.rows.empty()) {
      std::cout << ", final energy " << format_double(result.rows.back().energy);
    }
    std::cout << '\n';
    if (result.blowup_step) {
      std::cout << to_string(scheme) << ": blow-up at step " << *result.blowup_step
                << " (" << result.blowup_message << ")\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble Navier-Stokes solver: coupled and penalty-projection schemes"};
  app.require_subcommand(1);
  Options opt;
  auto common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output directory");
    sub->add_option("--seed", opt.seed, "Random seed for sampled viscosities");
    sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--snapshots", opt.snapshots, "VTK snapshot of the mean every k steps")
        ->check(CLI::NonNegativeNumber);
  };

  auto* gamma = app.add_subcommand("gamma-sweep", "Coupled vs splitting discrepancy per gamma");
  auto* space = app.add_subcommand("space-sweep", "Spatial errors and rates");
  auto* time = app.add_subcommand("time-sweep", "Temporal errors and rates");
  auto* bench = app.add_subcommand("bench", "Energy history of tgv, step or cavity");
  bench->add_option("problem", opt.bench_problem, "Benchmark problem")
      ->required()
      ->check(CLI::IsMember({"tgv", "step", "cavity"}));
  auto* scm = app.add_subcommand("scm-bench", "Collocation energy history of the configured problem");
  auto* grid = app.add_subcommand("export-grid", "Write the collocation grid of the configured field");
  for (auto* sub : {gamma, space, time, bench, scm, grid}) common(sub);
  for (auto* sub : {bench, scm}) {
    sub->add_option("--scheme", opt.scheme, "coupled, spp or both")
        ->check(CLI::IsMember({"coupled", "spp", "both"}));
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (gamma->parsed()) {
      const ExperimentConfig cfg = load(opt, "gamma-sweep");
      report_sweep(cfg, "gamma_sweep", run_gamma_sweep(cfg, cfg.gamma_values));
    } else if (space->parsed()) {
      const ExperimentConfig cfg = load(opt, "space-sweep");
      report_sweep(cfg, "space_sweep", run_spatial_sweep(cfg, cfg.h_values));
    } else if (time->parsed()) {
      const ExperimentConfig cfg = load(opt, "time-sweep");
      report_sweep(cfg, "time_sweep", run_temporal_sweep(cfg, cfg.dt_divisors));
    } else if (bench->parsed()) {
      const ExperimentConfig cfg = load(opt, "bench");
      run_benchmarks(cfg, opt.scheme, cfg.problem);
    } else if (scm->parsed()) {
      ExperimentConfig cfg = load(opt, "scm-bench");
      if (!cfg.viscosity.empty() && cfg.viscosity != "kl") {
        throw std::invalid_argument("scm-bench needs viscosity = kl");
      }
      cfg.viscosity = "kl";
      run_benchmarks(cfg, opt.scheme, "scm_" + cfg.problem);
    } else if (grid->parsed()) {
      ExperimentConfig cfg = load(opt, "export-grid");
      cfg.viscosity = "kl";
      const ViscosityModel model = build_viscosity(cfg);
      const SparseGrid g = clenshaw_curtis_sparse_grid(2 * cfg.kl_terms + 1, cfg.level);
      auto out = open_out(cfg, "grid.csv");
      write_grid_csv(out, g);
      std::cout << g.size() << " points, dimension " << g.dimension << ", mean viscosity "
                << format_double(model.mean) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
