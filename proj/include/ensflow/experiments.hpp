#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ensflow/problems.hpp"
#include "ensflow/schemes.hpp"

namespace ensflow {

/// Run configuration. Plain-text form:
///
///   problem = manufactured        # global keys precede any section
///   [mesh]       h, nx, ny, h_values
///   [scheme]     scheme, pair, coupled_pair, comparison, dt, T, gamma, mu,
///                gamma_values, dt_divisors, threads
///   [stochastic] viscosity, nu, nu_min, nu_max, ensemble_size, eps, seed,
///                grid, level, kl_scale, kl_mean_offset,
///                kl_correlation_length, kl_length, kl_terms
///   [output]     dir, snapshots
///
/// Lists are comma separated; numbers may be written as fractions (1/32).
struct ExperimentConfig {
  std::string problem = "manufactured";

  double h = 1.0 / 32.0;
  int nx = 0;
  int ny = 0;
  std::vector<double> h_values;

  SchemeKind scheme = SchemeKind::SPP;
  ElementPair pair = ElementPair::TaylorHood;
  ElementPair coupled_pair = ElementPair::ScottVogelius;
  /// "mixed": coupled_pair against pair; "same-pair": pair for both.
  std::string comparison = "mixed";
  double dt = 0.1;
  double T = 1.0;
  double gamma = 1e4;
  double mu = 1.0;
  std::vector<double> gamma_values;
  std::vector<int> dt_divisors;
  int threads = 1;

  std::string viscosity;  // constant | uniform | kl; empty = problem default
  double nu = 0.01;
  double nu_min = 0.009;
  double nu_max = 0.011;
  int ensemble_size = 20;
  double eps = 0.01;
  std::uint64_t seed = kDefaultSeed;
  std::string grid = "clenshaw-curtis";
  int level = 1;
  std::optional<double> kl_scale, kl_mean_offset, kl_correlation_length,
      kl_length;
  int kl_terms = 2;

  std::string out_dir = "out";
  int snapshots = 0;

  /// Keys given explicitly ("section.key", or "key" for globals).
  std::set<std::string> explicit_keys;
  bool is_set(const std::string& key) const { return explicit_keys.count(key) > 0; }
};

/// Parses the key=value format; unknown keys, sections or malformed values
/// throw std::invalid_argument naming the line.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Fills keys not set explicitly with the defaults of a subcommand
/// (gamma-sweep, space-sweep, time-sweep, bench, scm-bench).
void apply_command_defaults(ExperimentConfig& cfg, const std::string& command);

ViscosityModel build_viscosity(const ExperimentConfig& cfg);
ProblemSpec build_problem(const ExperimentConfig& cfg);
/// Grid counts of width h over the domain's bounding box; throws unless
/// both extents are integer multiples of h.
std::pair<int, int> grid_counts(const Domain& domain, double h);
/// (nx, ny) when both are set, else grid_counts(domain, cfg.h).
std::pair<int, int> mesh_counts(const ExperimentConfig& cfg, const Domain& domain);
SchemeConfig scheme_config(const ExperimentConfig& cfg, SchemeKind scheme,
                           ElementPair pair);

/// log(e_coarse / e_fine) / log(p_coarse / p_fine); empty when undefined.
std::optional<double> compute_rate(double e_coarse, double e_fine,
                                   double p_coarse, double p_fine);

struct RateRow {
  double param = 0.0;
  double err_u = 0.0;
  std::optional<double> rate_u;
  double err_p = 0.0;
  std::optional<double> rate_p;
};

/// Squared per-step contributions behind a table row.
struct SeriesRow {
  double param = 0.0;
  int step = 0;
  double time = 0.0;
  double err_u_sq = 0.0;
  double err_p_sq = 0.0;
};

struct SweepResult {
  std::vector<RateRow> table;
  std::vector<SeriesRow> series;
};

/// Successive-row rates. `inverse` treats the parameter as 1/param (gamma).
void fill_rates(std::vector<RateRow>& rows, bool inverse);

void write_rate_csv(std::ostream& out, const std::vector<RateRow>& rows);
void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows);

/// Distance between the coupled and the splitting scheme per gamma:
/// ||<u> - <u^>||_{2,1} and the recovered-pressure distance ||.||_{2,0}.
SweepResult run_gamma_sweep(const ExperimentConfig& cfg,
                            const std::vector<double>& gammas);

/// ||<u_true> - <u_h>||_{2,1} and the zero-mean pressure error per h.
SweepResult run_spatial_sweep(const ExperimentConfig& cfg,
                              const std::vector<double>& hs);

/// Same errors per dt = T / divisor.
SweepResult run_temporal_sweep(const ExperimentConfig& cfg,
                               const std::vector<int>& divisors);

struct BenchResult {
  SchemeKind scheme = SchemeKind::Coupled;
  std::vector<StepReport> rows;
  /// Step at which the run produced non-finite data, if it did.
  std::optional<int> blowup_step;
  std::string blowup_message;
  int velocity_dofs = 0;
};

using SnapshotWriter =
    std::function<void(const EnsembleSolver&, const StepReport&)>;

/// Runs one scheme on the configured problem until T. Non-finite data ends
/// the run and is reported as a blow-up rather than thrown.
BenchResult run_benchmark(const ExperimentConfig& cfg, SchemeKind scheme,
                          const SnapshotWriter& snapshot = nullptr);

}  // namespace ensflow
