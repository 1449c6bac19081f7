#include "ensflow/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <variant>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ensflow/format.hpp"

namespace ensflow {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& text) {
  const std::string s = trim(text);
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double den = parse_number(s.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("division by zero in '" + s + "'");
    return parse_number(s.substr(0, slash)) / den;
  }
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

long long parse_integer(const std::string& text) {
  const std::string s = trim(text);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("not an integer: '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem", [](ExperimentConfig& c, const std::string& v) { c.problem = v; }},
      {"mesh.h", [](ExperimentConfig& c, const std::string& v) { c.h = parse_number(v); }},
      {"mesh.nx", [](ExperimentConfig& c, const std::string& v) { c.nx = static_cast<int>(parse_integer(v)); }},
      {"mesh.ny", [](ExperimentConfig& c, const std::string& v) { c.ny = static_cast<int>(parse_integer(v)); }},
      {"mesh.h_values",
       [](ExperimentConfig& c, const std::string& v) {
         c.h_values.clear();
         for (const auto& s : split_list(v)) c.h_values.push_back(parse_number(s));
       }},
      {"scheme.scheme", [](ExperimentConfig& c, const std::string& v) { c.scheme = parse_scheme(v); }},
      {"scheme.pair", [](ExperimentConfig& c, const std::string& v) { c.pair = parse_element_pair(v); }},
      {"scheme.coupled_pair",
       [](ExperimentConfig& c, const std::string& v) { c.coupled_pair = parse_element_pair(v); }},
      {"scheme.comparison",
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "mixed" && v != "same-pair") {
           throw std::invalid_argument("comparison must be mixed or same-pair");
         }
         c.comparison = v;
       }},
      {"scheme.dt", [](ExperimentConfig& c, const std::string& v) { c.dt = parse_number(v); }},
      {"scheme.T", [](ExperimentConfig& c, const std::string& v) { c.T = parse_number(v); }},
      {"scheme.gamma", [](ExperimentConfig& c, const std::string& v) { c.gamma = parse_number(v); }},
      {"scheme.mu", [](ExperimentConfig& c, const std::string& v) { c.mu = parse_number(v); }},
      {"scheme.gamma_values",
       [](ExperimentConfig& c, const std::string& v) {
         c.gamma_values.clear();
         for (const auto& s : split_list(v)) c.gamma_values.push_back(parse_number(s));
       }},
      {"scheme.dt_divisors",
       [](ExperimentConfig& c, const std::string& v) {
         c.dt_divisors.clear();
         for (const auto& s : split_list(v)) {
           c.dt_divisors.push_back(static_cast<int>(parse_integer(s)));
         }
       }},
      {"scheme.threads",
       [](ExperimentConfig& c, const std::string& v) { c.threads = static_cast<int>(parse_integer(v)); }},
      {"stochastic.viscosity",
       [](ExperimentConfig& c, const std::string& v) {
         if (v != "constant" && v != "uniform" && v != "kl") {
           throw std::invalid_argument("viscosity must be constant, uniform or kl");
         }
         c.viscosity = v;
       }},
      {"stochastic.nu", [](ExperimentConfig& c, const std::string& v) { c.nu = parse_number(v); }},
      {"stochastic.nu_min", [](ExperimentConfig& c, const std::string& v) { c.nu_min = parse_number(v); }},
      {"stochastic.nu_max", [](ExperimentConfig& c, const std::string& v) { c.nu_max = parse_number(v); }},
      {"stochastic.ensemble_size",
       [](ExperimentConfig& c, const std::string& v) { c.ensemble_size = static_cast<int>(parse_integer(v)); }},
      {"stochastic.eps", [](ExperimentConfig& c, const std::string& v) { c.eps = parse_number(v); }},
      {"stochastic.seed",
       [](ExperimentConfig& c, const std::string& v) {
         const std::string s = trim(v);
         char* end = nullptr;
         const unsigned long long seed = std::strtoull(s.c_str(), &end, 10);
         if (s.empty() || s[0] == '-' || end != s.c_str() + s.size()) {
           throw std::invalid_argument("seed must be an unsigned integer");
         }
         c.seed = seed;
       }},
      {"stochastic.grid",
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "leja") {
           throw std::invalid_argument(
               "Leja sparse grids are not supported; use clenshaw-curtis");
         }
         if (v != "clenshaw-curtis") {
           throw std::invalid_argument("unknown sparse grid '" + v + "'");
         }
         c.grid = v;
       }},
      {"stochastic.level", [](ExperimentConfig& c, const std::string& v) { c.level = static_cast<int>(parse_integer(v)); }},
      {"stochastic.kl_scale", [](ExperimentConfig& c, const std::string& v) { c.kl_scale = parse_number(v); }},
      {"stochastic.kl_mean_offset",
       [](ExperimentConfig& c, const std::string& v) { c.kl_mean_offset = parse_number(v); }},
      {"stochastic.kl_correlation_length",
       [](ExperimentConfig& c, const std::string& v) { c.kl_correlation_length = parse_number(v); }},
      {"stochastic.kl_length", [](ExperimentConfig& c, const std::string& v) { c.kl_length = parse_number(v); }},
      {"stochastic.kl_terms",
       [](ExperimentConfig& c, const std::string& v) { c.kl_terms = static_cast<int>(parse_integer(v)); }},
      {"output.dir", [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
      {"output.snapshots",
       [](ExperimentConfig& c, const std::string& v) { c.snapshots = static_cast<int>(parse_integer(v)); }},
  };
  return table;
}

void set_default(ExperimentConfig& cfg, const std::string& key,
                 const std::string& value) {
  if (!cfg.is_set(key)) setters().at(key)(cfg, value);
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string section;
  std::string line;
  int number = 0;
  static const std::set<std::string> sections = {"mesh", "scheme", "stochastic", "output"};
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument(where + "malformed section");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) {
        throw std::invalid_argument(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) {
      throw std::invalid_argument(where + "unknown key '" + full + "'");
    }
    try {
      it->second(cfg, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + full + ": " + e.what());
    }
    cfg.explicit_keys.insert(full);
  }
  static const std::set<std::string> problems = {"manufactured", "tgv", "step", "cavity"};
  if (!problems.count(cfg.problem)) {
    throw std::invalid_argument("unknown problem '" + cfg.problem +
                                "' (manufactured|tgv|step|cavity)");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  return parse_config(in);
}

void apply_command_defaults(ExperimentConfig& cfg, const std::string& command) {
  if (command == "gamma-sweep") {
    set_default(cfg, "scheme.T", "1");
    set_default(cfg, "scheme.dt", "0.1");
    set_default(cfg, "mesh.h", "1/32");
    set_default(cfg, "scheme.gamma_values", "0,1e-2,1e-1,1,1e1,1e2,1e3");
  } else if (command == "space-sweep") {
    set_default(cfg, "scheme.T", "0.001");
    if (!cfg.is_set("scheme.dt")) cfg.dt = cfg.T / 8.0;
    set_default(cfg, "scheme.gamma", "1e6");
    set_default(cfg, "mesh.h_values", "1/2,1/4,1/8,1/16");
  } else if (command == "time-sweep") {
    set_default(cfg, "scheme.T", "1");
    set_default(cfg, "scheme.gamma", "1e5");
    set_default(cfg, "scheme.mu", "0");
    set_default(cfg, "mesh.h", "1/32");
    set_default(cfg, "scheme.dt_divisors", "2,4,8,16,32,64,128");
  } else if (command == "bench" || command == "scm-bench") {
    if (cfg.problem == "tgv") {
      set_default(cfg, "mesh.nx", "20");
      set_default(cfg, "mesh.ny", "20");
      set_default(cfg, "scheme.T", "5");
      set_default(cfg, "scheme.dt", "0.1");
    } else if (cfg.problem == "step") {
      set_default(cfg, "mesh.h", "0.5");
      set_default(cfg, "scheme.T", "40");
      set_default(cfg, "scheme.dt", "0.1");
    } else if (cfg.problem == "cavity") {
      set_default(cfg, "mesh.nx", "35");
      set_default(cfg, "mesh.ny", "35");
      set_default(cfg, "scheme.T", "120");
      set_default(cfg, "scheme.dt", "1");
    }
    set_default(cfg, "scheme.gamma", "1e4");
  } else if (command != "export-grid") {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
}

ViscosityModel build_viscosity(const ExperimentConfig& cfg) {
  std::string kind = cfg.viscosity;
  if (kind.empty()) kind = cfg.problem == "manufactured" ? "uniform" : "kl";
  if (kind == "constant") return constant_viscosity(cfg.nu, cfg.ensemble_size);
  if (kind == "uniform") {
    return uniform_viscosity(cfg.nu_min, cfg.nu_max, cfg.ensemble_size, cfg.seed);
  }
  KLViscosity base = cfg.problem == "step"     ? step_kl_field()
                     : cfg.problem == "cavity" ? cavity_kl_field()
                                               : tgv_kl_field();
  KLViscosity field(cfg.kl_scale.value_or(base.scale()),
                    cfg.kl_mean_offset.value_or(base.mean_offset()),
                    cfg.kl_correlation_length.value_or(base.correlation_length()),
                    cfg.kl_length.value_or(base.length()), cfg.kl_terms);
  const SparseGrid grid = clenshaw_curtis_sparse_grid(field.dimension(), cfg.level);
  if (cfg.is_set("stochastic.ensemble_size") &&
      cfg.ensemble_size != static_cast<int>(grid.size())) {
    throw std::invalid_argument(
        "ensemble_size " + std::to_string(cfg.ensemble_size) +
        " conflicts with the " + std::to_string(grid.size()) +
        "-point collocation grid");
  }
  return kl_viscosity(field, grid);
}

ProblemSpec build_problem(const ExperimentConfig& cfg) {
  const ViscosityModel visc = build_viscosity(cfg);
  if (cfg.problem == "manufactured") return manufactured_problem(cfg.eps, visc);
  if (cfg.problem == "tgv") return tgv_problem(visc);
  if (cfg.problem == "step") return step_channel_problem(cfg.eps, visc);
  if (cfg.problem == "cavity") return cavity_problem(cfg.eps, visc);
  throw std::invalid_argument("unknown problem '" + cfg.problem + "'");
}

std::pair<int, int> grid_counts(const Domain& domain, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("mesh width h must be positive");
  const Rectangle box = std::holds_alternative<Rectangle>(domain)
                            ? std::get<Rectangle>(domain)
                            : std::get<SteppedRectangle>(domain).outer;
  auto count = [h](double extent) {
    const double n = extent / h;
    const double r = std::round(n);
    if (r < 1.0 || std::abs(n - r) > 1e-8 * n) {
      throw std::invalid_argument("domain extent " + format_double(extent) +
                                  " is not a multiple of h = " + format_double(h));
    }
    return static_cast<int>(r);
  };
  return {count(box.x1 - box.x0), count(box.y1 - box.y0)};
}

std::pair<int, int> mesh_counts(const ExperimentConfig& cfg, const Domain& domain) {
  if (cfg.nx > 0 && cfg.ny > 0) return {cfg.nx, cfg.ny};
  if (cfg.nx > 0 || cfg.ny > 0) throw std::invalid_argument("set both nx and ny");
  return grid_counts(domain, cfg.h);
}

SchemeConfig scheme_config(const ExperimentConfig& cfg, SchemeKind scheme,
                           ElementPair pair) {
  SchemeConfig s;
  s.dt = cfg.dt;
  s.T = cfg.T;
  s.gamma = cfg.gamma;
  s.mu = cfg.mu;
  s.scheme = scheme;
  s.pair = pair;
  s.threads = cfg.threads;
  s.validate();
  return s;
}

std::optional<double> compute_rate(double e_coarse, double e_fine,
                                   double p_coarse, double p_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0) || !(p_coarse > 0.0) ||
      !(p_fine > 0.0) || !std::isfinite(p_coarse) || !std::isfinite(p_fine) ||
      p_coarse == p_fine) {
    return std::nullopt;
  }
  return std::log(e_coarse / e_fine) / std::log(p_coarse / p_fine);
}

void fill_rates(std::vector<RateRow>& rows, bool inverse) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].rate_u.reset();
    rows[i].rate_p.reset();
    if (i == 0) continue;
    double pc = rows[i - 1].param, pf = rows[i].param;
    if (inverse) {
      if (!(pc > 0.0) || !(pf > 0.0)) continue;
      pc = 1.0 / pc;
      pf = 1.0 / pf;
    }
    rows[i].rate_u = compute_rate(rows[i - 1].err_u, rows[i].err_u, pc, pf);
    rows[i].rate_p = compute_rate(rows[i - 1].err_p, rows[i].err_p, pc, pf);
  }
}

void write_rate_csv(std::ostream& out, const std::vector<RateRow>& rows) {
  out << "param,err_u,rate_u,err_p,rate_p\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const auto& r : rows) {
    out << format_double(r.param) << ',' << format_double(r.err_u) << ','
        << opt(r.rate_u) << ',' << format_double(r.err_p) << ',' << opt(r.rate_p)
        << '\n';
  }
}

void write_series_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
  out << "param,step,time,err_u_sq,err_p_sq\n";
  for (const auto& r : rows) {
    out << format_double(r.param) << ',' << r.step << ',' << format_double(r.time)
        << ',' << format_double(r.err_u_sq) << ',' << format_double(r.err_p_sq)
        << '\n';
  }
}

namespace {

Vector mean_of(const std::vector<Vector>& v) {
  Vector m = v[0];
  for (std::size_t j = 1; j < v.size(); ++j) m += v[j];
  return m / static_cast<double>(v.size());
}

// Zero-mean P1disc representation of a scalar field.
Vector as_p1disc(const FESpace& space, const Vector& p, const FESpace& p1disc) {
  Vector out = space.kind() == SpaceKind::P1 ? p1_to_p1disc(space, p1disc, p) : p;
  return subtract_mean(p1disc, out);
}

ElementPair pair_for(const ExperimentConfig& cfg, SchemeKind scheme) {
  if (scheme == SchemeKind::Coupled && cfg.comparison != "same-pair") {
    return cfg.coupled_pair;
  }
  return cfg.pair;
}

// Error of one exact-solution run: accumulates dt * ||grad(e)||^2 and
// dt * ||e_p||^2 over steps 1..M.
RateRow exact_error_run(const ExperimentConfig& cfg, const ProblemSpec& problem,
                        int nx, int ny, double param, std::vector<SeriesRow>& series) {
  if (!problem.has_exact()) {
    throw std::invalid_argument(problem.name + " has no exact solution to compare against");
  }
  const ElementPair pair = pair_for(cfg, cfg.scheme);
  Discretization disc(problem, nx, ny, pair);
  EnsembleSolver solver(problem, disc, scheme_config(cfg, cfg.scheme, pair));
  // The splitting scheme's pressure approximation is the recovered one.
  const FESpace p1disc(disc.mesh_ptr(), SpaceKind::P1disc);
  Vector lagged = mean_of(solver.state().pressure);
  double eu = 0.0, ep = 0.0;
  const double dt = cfg.dt;
  solver.run([&](const EnsembleSolver& s, const StepReport& r) {
    const double t = r.time;
    const Vector current = mean_of(s.state().pressure);
    const bool spp = cfg.scheme == SchemeKind::SPP;
    const Vector p = spp ? recover_gamma_pressure(disc.pressure(), lagged, disc.velocity(),
                                                  s.state().mean, cfg.gamma, p1disc)
                         : current;
    lagged = current;
    const ErrorNorms e = velocity_error(
        disc.velocity(), s.state().mean,
        [&](const Point& x, double tt) { return problem.mean_velocity(x, tt); },
        [&](const Point& x, double tt) { return problem.mean_gradient(x, tt); }, t);
    const double pe = pressure_error_sq(
        spp ? p1disc : disc.pressure(), p,
        [&](const Point& x, double tt) { return problem.mean_pressure(x, tt); }, t);
    eu += dt * e.h1_semi_sq;
    ep += dt * pe;
    series.push_back({param, r.step, t, e.h1_semi_sq, pe});
  });
  RateRow row;
  row.param = param;
  row.err_u = std::sqrt(eu);
  row.err_p = std::sqrt(ep);
  return row;
}

}  // namespace

SweepResult run_gamma_sweep(const ExperimentConfig& cfg,
                            const std::vector<double>& gammas) {
  if (gammas.empty()) throw std::invalid_argument("no gamma values");
  const ProblemSpec problem = build_problem(cfg);
  const auto [nx, ny] = mesh_counts(cfg, problem.domain);
  const ElementPair cpair = pair_for(cfg, SchemeKind::Coupled);
  const ElementPair spair = pair_for(cfg, SchemeKind::SPP);
  Discretization coupled_disc(problem, nx, ny, cpair);
  Discretization spp_disc(coupled_disc.mesh_ptr(), spair);
  const FESpace p1disc(coupled_disc.mesh_ptr(), SpaceKind::P1disc);
  const SparseMatrix p1disc_mass = Assembler(p1disc).mass();
  const SparseMatrix& stiffness = coupled_disc.stiffness();

  std::vector<Vector> cu, cp;
  {
    EnsembleSolver coupled(problem, coupled_disc,
                           scheme_config(cfg, SchemeKind::Coupled, cpair));
    coupled.run([&](const EnsembleSolver& s, const StepReport&) {
      cu.push_back(s.state().mean);
      cp.push_back(as_p1disc(coupled_disc.pressure(), mean_of(s.state().pressure), p1disc));
    });
  }

  SweepResult out;
  for (double gamma : gammas) {
    ExperimentConfig c = cfg;
    c.gamma = gamma;
    EnsembleSolver spp(problem, spp_disc, scheme_config(c, SchemeKind::SPP, spair));
    Vector lagged = mean_of(spp.state().pressure);
    double eu = 0.0, ep = 0.0;
    try {
      spp.run([&](const EnsembleSolver& s, const StepReport& r) {
        const int n = r.step - 1;
        const Vector d = cu[n] - s.state().mean;
        const Vector recovered = recover_gamma_pressure(
            spp_disc.pressure(), lagged, spp_disc.velocity(), s.state().mean, gamma, p1disc);
        const Vector e = cp[n] - recovered;
        const double du = d.dot(stiffness * d);
        const double dp = e.dot(p1disc_mass * e);
        eu += cfg.dt * du;
        ep += cfg.dt * dp;
        out.series.push_back({gamma, r.step, r.time, du, dp});
        lagged = mean_of(s.state().pressure);
      });
    } catch (const std::exception& e) {
      throw std::runtime_error("gamma = " + format_double(gamma) + ": " + e.what());
    }
    out.table.push_back({gamma, std::sqrt(eu), std::nullopt, std::sqrt(ep), std::nullopt});
  }
  fill_rates(out.table, true);
  return out;
}

SweepResult run_spatial_sweep(const ExperimentConfig& cfg,
                              const std::vector<double>& hs) {
  if (hs.empty()) throw std::invalid_argument("no mesh widths");
  const ProblemSpec problem = build_problem(cfg);
  SweepResult out;
  for (double h : hs) {
    const auto [nx, ny] = grid_counts(problem.domain, h);
    try {
      out.table.push_back(exact_error_run(cfg, problem, nx, ny, h, out.series));
    } catch (const std::exception& e) {
      throw std::runtime_error("h = " + format_double(h) + ": " + e.what());
    }
  }
  fill_rates(out.table, false);
  return out;
}

SweepResult run_temporal_sweep(const ExperimentConfig& cfg,
                               const std::vector<int>& divisors) {
  if (divisors.empty()) throw std::invalid_argument("no time-step divisors");
  const ProblemSpec problem = build_problem(cfg);
  const auto [nx, ny] = mesh_counts(cfg, problem.domain);
  SweepResult out;
  for (int k : divisors) {
    if (k < 1) throw std::invalid_argument("time-step divisors must be >= 1");
    ExperimentConfig c = cfg;
    c.dt = cfg.T / k;
    try {
      out.table.push_back(exact_error_run(c, problem, nx, ny, c.dt, out.series));
    } catch (const std::exception& e) {
      throw std::runtime_error("dt = T/" + std::to_string(k) + ": " + e.what());
    }
  }
  fill_rates(out.table, false);
  return out;
}

BenchResult run_benchmark(const ExperimentConfig& cfg, SchemeKind scheme,
                          const SnapshotWriter& snapshot) {
  const ProblemSpec problem = build_problem(cfg);
  const auto [nx, ny] = mesh_counts(cfg, problem.domain);
  const ElementPair pair = pair_for(cfg, scheme);
  Discretization disc(problem, nx, ny, pair);
  EnsembleSolver solver(problem, disc, scheme_config(cfg, scheme, pair));
  BenchResult result;
  result.scheme = scheme;
  result.velocity_dofs = disc.velocity().n_dofs();
  const int steps = solver.config().steps();
  while (solver.state().step < steps) {
    const int next = solver.state().step + 1;
    try {
      StepReport r = solver.step();
      if (!std::isfinite(r.energy)) throw std::domain_error("non-finite energy");
      result.rows.push_back(r);
      if (snapshot) snapshot(solver, r);
    } catch (const std::domain_error& e) {
      result.blowup_step = next;
      result.blowup_message = e.what();
      break;
    }
  }
  return result;
}

}  // namespace ensflow
