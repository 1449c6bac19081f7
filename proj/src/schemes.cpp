#include "ensflow/schemes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ensflow/format.hpp"
#include "ensflow/parallel.hpp"

namespace ensflow {

const char* to_string(SchemeKind kind) {
  return kind == SchemeKind::Coupled ? "coupled" : "spp";
}

const char* to_string(ElementPair pair) {
  return pair == ElementPair::ScottVogelius ? "scott-vogelius" : "taylor-hood";
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "coupled") return SchemeKind::Coupled;
  if (name == "spp") return SchemeKind::SPP;
  throw std::invalid_argument("unknown scheme '" + name + "' (coupled|spp)");
}

ElementPair parse_element_pair(const std::string& name) {
  if (name == "scott-vogelius" || name == "sv") return ElementPair::ScottVogelius;
  if (name == "taylor-hood" || name == "th") return ElementPair::TaylorHood;
  throw std::invalid_argument("unknown element pair '" + name +
                              "' (scott-vogelius|taylor-hood)");
}

int SchemeConfig::steps() const {
  if (!(dt > 0.0) || !(T > 0.0)) {
    throw std::invalid_argument("dt and T must be positive");
  }
  const double m = T / dt;
  const double r = std::round(m);
  if (r < 1.0 || std::abs(m - r) > 1e-9 * std::max(1.0, m)) {
    throw std::invalid_argument("T / dt = " + format_double(m) +
                                " is not a positive integer");
  }
  return static_cast<int>(r);
}

void SchemeConfig::validate() const {
  steps();
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
  if (!(mu >= 0.0)) throw std::invalid_argument("mu must be >= 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

namespace {

std::shared_ptr<const TriMesh> refined_mesh(const ProblemSpec& problem, int nx,
                                            int ny) {
  TriMesh coarse = build_structured_mesh(problem.domain, nx, ny);
  coarse = classify_boundary(coarse, problem.boundary_rules);
  return std::make_shared<const TriMesh>(barycentric_refine(coarse));
}

SpaceKind pressure_kind(ElementPair pair) {
  return pair == ElementPair::ScottVogelius ? SpaceKind::P1disc : SpaceKind::P1;
}

}  // namespace

Discretization::Discretization(const ProblemSpec& problem, int nx, int ny,
                               ElementPair pair)
    : Discretization(refined_mesh(problem, nx, ny), pair) {}

Discretization::Discretization(std::shared_ptr<const TriMesh> refined,
                               ElementPair pair)
    : mesh_(std::move(refined)),
      pair_(pair),
      velocity_(mesh_, SpaceKind::P2vec),
      pressure_(mesh_, pressure_kind(pair)),
      assembler_(velocity_) {
  mass_ = assembler_.mass();
  stiffness_ = assembler_.diffusion(assembler_.constant(1.0));
  graddiv_ = assembler_.graddiv();
  div_ = assembler_.div_coupling(pressure_);
  pressure_mass_ = Assembler(pressure_).mass();
}

ViscosityEnsemble ViscosityEnsemble::sample(const Assembler& assembler,
                                            const ViscosityModel& model) {
  if (model.size() < 1) throw std::invalid_argument("empty viscosity model");
  ViscosityEnsemble v;
  for (int j = 0; j < model.size(); ++j) {
    CoefficientField nu = assembler.sample(model.members[j]);
    if (!nu.all_finite() || !(nu.min() > 0.0)) {
      throw std::domain_error("viscosity member " + std::to_string(j + 1) +
                              " is not positive at every quadrature point");
    }
    v.members.push_back(std::move(nu));
  }
  v.mean = v.members[0];
  for (int j = 1; j < model.size(); ++j) v.mean += v.members[j];
  v.mean *= 1.0 / model.size();
  v.mean_min = v.mean.min();
  for (const auto& nu : v.members) {
    v.fluctuations.push_back(nu - v.mean);
    v.fluctuation_max.push_back(v.fluctuations.back().max_abs());
    v.alpha.push_back(v.mean_min - v.fluctuation_max.back());
  }
  return v;
}

void EnsembleState::refresh() {
  if (velocity.empty()) throw std::logic_error("empty ensemble state");
  for (const auto& u : velocity) {
    if (!u.allFinite()) {
      throw std::domain_error("non-finite velocity at step " + std::to_string(step));
    }
  }
  mean = velocity[0];
  for (std::size_t j = 1; j < velocity.size(); ++j) mean += velocity[j];
  mean /= static_cast<double>(velocity.size());
  fluctuations.resize(velocity.size());
  for (std::size_t j = 0; j < velocity.size(); ++j) {
    fluctuations[j] = velocity[j] - mean;
  }
}

EnsembleSolver::EnsembleSolver(const ProblemSpec& problem,
                               const Discretization& disc, SchemeConfig config)
    : problem_(problem), disc_(disc), config_(config) {
  config_.validate();
  const int count = problem.ensemble_size();
  if (count < 1) throw std::invalid_argument("problem has no realizations");
  if (problem.viscosity.size() != count) {
    throw std::invalid_argument("viscosity model has " +
                                std::to_string(problem.viscosity.size()) +
                                " members for " + std::to_string(count) +
                                " realizations");
  }
  viscosity_ = ViscosityEnsemble::sample(disc.assembler(), problem.viscosity);

  const FESpace& v = disc.velocity();
  for (const auto& d : apply_dirichlet(v, problem.realizations[0].boundary, 0.0)) {
    dirichlet_dofs_.push_back(d.dof);
  }
  pressure_pin_ = v.n_dofs();  // first pressure dof

  state_.velocity.resize(count);
  state_.pressure.assign(count, Vector::Zero(disc.pressure().n_dofs()));
  for (int j = 0; j < count; ++j) {
    state_.velocity[j] = interpolate(v, problem.realizations[j].initial, 0.0);
  }
  if (config_.scheme == SchemeKind::SPP) {
    state_.projected = state_.velocity;
    projection_dofs_ = problem.projection_boundary == ProjectionBoundary::Normal
                           ? normal_boundary_dofs(v)
                           : boundary_dofs(v);
    SparseMatrix m = disc.mass();
    m *= 1.0 / config_.dt;
    std::vector<int> dofs = projection_dofs_;
    dofs.push_back(pressure_pin_);
    projection_matrix_ = std::make_unique<ConstrainedMatrix>(
        compose_saddle(m, disc.div()), std::move(dofs));
    projection_factor_ =
        std::make_unique<Factorization>(projection_matrix_->matrix());
  }
  state_.refresh();
}

void EnsembleSolver::set_state(EnsembleState state) {
  if (state.size() != problem_.ensemble_size()) {
    throw std::invalid_argument("state size does not match the ensemble");
  }
  state.refresh();
  state_ = std::move(state);
}

std::vector<double> EnsembleSolver::boundary_values(int j, double t) const {
  const auto data =
      apply_dirichlet(disc_.velocity(), problem_.realizations[j].boundary, t);
  if (data.size() != dirichlet_dofs_.size()) {
    throw std::logic_error("boundary dof set changed between realizations");
  }
  std::vector<double> values(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (data[k].dof != dirichlet_dofs_[k]) {
      throw std::logic_error("boundary dof set changed between realizations");
    }
    values[k] = data[k].value;
  }
  return values;
}

namespace {

// Momentum operator shared by all members: mass/dt, convection by the
// ensemble mean, mean plus eddy viscosity, and optional grad-div.
SparseMatrix shared_momentum(const Assembler& assembler,
                             const ViscosityEnsemble& visc,
                             const EnsembleState& state,
                             const SchemeConfig& cfg, double graddiv) {
  CoefficientField diffusion = visc.mean;
  if (cfg.mu > 0.0) {
    diffusion += 2.0 * assembler.eev_coefficient(state.fluctuations, cfg.mu, cfg.dt);
  }
  if (!diffusion.all_finite() || diffusion.min() < 0.0) {
    throw std::domain_error("invalid diffusion coefficient at step " +
                            std::to_string(state.step));
  }
  MomentumTerms terms;
  terms.mass_scale = 1.0 / cfg.dt;
  terms.advecting = &state.mean;
  terms.diffusion = &diffusion;
  terms.graddiv = graddiv;
  return assembler.momentum(terms);
}

}  // namespace

void EnsembleSolver::coupled_step(std::vector<Vector>& velocity,
                                  std::vector<Vector>& pressure,
                                  double& residual) const {
  const Assembler& as = disc_.assembler();
  const int nu = disc_.velocity().n_dofs();
  const int np = disc_.pressure().n_dofs();
  const double t1 = (state_.step + 1) * config_.dt;
  const SparseMatrix a = shared_momentum(as, viscosity_, state_, config_, 0.0);
  std::vector<int> dofs = dirichlet_dofs_;
  dofs.push_back(pressure_pin_);
  const ConstrainedMatrix system(compose_saddle(a, disc_.div()), std::move(dofs));
  const Factorization factor(system.matrix());

  const int count = state_.size();
  velocity.assign(count, Vector());
  pressure.assign(count, Vector());
  std::vector<double> res(count, 0.0);
  parallel_for(count, config_.threads, [&](int j) {
    Vector rhs = Vector::Zero(nu + np);
    rhs.head(nu) = disc_.mass() * state_.velocity[j] / config_.dt +
                   as.lagged_rhs(state_.velocity[j], state_.fluctuations[j],
                                 viscosity_.fluctuations[j],
                                 problem_.realizations[j].forcing, t1);
    std::vector<double> values = boundary_values(j, t1);
    values.push_back(0.0);
    system.lift(rhs, values);
    const Vector x = factor.solve(rhs);
    res[j] = relative_residual(system.matrix(), x, rhs);
    velocity[j] = x.head(nu);
    pressure[j] = x.tail(np);
  });
  residual = *std::max_element(res.begin(), res.end());
}

std::vector<Vector> EnsembleSolver::spp_step1(double& residual) const {
  const Assembler& as = disc_.assembler();
  const double t1 = (state_.step + 1) * config_.dt;
  const SparseMatrix a =
      shared_momentum(as, viscosity_, state_, config_, config_.gamma);
  const ConstrainedMatrix system(a, dirichlet_dofs_);
  const Factorization factor(system.matrix());

  const int count = state_.size();
  std::vector<Vector> out(count);
  std::vector<double> res(count, 0.0);
  parallel_for(count, config_.threads, [&](int j) {
    Vector rhs = disc_.mass() * state_.projected[j] / config_.dt +
                 as.lagged_rhs(state_.velocity[j], state_.fluctuations[j],
                               viscosity_.fluctuations[j],
                               problem_.realizations[j].forcing, t1);
    system.lift(rhs, boundary_values(j, t1));
    out[j] = factor.solve(rhs);
    res[j] = relative_residual(system.matrix(), out[j], rhs);
  });
  residual = *std::max_element(res.begin(), res.end());
  return out;
}

void EnsembleSolver::spp_step2(const std::vector<Vector>& intermediate,
                               std::vector<Vector>& projected,
                               std::vector<Vector>& pressure,
                               double& residual) const {
  if (!projection_factor_) {
    throw std::logic_error("projection step requires the splitting scheme");
  }
  const int nu = disc_.velocity().n_dofs();
  const int np = disc_.pressure().n_dofs();
  const int count = static_cast<int>(intermediate.size());
  projected.assign(count, Vector());
  pressure.assign(count, Vector());
  std::vector<double> res(count, 0.0);
  parallel_for(count, config_.threads, [&](int j) {
    const Vector& u = intermediate[j];
    if (u.size() != nu) throw std::invalid_argument("intermediate velocity size");
    Vector rhs = Vector::Zero(nu + np);
    rhs.head(nu) = disc_.mass() * u / config_.dt;
    std::vector<double> values;
    values.reserve(projection_dofs_.size() + 1);
    for (int d : projection_dofs_) values.push_back(u[d]);
    values.push_back(0.0);
    projection_matrix_->lift(rhs, values);
    const Vector x = projection_factor_->solve(rhs);
    res[j] = relative_residual(projection_matrix_->matrix(), x, rhs);
    projected[j] = x.head(nu);
    pressure[j] = x.tail(np);
  });
  residual = count ? *std::max_element(res.begin(), res.end()) : 0.0;
}

double EnsembleSolver::energy() const {
  return ensemble_energy(disc_.mass(), state_.velocity, problem_.viscosity.weights);
}

StabilityReport EnsembleSolver::stability() const {
  return stability_diagnostics(viscosity_, disc_.assembler(), state_.fluctuations,
                               config_.dt);
}

StepReport EnsembleSolver::step() {
  StepReport r;
  EnsembleState next;
  next.step = state_.step + 1;
  next.time = next.step * config_.dt;
  if (config_.scheme == SchemeKind::Coupled) {
    coupled_step(next.velocity, next.pressure, r.residual_max);
  } else {
    double r1 = 0.0, r2 = 0.0;
    next.velocity = spp_step1(r1);
    spp_step2(next.velocity, next.projected, next.pressure, r2);
    r.residual_max = std::max(r1, r2);
    const SparseMatrix& m = disc_.mass();
    for (int j = 0; j < next.size(); ++j) {
      const Vector& hat = next.velocity[j];
      const Vector& tilde = next.projected[j];
      r.projected_div_max =
          std::max(r.projected_div_max, (disc_.div() * tilde).norm());
      const double growth =
          std::sqrt(tilde.dot(m * tilde)) - std::sqrt(hat.dot(m * hat));
      r.contraction_max = j == 0 ? growth : std::max(r.contraction_max, growth);
      r.projected_l2_div_max = std::max(
          r.projected_l2_div_max, disc_.assembler().divergence_l2(tilde));
    }
  }
  next.refresh();
  state_ = std::move(next);
  r.step = state_.step;
  r.time = state_.time;
  r.energy = energy();
  for (const auto& u : state_.velocity) {
    r.div_l2_max = std::max(r.div_l2_max, disc_.assembler().divergence_l2(u));
  }
  r.alpha_min = *std::min_element(viscosity_.alpha.begin(), viscosity_.alpha.end());
  return r;
}

std::vector<StepReport> EnsembleSolver::run(
    const std::function<void(const EnsembleSolver&, const StepReport&)>& observer) {
  std::vector<StepReport> out;
  const int steps = config_.steps();
  while (state_.step < steps) {
    out.push_back(step());
    if (observer) observer(*this, out.back());
  }
  return out;
}

Vector recover_gamma_pressure(const FESpace& pressure_space,
                              const Vector& lagged_pressure,
                              const FESpace& velocity_space,
                              const Vector& intermediate, double gamma,
                              const FESpace& p1disc) {
  if (p1disc.kind() != SpaceKind::P1disc) {
    throw std::invalid_argument("target space must be discontinuous P1");
  }
  Vector lag;
  if (pressure_space.kind() == SpaceKind::P1) {
    lag = p1_to_p1disc(pressure_space, p1disc, lagged_pressure);
  } else if (pressure_space.kind() == SpaceKind::P1disc) {
    lag = lagged_pressure;
  } else {
    throw std::invalid_argument("pressure space must be scalar");
  }
  Vector r = subtract_mean(p1disc, lag);
  if (gamma != 0.0) {
    r -= gamma * divergence_p1disc(velocity_space, p1disc, intermediate);
  }
  return subtract_mean(p1disc, r);
}

double ensemble_energy(const SparseMatrix& mass, const std::vector<Vector>& velocity,
                       std::span<const double> weights) {
  if (velocity.empty()) return 0.0;
  if (!weights.empty()) {
    if (weights.size() != velocity.size()) {
      throw std::invalid_argument("energy: " + std::to_string(weights.size()) +
                                  " weights for " +
                                  std::to_string(velocity.size()) + " members");
    }
    double e = 0.0;
    for (std::size_t j = 0; j < velocity.size(); ++j) {
      e += weights[j] * velocity[j].dot(mass * velocity[j]);
    }
    return 0.5 * e;
  }
  Vector mean = velocity[0];
  for (std::size_t j = 1; j < velocity.size(); ++j) mean += velocity[j];
  mean /= static_cast<double>(velocity.size());
  return 0.5 * mean.dot(mass * mean);
}

StabilityReport stability_diagnostics(const ViscosityEnsemble& viscosity,
                                      const Assembler& assembler,
                                      const std::vector<Vector>& fluctuations,
                                      double dt) {
  StabilityReport r;
  r.alpha = viscosity.alpha;
  for (double a : r.alpha) r.flagged.push_back(!(a > 0.0));
  for (std::size_t j = 0; j < fluctuations.size(); ++j) {
    const double d = assembler.max_divergence(fluctuations[j]);
    r.max_div_fluctuation.push_back(d);
    const double alpha = j < r.alpha.size() ? r.alpha[j] : 0.0;
    const double bound =
        d > 0.0 ? alpha / (d * d) : std::numeric_limits<double>::infinity();
    r.dt_bound.push_back(bound);
    if (dt >= bound) r.dt_exceeds_bound = true;
  }
  return r;
}

void write_time_series_csv(std::ostream& out, const std::vector<StepReport>& rows) {
  out << "step,time,energy,div_l2_max,alpha_min\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_double(r.time) << ',' << format_double(r.energy)
        << ',' << format_double(r.div_l2_max) << ',' << format_double(r.alpha_min)
        << '\n';
  }
}

void write_vtk(std::ostream& out, const FESpace& space, const Vector& velocity,
               const std::string& name) {
  if (!space.is_vector() || velocity.size() != space.n_dofs()) {
    throw std::invalid_argument("VTK export needs a P2 velocity field");
  }
  const TriMesh& mesh = space.mesh();
  out << "# vtk DataFile Version 3.0\n" << name << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const auto& p : mesh.nodes()) {
    out << format_double(p.x) << ' ' << format_double(p.y) << " 0\n";
  }
  out << "CELLS " << mesh.n_cells() << ' ' << 4 * mesh.n_cells() << '\n';
  for (const auto& c : mesh.cells()) {
    out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
  }
  out << "CELL_TYPES " << mesh.n_cells() << '\n';
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) out << "5\n";
  out << "POINT_DATA " << mesh.n_nodes() << "\nVECTORS velocity double\n";
  // Vertex dofs come first in the P2 numbering.
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i) {
    out << format_double(velocity[2 * i]) << ' ' << format_double(velocity[2 * i + 1])
        << " 0\n";
  }
}

}  // namespace ensflow
