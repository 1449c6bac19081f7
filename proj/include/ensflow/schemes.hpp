#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ensflow/assembly.hpp"
#include "ensflow/fespace.hpp"
#include "ensflow/linalg.hpp"
#include "ensflow/problems.hpp"

namespace ensflow {

enum class SchemeKind { Coupled, SPP };
enum class ElementPair { ScottVogelius, TaylorHood };

const char* to_string(SchemeKind kind);
const char* to_string(ElementPair pair);
SchemeKind parse_scheme(const std::string& name);
ElementPair parse_element_pair(const std::string& name);

struct SchemeConfig {
  double dt = 0.1;
  double T = 1.0;
  double gamma = 0.0;
  double mu = 1.0;
  SchemeKind scheme = SchemeKind::Coupled;
  ElementPair pair = ElementPair::ScottVogelius;
  int threads = 1;

  /// M = T / dt; throws unless it is a positive integer (to 1e-9).
  int steps() const;
  void validate() const;
};

/// Refined mesh, velocity/pressure spaces and the cached assembler. Not
/// copyable or movable: the assembler refers to the velocity space.
class Discretization {
 public:
  /// Structured nx x ny grid of the problem domain, classified and
  /// barycentric-refined.
  Discretization(const ProblemSpec& problem, int nx, int ny, ElementPair pair);
  Discretization(std::shared_ptr<const TriMesh> refined, ElementPair pair);
  Discretization(const Discretization&) = delete;
  Discretization& operator=(const Discretization&) = delete;

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  ElementPair pair() const { return pair_; }
  const FESpace& velocity() const { return velocity_; }
  const FESpace& pressure() const { return pressure_; }
  const Assembler& assembler() const { return assembler_; }
  /// Cached operators.
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  const SparseMatrix& graddiv() const { return graddiv_; }
  const SparseMatrix& div() const { return div_; }
  const SparseMatrix& pressure_mass() const { return pressure_mass_; }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  ElementPair pair_;
  FESpace velocity_;
  FESpace pressure_;
  Assembler assembler_;
  SparseMatrix mass_, stiffness_, graddiv_, div_, pressure_mass_;
};

/// Per-member viscosities sampled at quadrature points with their mean,
/// fluctuations and stability margins.
struct ViscosityEnsemble {
  std::vector<CoefficientField> members;
  CoefficientField mean;
  std::vector<CoefficientField> fluctuations;
  double mean_min = 0.0;
  std::vector<double> fluctuation_max;  // ||nu'_j||_inf
  std::vector<double> alpha;            // mean_min - ||nu'_j||_inf

  static ViscosityEnsemble sample(const Assembler& assembler,
                                  const ViscosityModel& model);
  int size() const { return static_cast<int>(members.size()); }
};

/// Ensemble at one time level. For the splitting scheme `velocity` holds the
/// intermediate fields u^_j and `projected` the projected fields u~_j.
struct EnsembleState {
  int step = 0;
  double time = 0.0;
  std::vector<Vector> velocity;
  std::vector<Vector> projected;
  std::vector<Vector> pressure;
  Vector mean;
  std::vector<Vector> fluctuations;

  int size() const { return static_cast<int>(velocity.size()); }
  /// Recomputes mean and fluctuations of `velocity`; throws on non-finite
  /// coefficients.
  void refresh();
};

/// Per-step diagnostics.
struct StepReport {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;
  /// max_j ||div u_j||_L2 of the reported velocity (u_j or u^_j).
  double div_l2_max = 0.0;
  double alpha_min = 0.0;
  /// Largest relative residual over all solves of the step.
  double residual_max = 0.0;
  // Projection step only.
  double projected_div_max = 0.0;    // max_j ||B u~_j||_2
  double contraction_max = 0.0;      // max_j ||u~_j|| - ||u^_j|| (L2)
  double projected_l2_div_max = 0.0; // max_j ||div u~_j||_L2
};

struct StabilityReport {
  std::vector<double> alpha;
  std::vector<bool> flagged;  // alpha_j <= 0
  std::vector<double> max_div_fluctuation;
  /// alpha_j / max|div u'_j|^2 with C = 1 (infinite when the divergence
  /// vanishes).
  std::vector<double> dt_bound;
  bool dt_exceeds_bound = false;
};

/// Runs one of the two ensemble schemes on a discretized problem.
class EnsembleSolver {
 public:
  EnsembleSolver(const ProblemSpec& problem, const Discretization& disc,
                 SchemeConfig config);

  const EnsembleState& state() const { return state_; }
  const SchemeConfig& config() const { return config_; }
  const ViscosityEnsemble& viscosity() const { return viscosity_; }
  const Discretization& discretization() const { return disc_; }

  /// Replaces the state (for tests); refreshes mean and fluctuations.
  void set_state(EnsembleState state);

  /// Advances one time level with the configured scheme.
  StepReport step();
  /// Steps until T, invoking `observer` after every step when given.
  std::vector<StepReport> run(
      const std::function<void(const EnsembleSolver&, const StepReport&)>&
          observer = nullptr);

  /// Coupled scheme: returns (u_j^{n+1}, p_j^{n+1}).
  void coupled_step(std::vector<Vector>& velocity, std::vector<Vector>& pressure,
                    double& residual) const;
  /// Splitting scheme, first stage: intermediate velocities.
  std::vector<Vector> spp_step1(double& residual) const;
  /// Splitting scheme, projection stage: (u~_j, p^_j) from u^_j.
  void spp_step2(const std::vector<Vector>& intermediate,
                 std::vector<Vector>& projected, std::vector<Vector>& pressure,
                 double& residual) const;

  /// Energy of the reported velocity of the current state.
  double energy() const;
  StabilityReport stability() const;

 private:
  std::vector<double> boundary_values(int j, double t) const;

  const ProblemSpec& problem_;
  const Discretization& disc_;
  SchemeConfig config_;
  ViscosityEnsemble viscosity_;
  EnsembleState state_;
  std::vector<int> dirichlet_dofs_;
  std::vector<int> projection_dofs_;
  int pressure_pin_ = 0;
  std::unique_ptr<ConstrainedMatrix> projection_matrix_;
  std::unique_ptr<Factorization> projection_factor_;
};

/// Zero-mean recovered pressure p^_{gamma}^n = p^^{n-1} - mean - gamma div u^^n
/// as a discontinuous P1 field on the velocity mesh.
Vector recover_gamma_pressure(const FESpace& pressure_space,
                              const Vector& lagged_pressure,
                              const FESpace& velocity_space,
                              const Vector& intermediate, double gamma,
                              const FESpace& p1disc);

/// 1/2 sum_j w_j ||u_j||^2 with weights, else 1/2 ||<u>||^2 (mass matrix norm).
double ensemble_energy(const SparseMatrix& mass, const std::vector<Vector>& velocity,
                       std::span<const double> weights = {});

/// Stability margins and the step-size indicator of the coupled scheme.
StabilityReport stability_diagnostics(const ViscosityEnsemble& viscosity,
                                      const Assembler& assembler,
                                      const std::vector<Vector>& fluctuations,
                                      double dt);

/// "step,time,energy,div_l2_max,alpha_min" rows, 17 significant digits.
void write_time_series_csv(std::ostream& out, const std::vector<StepReport>& rows);

/// Legacy VTK unstructured grid of a P2 velocity at mesh vertices.
void write_vtk(std::ostream& out, const FESpace& space, const Vector& velocity,
               const std::string& name);

}  // namespace ensflow
