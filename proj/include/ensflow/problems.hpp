#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ensflow/fespace.hpp"
#include "ensflow/mesh.hpp"
#include "ensflow/stochastic.hpp"

namespace ensflow {

/// Boundary constraint used by the projection step of the splitting scheme.
enum class ProjectionBoundary {
  /// Only the normal component is prescribed (axis-aligned boundaries).
  Normal,
  /// Both components are prescribed.
  Full,
};

/// Closed-form velocity and pressure of one realization.
struct ExactSolution {
  VectorFunction velocity;
  GradientFunction gradient;
  ScalarFunction pressure;
};

/// Data of realization j.
struct Realization {
  VectorFunction initial;
  BoundaryData boundary;
  /// Empty means zero forcing.
  VectorFunction forcing;
  std::optional<ExactSolution> exact;
};

/// Per-member viscosity fields nu_j(x), with optional collocation weights.
struct ViscosityModel {
  std::string kind;  // constant, uniform, kl
  std::vector<std::function<double(const Point&)>> members;
  /// Collocation weights; empty for plain ensembles.
  std::vector<double> weights;
  /// Nominal expected viscosity.
  double mean = 0.0;
  /// Constant value of each member when the fields are spatially constant.
  std::vector<double> constants;

  int size() const { return static_cast<int>(members.size()); }
};

/// Every member equal to nu.
ViscosityModel constant_viscosity(double nu, int count);

/// Spatially constant members drawn from U(a, b).
ViscosityModel uniform_viscosity(double a, double b, int count,
                                 std::uint64_t seed);

/// One member per collocation point; evaluation errors name the point.
ViscosityModel kl_viscosity(const KLViscosity& field, const SparseGrid& grid);

struct ProblemSpec {
  std::string name;
  Domain domain;
  std::vector<BoundaryRule> boundary_rules;
  std::vector<Realization> realizations;
  ViscosityModel viscosity;
  ProjectionBoundary projection_boundary = ProjectionBoundary::Normal;

  int ensemble_size() const { return static_cast<int>(realizations.size()); }
  bool has_exact() const;
  /// Exact ensemble mean velocity and its gradient (requires exact data).
  Vec2 mean_velocity(const Point& x, double t) const;
  Mat2 mean_gradient(const Point& x, double t) const;
  double mean_pressure(const Point& x, double t) const;
};

/// Closed forms of the manufactured flow on [0,1]^2, unscaled.
namespace manufactured {
Vec2 velocity(const Point& x, double t);
Mat2 gradient(const Point& x, double t);
Vec2 time_derivative(const Point& x, double t);
double pressure(const Point& x, double t);
Vec2 pressure_gradient(const Point& x, double t);
/// Forcing of the realization scaled by s = 1 + k eps with viscosity nu.
Vec2 forcing(const Point& x, double t, double s, double nu);
}  // namespace manufactured

/// Manufactured flow with realizations (1 + k_j eps) u, k_j from the
/// alternating formula, one constant viscosity per member.
ProblemSpec manufactured_problem(double eps, const ViscosityModel& viscosity);

/// Taylor-Green vortex on [0, L]^2 with f = 0. Initial and boundary data are
/// the closed form at the nominal mean viscosity; the exact solution is
/// attached only for constant viscosity.
ProblemSpec tgv_problem(const ViscosityModel& viscosity,
                        double length = 3.14159265358979323846);

Vec2 tgv_velocity(const Point& x, double t, double nu);
Mat2 tgv_gradient(const Point& x, double t, double nu);
double tgv_pressure(const Point& x, double t, double nu);

/// 40 x 10 channel with a unit step 5 units from the inlet, parabolic
/// inflow/outflow (1 + k_j eps)(x2 (x2 - 10) / 25, 0), linear k_j.
ProblemSpec step_channel_problem(double eps, const ViscosityModel& viscosity);

/// Regularized lid-driven cavity on [-1,1]^2, lid (1 + k_j eps)((1-x1^2)^2, 0),
/// linear k_j, zero initial data.
ProblemSpec cavity_problem(double eps, const ViscosityModel& viscosity);

/// Default KL fields of the benchmarks (q = 2, l = 0.01, c = 1).
KLViscosity tgv_kl_field();
KLViscosity step_kl_field();
KLViscosity cavity_kl_field();

}  // namespace ensflow
