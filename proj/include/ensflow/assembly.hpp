#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ensflow/fespace.hpp"
#include "ensflow/linalg.hpp"
#include "ensflow/quadrature.hpp"

namespace ensflow {

/// Scalar coefficient sampled at the quadrature points of every cell.
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(std::size_t n_cells, std::size_t n_points, double value = 0.0)
      : n_points_(n_points), values_(n_cells * n_points, value) {}

  static CoefficientField from_function(
      const TriMesh& mesh, const QuadratureRule& rule,
      const std::function<double(const Point&)>& f);

  std::size_t n_cells() const {
    return n_points_ ? values_.size() / n_points_ : 0;
  }
  std::size_t n_points() const { return n_points_; }

  double operator()(std::size_t cell, std::size_t q) const {
    return values_[cell * n_points_ + q];
  }
  double& operator()(std::size_t cell, std::size_t q) {
    return values_[cell * n_points_ + q];
  }
  const std::vector<double>& values() const { return values_; }

  double min() const;
  double max() const;
  double max_abs() const;
  bool all_finite() const;

  CoefficientField& operator+=(const CoefficientField& other);
  CoefficientField& operator-=(const CoefficientField& other);
  CoefficientField& operator*=(double s);

 private:
  std::size_t n_points_ = 0;
  std::vector<double> values_;
};

CoefficientField operator+(CoefficientField a, const CoefficientField& b);
CoefficientField operator-(CoefficientField a, const CoefficientField& b);
CoefficientField operator*(double s, CoefficientField a);

/// Terms of a velocity operator assembled in a single pass:
///   mass_scale (u, v) + b*(advecting, u, v) + (diffusion grad u, grad v)
///   + graddiv (div u, div v).
struct MomentumTerms {
  double mass_scale = 0.0;
  const Vector* advecting = nullptr;
  const CoefficientField* diffusion = nullptr;
  double graddiv = 0.0;
};

/// Cell-loop assembler for one finite element space. Caches the sparsity
/// pattern, the cell maps and the reference shape tables so that repeated
/// per-step assemblies only fill values.
class Assembler {
 public:
  explicit Assembler(const FESpace& space, int quad_degree = kAssemblyDegree);

  const FESpace& space() const { return space_; }
  const QuadratureRule& rule() const { return rule_; }
  const CellMap& map(int cell) const { return maps_[cell]; }

  SparseMatrix mass() const;
  /// Rejects negative coefficients unless `allow_negative`.
  SparseMatrix diffusion(const CoefficientField& coeff,
                         bool allow_negative = false) const;
  SparseMatrix graddiv() const;
  SparseMatrix convection(const Vector& w) const;
  SparseMatrix momentum(const MomentumTerms& terms) const;
  /// (B u)_q = (q, div u) for a pressure space on the same mesh.
  SparseMatrix div_coupling(const FESpace& pressure) const;

  /// (f(t), phi_i).
  Vector load(const VectorFunction& f, double t) const;
  /// r_i = b*(w, v, phi_i).
  Vector convection_vector(const Vector& w, const Vector& v) const;
  /// r_i = (coeff grad v, grad phi_i).
  Vector diffusion_vector(const CoefficientField& coeff, const Vector& v) const;

  /// (f(t), chi) - b*(fluct, u, chi) - (nu_fluct grad u, grad chi) in one
  /// pass over the cells.
  Vector lagged_rhs(const Vector& u, const Vector& fluctuation,
                    const CoefficientField& nu_fluctuation,
                    const VectorFunction& forcing, double t) const;

  /// mu * dt * sum_j |u'_j|^2 at every quadrature point.
  CoefficientField eev_coefficient(std::span<const Vector> fluctuations,
                                   double mu, double dt) const;

  /// Values and gradients of a P2vec field at the quadrature points of a
  /// cell. Gradient (i, j) = d u_i / d x_j.
  void evaluate(const Vector& u, int cell, Vec2* values, Mat2* grads) const;

  /// max |div u| over the domain (div u is linear per cell, so the
  /// maximum is attained at cell vertices).
  double max_divergence(const Vector& u) const;
  /// ||div u||_L2 summed from pointwise values, free of the cancellation
  /// in u^T G u.
  double divergence_l2(const Vector& u) const;

  CoefficientField constant(double value) const {
    return CoefficientField(space_.mesh().n_cells(), rule_.size(), value);
  }
  CoefficientField sample(const std::function<double(const Point&)>& f) const {
    return CoefficientField::from_function(space_.mesh(), rule_, f);
  }

 private:
  void check_vector(const char* what) const;
  void check_length(const Vector& v, const char* what) const;
  SparseMatrix finish(std::vector<double>& values) const;

  const FESpace& space_;
  QuadratureRule rule_;
  ShapeTable shapes_;
  std::vector<CellMap> maps_;
  // Sparsity of the space-by-space operator and the slot of every local
  // entry (cell-major, row-major local block).
  std::vector<int> row_ptr_, col_idx_, slot_;
};

// Free-function forms of the operators. Each builds a throwaway Assembler;
// time loops keep one Assembler alive instead.

SparseMatrix assemble_mass(const FESpace& space);
SparseMatrix assemble_diffusion(const FESpace& space,
                                const CoefficientField& coeff);
SparseMatrix assemble_graddiv(const FESpace& space);
SparseMatrix assemble_convection_skew(const FESpace& space, const Vector& w);
SparseMatrix assemble_div_coupling(const FESpace& velocity,
                                   const FESpace& pressure);
CoefficientField compute_eev_coefficient(const FESpace& space,
                                         std::span<const Vector> fluctuations,
                                         double mu, double dt);

/// (f(t), chi) - b*(u'_j, u_j, chi) - (nu'_j grad u_j, grad chi).
Vector assemble_rhs_lagged(const Assembler& assembler, const Vector& u,
                           const Vector& fluctuation,
                           const CoefficientField& nu_fluctuation,
                           const VectorFunction& forcing, double t);

/// Squared L2 norm of u - exact and of grad(u - exact) using a rule of
/// degree kErrorDegree.
struct ErrorNorms {
  double l2_sq = 0.0;
  double h1_semi_sq = 0.0;
};
ErrorNorms velocity_error(const FESpace& space, const Vector& u,
                          const VectorFunction& exact,
                          const GradientFunction& exact_grad, double t);

/// Squared L2 distance between a scalar field and a closed-form pressure,
/// both taken with zero mean.
double pressure_error_sq(const FESpace& space, const Vector& p,
                         const ScalarFunction& exact, double t);

/// Integral of a scalar field (P1 or P1disc).
double integrate_scalar(const FESpace& space, const Vector& p);

/// Subtracts the mean value of a scalar field.
Vector subtract_mean(const FESpace& space, const Vector& p);

/// Exact embedding of a continuous P1 field into P1disc on the same mesh.
Vector p1_to_p1disc(const FESpace& p1, const FESpace& p1disc, const Vector& p);

/// div u of a P2vec field as a P1disc field (exact for affine cells).
Vector divergence_p1disc(const FESpace& velocity, const FESpace& p1disc,
                         const Vector& u);

}  // namespace ensflow
