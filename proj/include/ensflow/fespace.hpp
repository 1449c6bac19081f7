#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ensflow/mesh.hpp"
#include "ensflow/quadrature.hpp"

namespace ensflow {

using Vec2 = Eigen::Vector2d;
/// Velocity gradient with entry (i, j) = d u_i / d x_j.
using Mat2 = Eigen::Matrix2d;

using ScalarFunction = std::function<double(const Point&, double)>;
using VectorFunction = std::function<Vec2(const Point&, double)>;
using GradientFunction = std::function<Mat2(const Point&, double)>;

enum class SpaceKind { P1, P1disc, P2vec };

const char* to_string(SpaceKind kind);

/// Affine map of a cell from the reference triangle.
struct CellMap {
  Point origin;
  Mat2 jacobian;
  Mat2 inverse_transpose;
  double det = 0.0;

  Point map(double xi, double eta) const {
    return {origin.x + jacobian(0, 0) * xi + jacobian(0, 1) * eta,
            origin.y + jacobian(1, 0) * xi + jacobian(1, 1) * eta};
  }
};

CellMap cell_map(const TriMesh& mesh, int cell);

/// Scalar shape functions of one reference element evaluated at the points
/// of a quadrature rule. P1 has 3 functions (vertex order), P2 has 6 (three
/// vertices, then edges opposite vertices 0, 1, 2).
struct ShapeTable {
  int n_functions = 0;
  std::vector<double> value;                  // [q * n + a]
  std::vector<std::array<double, 2>> grad;    // reference gradients

  double phi(std::size_t q, int a) const { return value[q * n_functions + a]; }
  const std::array<double, 2>& dphi(std::size_t q, int a) const {
    return grad[q * n_functions + a];
  }
};

/// Scalar basis of the given polynomial degree (1 or 2) at (xi, eta).
void reference_basis(int degree, double xi, double eta, double* values,
                     std::array<double, 2>* grads);

ShapeTable shape_table(int degree, const QuadratureRule& rule);

/// Degree-of-freedom map for P1, discontinuous P1 or vector P2 on a mesh.
///
/// Continuous spaces number vertices first, then edges; the vector space
/// interleaves components (dof = 2 * scalar_index + component). Local cell
/// dofs of P2vec follow the same interleaving over the six scalar functions.
class FESpace {
 public:
  FESpace(std::shared_ptr<const TriMesh> mesh, SpaceKind kind);

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  SpaceKind kind() const { return kind_; }
  bool is_vector() const { return kind_ == SpaceKind::P2vec; }
  int degree() const { return kind_ == SpaceKind::P2vec ? 2 : 1; }
  int n_components() const { return is_vector() ? 2 : 1; }
  /// Scalar shape functions per cell (3 or 6).
  int n_scalar_shapes() const { return kind_ == SpaceKind::P2vec ? 6 : 3; }
  int dofs_per_cell() const { return n_scalar_shapes() * n_components(); }

  int n_dofs() const { return n_dofs_; }

  std::span<const int> cell_dofs(int cell) const {
    return {dof_map_.data() + cell * dofs_per_cell(),
            static_cast<std::size_t>(dofs_per_cell())};
  }

  /// Location of each scalar dof (vertex, edge midpoint, or cell vertex).
  const std::vector<Point>& support_points() const { return support_; }
  /// Number of scalar dofs (n_dofs / n_components).
  int n_scalar_dofs() const { return static_cast<int>(support_.size()); }

 private:
  std::shared_ptr<const TriMesh> mesh_;
  SpaceKind kind_;
  int n_dofs_ = 0;
  std::vector<int> dof_map_;
  std::vector<Point> support_;
};

/// Nodal interpolation. Throws std::domain_error on non-finite samples.
Eigen::VectorXd interpolate(const FESpace& space, const ScalarFunction& f,
                            double t = 0.0);
Eigen::VectorXd interpolate(const FESpace& space, const VectorFunction& f,
                            double t = 0.0);

/// Value of a scalar field at reference point (xi, eta) of `cell`.
double evaluate_scalar(const FESpace& space, const Eigen::VectorXd& coeffs,
                       int cell, double xi, double eta);
/// Value of a P2vec field at reference point (xi, eta) of `cell`.
Vec2 evaluate_vector(const FESpace& space, const Eigen::VectorXd& coeffs,
                     int cell, double xi, double eta);

/// Cell containing `p` and its reference coordinates; cell = -1 if outside.
struct Location {
  int cell = -1;
  double xi = 0.0, eta = 0.0;
};
Location locate(const TriMesh& mesh, const Point& p);

struct DirichletValue {
  int dof = 0;
  double value = 0.0;
};

/// Boundary data per tag.
using BoundaryData = std::map<std::string, VectorFunction>;

/// Values of every vector dof on tagged boundary edges (endpoints and
/// midpoints, both components), sorted by dof. Throws std::invalid_argument
/// when a boundary tag has no data or corner values disagree.
std::vector<DirichletValue> apply_dirichlet(const FESpace& space,
                                            const BoundaryData& data,
                                            double t);

/// Dofs carrying the normal component on the boundary (axis-aligned edges
/// only; both components at corners). Sorted.
std::vector<int> normal_boundary_dofs(const FESpace& space);

/// All vector dofs on the boundary. Sorted.
std::vector<int> boundary_dofs(const FESpace& space);

}  // namespace ensflow
