#include "ensflow/fespace.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include "ensflow/format.hpp"

namespace ensflow {

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::P1:
      return "P1";
    case SpaceKind::P1disc:
      return "P1disc";
    case SpaceKind::P2vec:
      return "P2vec";
  }
  return "?";
}

CellMap cell_map(const TriMesh& mesh, int cell) {
  const auto& v = mesh.cells()[cell];
  const Point& a = mesh.nodes()[v[0]];
  const Point& b = mesh.nodes()[v[1]];
  const Point& c = mesh.nodes()[v[2]];
  CellMap m;
  m.origin = a;
  m.jacobian << b.x - a.x, c.x - a.x, b.y - a.y, c.y - a.y;
  m.det = m.jacobian.determinant();
  m.inverse_transpose = m.jacobian.inverse().transpose();
  return m;
}

void reference_basis(int degree, double xi, double eta, double* values,
                     std::array<double, 2>* grads) {
  const double lam[3] = {1.0 - xi - eta, xi, eta};
  static constexpr double dlam[3][2] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
  if (degree == 1) {
    for (int i = 0; i < 3; ++i) {
      if (values) values[i] = lam[i];
      if (grads) grads[i] = {dlam[i][0], dlam[i][1]};
    }
    return;
  }
  if (degree != 2) throw std::invalid_argument("basis degree must be 1 or 2");
  for (int i = 0; i < 3; ++i) {
    if (values) values[i] = lam[i] * (2.0 * lam[i] - 1.0);
    if (grads) {
      const double s = 4.0 * lam[i] - 1.0;
      grads[i] = {s * dlam[i][0], s * dlam[i][1]};
    }
  }
  for (int k = 0; k < 3; ++k) {
    const int a = (k + 1) % 3, b = (k + 2) % 3;
    if (values) values[3 + k] = 4.0 * lam[a] * lam[b];
    if (grads) {
      grads[3 + k] = {4.0 * (lam[a] * dlam[b][0] + lam[b] * dlam[a][0]),
                      4.0 * (lam[a] * dlam[b][1] + lam[b] * dlam[a][1])};
    }
  }
}

ShapeTable shape_table(int degree, const QuadratureRule& rule) {
  ShapeTable t;
  t.n_functions = degree == 1 ? 3 : 6;
  t.value.resize(rule.size() * t.n_functions);
  t.grad.resize(rule.size() * t.n_functions);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    reference_basis(degree, rule.points[q][0], rule.points[q][1],
                    &t.value[q * t.n_functions], &t.grad[q * t.n_functions]);
  }
  return t;
}

FESpace::FESpace(std::shared_ptr<const TriMesh> mesh, SpaceKind kind)
    : mesh_(std::move(mesh)), kind_(kind) {
  const TriMesh& m = *mesh_;
  const int nc = static_cast<int>(m.n_cells());
  dof_map_.resize(static_cast<std::size_t>(nc) * dofs_per_cell());
  switch (kind_) {
    case SpaceKind::P1:
      n_dofs_ = static_cast<int>(m.n_nodes());
      support_ = m.nodes();
      for (int c = 0; c < nc; ++c) {
        for (int k = 0; k < 3; ++k) dof_map_[3 * c + k] = m.cells()[c][k];
      }
      break;
    case SpaceKind::P1disc:
      n_dofs_ = 3 * nc;
      support_.reserve(n_dofs_);
      for (int c = 0; c < nc; ++c) {
        for (int k = 0; k < 3; ++k) {
          dof_map_[3 * c + k] = 3 * c + k;
          support_.push_back(m.nodes()[m.cells()[c][k]]);
        }
      }
      break;
    case SpaceKind::P2vec: {
      const int nn = static_cast<int>(m.n_nodes());
      support_ = m.nodes();
      for (const auto& e : m.edges()) {
        const Point& a = m.nodes()[e[0]];
        const Point& b = m.nodes()[e[1]];
        support_.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
      }
      n_dofs_ = 2 * static_cast<int>(support_.size());
      for (int c = 0; c < nc; ++c) {
        int scalar[6];
        for (int k = 0; k < 3; ++k) {
          scalar[k] = m.cells()[c][k];
          scalar[3 + k] = nn + m.cell_edges()[c][k];
        }
        for (int a = 0; a < 6; ++a) {
          dof_map_[12 * c + 2 * a] = 2 * scalar[a];
          dof_map_[12 * c + 2 * a + 1] = 2 * scalar[a] + 1;
        }
      }
      break;
    }
  }
}

namespace {

void require_finite(double v, const Point& p) {
  if (!std::isfinite(v)) {
    throw std::domain_error("non-finite sample at (" + format_double(p.x) +
                            ", " + format_double(p.y) + ")");
  }
}

}  // namespace

Eigen::VectorXd interpolate(const FESpace& space, const ScalarFunction& f,
                            double t) {
  if (space.is_vector()) {
    throw std::invalid_argument("scalar interpolation into a vector space");
  }
  Eigen::VectorXd out(space.n_dofs());
  const auto& pts = space.support_points();
  for (int i = 0; i < space.n_dofs(); ++i) {
    out[i] = f(pts[i], t);
    require_finite(out[i], pts[i]);
  }
  return out;
}

Eigen::VectorXd interpolate(const FESpace& space, const VectorFunction& f,
                            double t) {
  if (!space.is_vector()) {
    throw std::invalid_argument("vector interpolation into a scalar space");
  }
  Eigen::VectorXd out(space.n_dofs());
  const auto& pts = space.support_points();
  for (std::size_t s = 0; s < pts.size(); ++s) {
    const Vec2 v = f(pts[s], t);
    require_finite(v[0], pts[s]);
    require_finite(v[1], pts[s]);
    out[2 * s] = v[0];
    out[2 * s + 1] = v[1];
  }
  return out;
}

double evaluate_scalar(const FESpace& space, const Eigen::VectorXd& coeffs,
                       int cell, double xi, double eta) {
  if (space.is_vector()) throw std::invalid_argument("vector space");
  double phi[3];
  reference_basis(1, xi, eta, phi, nullptr);
  const auto dofs = space.cell_dofs(cell);
  return coeffs[dofs[0]] * phi[0] + coeffs[dofs[1]] * phi[1] +
         coeffs[dofs[2]] * phi[2];
}

Vec2 evaluate_vector(const FESpace& space, const Eigen::VectorXd& coeffs,
                     int cell, double xi, double eta) {
  if (!space.is_vector()) throw std::invalid_argument("scalar space");
  double phi[6];
  reference_basis(2, xi, eta, phi, nullptr);
  const auto dofs = space.cell_dofs(cell);
  Vec2 v = Vec2::Zero();
  for (int a = 0; a < 6; ++a) {
    v[0] += coeffs[dofs[2 * a]] * phi[a];
    v[1] += coeffs[dofs[2 * a + 1]] * phi[a];
  }
  return v;
}

Location locate(const TriMesh& mesh, const Point& p) {
  constexpr double tol = 1e-12;
  for (int c = 0; c < static_cast<int>(mesh.n_cells()); ++c) {
    const CellMap m = cell_map(mesh, c);
    const Eigen::Vector2d ref =
        m.jacobian.inverse() * Eigen::Vector2d(p.x - m.origin.x,
                                               p.y - m.origin.y);
    if (ref[0] >= -tol && ref[1] >= -tol && ref[0] + ref[1] <= 1.0 + tol) {
      return {c, ref[0], ref[1]};
    }
  }
  return {};
}

std::vector<DirichletValue> apply_dirichlet(const FESpace& space,
                                            const BoundaryData& data,
                                            double t) {
  if (!space.is_vector()) {
    throw std::invalid_argument("Dirichlet data applies to the velocity space");
  }
  const TriMesh& mesh = space.mesh();
  const int nn = static_cast<int>(mesh.n_nodes());
  std::map<int, double> values;
  auto put = [&](int scalar, const Vec2& v) {
    for (int c = 0; c < 2; ++c) {
      const int dof = 2 * scalar + c;
      auto [it, inserted] = values.try_emplace(dof, v[c]);
      if (!inserted &&
          std::abs(it->second - v[c]) > 1e-12 * (1.0 + std::abs(v[c]))) {
        const Point& p = space.support_points()[scalar];
        throw std::invalid_argument(
            "boundary data disagree at (" + format_double(p.x) + ", " +
            format_double(p.y) + ")");
      }
    }
  };
  for (int e : mesh.boundary_edges()) {
    const std::string& tag = mesh.boundary_tag(e);
    auto it = data.find(tag);
    if (it == data.end()) {
      throw std::invalid_argument("no boundary data for tag '" + tag + "'");
    }
    const auto& f = it->second;
    const int scalars[3] = {mesh.edges()[e][0], mesh.edges()[e][1], nn + e};
    for (int s : scalars) {
      const Point& p = space.support_points()[s];
      const Vec2 v = f(p, t);
      require_finite(v[0], p);
      require_finite(v[1], p);
      put(s, v);
    }
  }
  std::vector<DirichletValue> out;
  out.reserve(values.size());
  for (const auto& [dof, v] : values) out.push_back({dof, v});
  return out;
}

std::vector<int> normal_boundary_dofs(const FESpace& space) {
  if (!space.is_vector()) throw std::invalid_argument("vector space required");
  const TriMesh& mesh = space.mesh();
  const int nn = static_cast<int>(mesh.n_nodes());
  std::set<int> dofs;
  for (int e : mesh.boundary_edges()) {
    const Point& a = mesh.nodes()[mesh.edges()[e][0]];
    const Point& b = mesh.nodes()[mesh.edges()[e][1]];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    int component;
    if (std::abs(b.y - a.y) <= 1e-12 * len) {
      component = 1;
    } else if (std::abs(b.x - a.x) <= 1e-12 * len) {
      component = 0;
    } else {
      throw std::invalid_argument("normal constraint needs axis-aligned edges");
    }
    for (int s : {mesh.edges()[e][0], mesh.edges()[e][1], nn + e}) {
      dofs.insert(2 * s + component);
    }
  }
  return {dofs.begin(), dofs.end()};
}

std::vector<int> boundary_dofs(const FESpace& space) {
  if (!space.is_vector()) throw std::invalid_argument("vector space required");
  const TriMesh& mesh = space.mesh();
  const int nn = static_cast<int>(mesh.n_nodes());
  std::set<int> dofs;
  for (int e : mesh.boundary_edges()) {
    for (int s : {mesh.edges()[e][0], mesh.edges()[e][1], nn + e}) {
      dofs.insert(2 * s);
      dofs.insert(2 * s + 1);
    }
  }
  return {dofs.begin(), dofs.end()};
}

}  // namespace ensflow
