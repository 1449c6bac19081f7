#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "ensflow/experiments.hpp"
#include "ensflow/mesh.hpp"
#include "ensflow/problems.hpp"
#include "ensflow/schemes.hpp"

namespace testing {

using namespace ensflow;

/// Refined unit-square mesh with every boundary edge tagged "dirichlet".
inline std::shared_ptr<const TriMesh> unit_square(int n, bool refine = true) {
  const BoundaryRule all{"dirichlet", [](const Point&, const Point&) { return true; }};
  TriMesh m = classify_boundary(build_structured_mesh(Rectangle{}, n, n), {all});
  return std::make_shared<const TriMesh>(refine ? barycentric_refine(m) : m);
}

/// Low-degree polynomial flow on the unit square: divergence-free quadratic
/// data, cubic forcing, so degree-5 quadrature is exact for every term.
inline ProblemSpec polynomial_problem(const std::vector<double>& nus,
                                      ProjectionBoundary mode = ProjectionBoundary::Full) {
  ProblemSpec p;
  p.name = "polynomial";
  p.domain = Rectangle{};
  p.boundary_rules = {{"dirichlet", [](const Point&, const Point&) { return true; }}};
  p.viscosity.kind = "constant";
  p.viscosity.constants = nus;
  for (double nu : nus) {
    p.viscosity.members.push_back([nu](const Point&) { return nu; });
    p.viscosity.mean += nu / static_cast<double>(nus.size());
  }
  p.projection_boundary = mode;
  for (std::size_t j = 0; j < nus.size(); ++j) {
    const double s = 1.0 + 0.1 * static_cast<double>(j);
    Realization r;
    // Stream function x^2 y + x y^2 scaled in time.
    VectorFunction u = [s](const Point& x, double t) {
      return Vec2(s * (1.0 + t) * (x.x * x.x + 2.0 * x.x * x.y),
                  -s * (1.0 + t) * (2.0 * x.x * x.y + x.y * x.y));
    };
    r.initial = u;
    r.boundary["dirichlet"] = u;
    r.forcing = [s](const Point& x, double t) {
      return Vec2(s * (1.0 + x.x * x.y * x.y + t), s * (x.x - x.y * x.y * x.x + 2.0 * t));
    };
    p.realizations.push_back(std::move(r));
  }
  return p;
}

/// Problem with zero data everywhere.
inline ProblemSpec zero_problem(int count, double nu) {
  ProblemSpec p;
  p.name = "zero";
  p.domain = Rectangle{};
  p.boundary_rules = {{"dirichlet", [](const Point&, const Point&) { return true; }}};
  p.viscosity = constant_viscosity(nu, count);
  p.projection_boundary = ProjectionBoundary::Normal;
  for (int j = 0; j < count; ++j) {
    Realization r;
    r.initial = [](const Point&, double) { return Vec2(0.0, 0.0); };
    r.boundary["dirichlet"] = r.initial;
    p.realizations.push_back(std::move(r));
  }
  return p;
}

inline Vector random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

inline double max_abs_entry(const SparseMatrix& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

/// Dense analytic monomial integral over the reference triangle:
/// int xi^a eta^b = a! b! / (a + b + 2)!.
inline double reference_monomial(int a, int b) {
  return std::tgamma(a + 1.0) * std::tgamma(b + 1.0) / std::tgamma(a + b + 3.0);
}

/// Central-difference residual of the momentum equation with constant
/// viscosity: u_t + (u . grad) u - nu lap u + grad p - f.
inline Vec2 fd_residual(const VectorFunction& u, const ScalarFunction& p, const VectorFunction& f,
                 double nu, const Point& x, double t) {
  const double h = 1e-5;
  const Point xp{x.x + h, x.y}, xm{x.x - h, x.y}, yp{x.x, x.y + h}, ym{x.x, x.y - h};
  const Vec2 u0 = u(x, t);
  const Vec2 ux = (u(xp, t) - u(xm, t)) / (2.0 * h);
  const Vec2 uy = (u(yp, t) - u(ym, t)) / (2.0 * h);
  const Vec2 ut = (u(x, t + h) - u(x, t - h)) / (2.0 * h);
  const Vec2 lap = (u(xp, t) + u(xm, t) + u(yp, t) + u(ym, t) - 4.0 * u0) / (h * h);
  const Vec2 gp((p(xp, t) - p(xm, t)) / (2.0 * h), (p(yp, t) - p(ym, t)) / (2.0 * h));
  return ut + u0.x() * ux + u0.y() * uy - nu * lap + gp - f(x, t);
}

}  // namespace testing
