#include <doctest.h>

#include <random>
#include <set>

#include "ensflow/fespace.hpp"
#include "ensflow/quadrature.hpp"
#include "support.hpp"

using namespace ensflow;

TEST_CASE("dof counts on the two-cell square") {
  const auto mesh = testing::unit_square(1, false);
  CHECK(FESpace(mesh, SpaceKind::P1).n_dofs() == 4);
  CHECK(FESpace(mesh, SpaceKind::P2vec).n_dofs() == 18);
  CHECK(FESpace(mesh, SpaceKind::P1disc).n_dofs() == 6);
}

TEST_CASE("dof maps cover every dof") {
  const auto mesh = testing::unit_square(3);
  for (SpaceKind kind : {SpaceKind::P1, SpaceKind::P1disc, SpaceKind::P2vec}) {
    const FESpace s(mesh, kind);
    std::set<int> seen;
    for (int c = 0; c < static_cast<int>(mesh->n_cells()); ++c) {
      for (int d : s.cell_dofs(c)) {
        CHECK(d >= 0);
        CHECK(d < s.n_dofs());
        seen.insert(d);
      }
    }
    CHECK(static_cast<int>(seen.size()) == s.n_dofs());
    CHECK(s.n_scalar_dofs() * s.n_components() == s.n_dofs());
  }
}

TEST_CASE("reference basis: partition of unity and finite-difference gradients") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int degree : {1, 2}) {
    const int n = degree == 1 ? 3 : 6;
    const QuadratureRule rule = quadrature_rule(8);
    const ShapeTable table = shape_table(degree, rule);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      double sum = 0.0;
      double gx = 0.0, gy = 0.0;
      for (int a = 0; a < n; ++a) {
        sum += table.phi(q, a);
        gx += table.dphi(q, a)[0];
        gy += table.dphi(q, a)[1];
      }
      CHECK(std::abs(sum - 1.0) <= 1e-14);
      CHECK(std::abs(gx) <= 1e-13);
      CHECK(std::abs(gy) <= 1e-13);
    }
    for (int trial = 0; trial < 50; ++trial) {
      double xi = u(rng), eta = u(rng);
      if (xi + eta > 1.0) {
        xi = 1.0 - xi;
        eta = 1.0 - eta;
      }
      double v[6], vp[6], vm[6];
      std::array<double, 2> g[6], dummy[6];
      reference_basis(degree, xi, eta, v, g);
      const double step = 1e-6;
      for (int dir = 0; dir < 2; ++dir) {
        reference_basis(degree, xi + (dir == 0 ? step : 0.0), eta + (dir == 1 ? step : 0.0), vp, dummy);
        reference_basis(degree, xi - (dir == 0 ? step : 0.0), eta - (dir == 1 ? step : 0.0), vm, dummy);
        for (int a = 0; a < n; ++a) {
          const double fd = (vp[a] - vm[a]) / (2.0 * step);
          CHECK(std::abs(fd - g[a][dir]) <= 1e-6 * std::max(1.0, std::abs(g[a][dir])));
        }
      }
    }
  }
  double v[6];
  std::array<double, 2> g[6];
  CHECK_THROWS_AS(reference_basis(3, 0.1, 0.1, v, g), std::invalid_argument);
}

TEST_CASE("interpolation") {
  const auto mesh = testing::unit_square(2);
  const FESpace p1(mesh, SpaceKind::P1);
  const FESpace p2(mesh, SpaceKind::P2vec);

  CHECK(interpolate(p2, VectorFunction([](const Point&, double) { return Vec2(0.0, 0.0); })).isZero(0.0));

  const Vector x1 = interpolate(p1, ScalarFunction([](const Point& x, double) { return x.x; }));
  for (int i = 0; i < p1.n_dofs(); ++i) CHECK(x1[i] == p1.support_points()[i].x);

  const auto tgv = [](const Point& x, double t) { return tgv_velocity(x, t, 0.01); };
  const auto tmesh = std::make_shared<const TriMesh>(barycentric_refine(
      build_structured_mesh(Rectangle{0.0, 3.14159265358979323846, 0.0, 3.14159265358979323846}, 3, 3)));
  const FESpace tv(tmesh, SpaceKind::P2vec);
  const Vector tu = interpolate(tv, VectorFunction(tgv), 0.5);
  for (int s = 0; s < tv.n_scalar_dofs(); ++s) {
    const Vec2 exact = tgv(tv.support_points()[s], 0.5);
    CHECK(std::abs(tu[2 * s] - exact.x()) <= 1e-14);
    CHECK(std::abs(tu[2 * s + 1] - exact.y()) <= 1e-14);
  }

  CHECK_THROWS_AS(interpolate(p2, VectorFunction([](const Point&, double) {
                    return Vec2(std::nan(""), 0.0);
                  })),
                  std::domain_error);
}

TEST_CASE("P2 reproduces quadratics at random interior points") {
  const auto mesh = testing::unit_square(3);
  const FESpace p2(mesh, SpaceKind::P2vec);
  auto f = [](const Point& x, double) {
    return Vec2(1.0 + 2.0 * x.x - x.y + 3.0 * x.x * x.y - x.y * x.y,
                -0.5 + x.x * x.x + 4.0 * x.y - 2.0 * x.x * x.y);
  };
  const Vector c = interpolate(p2, VectorFunction(f));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int k = 0; k < 100; ++k) {
    const Point p{u(rng), u(rng)};
    const Location loc = locate(*mesh, p);
    REQUIRE(loc.cell >= 0);
    const Vec2 v = evaluate_vector(p2, c, loc.cell, loc.xi, loc.eta);
    CHECK((v - f(p, 0.0)).norm() <= 1e-12);
  }
  CHECK(locate(*mesh, Point{2.0, 2.0}).cell == -1);
}

TEST_CASE("Dirichlet data") {
  const auto square = testing::unit_square(2);
  const FESpace v(square, SpaceKind::P2vec);
  BoundaryData zero{{"dirichlet", [](const Point&, double) { return Vec2(0.0, 0.0); }}};
  const auto values = apply_dirichlet(v, zero, 0.0);
  CHECK(values.size() == boundary_dofs(v).size());
  for (const auto& d : values) CHECK(d.value == 0.0);
  CHECK_THROWS_AS(apply_dirichlet(v, BoundaryData{}, 0.0), std::invalid_argument);

  const ProblemSpec cav = cavity_problem(0.0, constant_viscosity(0.01, 1));
  const auto cm = std::make_shared<const TriMesh>(barycentric_refine(
      classify_boundary(build_structured_mesh(cav.domain, 4, 4), cav.boundary_rules)));
  const FESpace cv(cm, SpaceKind::P2vec);
  const auto lid = apply_dirichlet(cv, cav.realizations[0].boundary, 0.0);
  int checked = 0;
  for (const auto& d : lid) {
    const Point& p = cv.support_points()[d.dof / 2];
    if (d.dof % 2 != 0 || p.y != 1.0) continue;
    if (p.x == 0.0) {
      CHECK(d.value == 1.0);
      ++checked;
    }
    if (std::abs(p.x) == 1.0) {
      CHECK(d.value == 0.0);
      ++checked;
    }
  }
  CHECK(checked == 3);

  // Corner values disagreeing between tags are rejected.
  BoundaryData bad{{"lid", [](const Point&, double) { return Vec2(1.0, 0.0); }},
                   {"wall", [](const Point&, double) { return Vec2(0.0, 0.0); }}};
  CHECK_THROWS_AS(apply_dirichlet(cv, bad, 0.0), std::invalid_argument);
}

TEST_CASE("normal boundary dofs") {
  const auto square = testing::unit_square(2);
  const FESpace v(square, SpaceKind::P2vec);
  const auto normal = normal_boundary_dofs(v);
  const auto all = boundary_dofs(v);
  CHECK(std::includes(all.begin(), all.end(), normal.begin(), normal.end()));
  // Refinement keeps the n boundary edges per side: 2n+1 scalar nodes;
  // corners carry both components.
  const int per_side = 2 * 2 + 1;
  const int scalar_nodes = 4 * (per_side - 1);
  CHECK(all.size() == static_cast<std::size_t>(2 * scalar_nodes));
  CHECK(normal.size() == static_cast<std::size_t>(scalar_nodes + 4));
  for (int d : normal) {
    const Point& p = v.support_points()[d / 2];
    const bool vertical = p.x == 0.0 || p.x == 1.0;
    const bool horizontal = p.y == 0.0 || p.y == 1.0;
    CHECK(((d % 2 == 0 && vertical) || (d % 2 == 1 && horizontal)));
  }
}
