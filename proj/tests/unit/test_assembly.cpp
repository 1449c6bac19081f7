#include <doctest.h>

#include <algorithm>
#include <random>

#include "ensflow/assembly.hpp"
#include "oracle/single_flow.hpp"
#include "support.hpp"

using namespace ensflow;

namespace {

VectorFunction field(std::function<Vec2(const Point&)> f) {
  return [f](const Point& x, double) { return f(x); };
}

bool symmetric_pattern(const SparseMatrix& m) {
  const SparseMatrix t = m.transpose();
  for (int k = 0; k < m.outerSize(); ++k) {
    SparseMatrix::InnerIterator a(m, k), b(t, k);
    for (; a && b; ++a, ++b) {
      if (a.col() != b.col()) return false;
    }
    if (a || b) return false;
  }
  return true;
}

double max_diff(const SparseMatrix& a, const SparseMatrix& b) {
  return testing::max_abs_entry(a - b);
}

// Tensor Gauss-Legendre integral over the unit square.
double square_integral(const std::function<double(double, double)>& f) {
  std::vector<double> x, w;
  oracle::gauss_legendre(10, x, w);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) s += w[i] * w[j] * f(x[i], x[j]);
  return s;
}

}  // namespace

TEST_CASE("mass matrix") {
  const auto mesh = testing::unit_square(3);
  const FESpace p1(mesh, SpaceKind::P1);
  const SparseMatrix m = assemble_mass(p1);
  CHECK(Vector::Ones(m.rows()).dot(m * Vector::Ones(m.cols())) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(max_diff(m, SparseMatrix(m.transpose())) <= 1e-14);
  CHECK(symmetric_pattern(m));

  const FESpace p2(mesh, SpaceKind::P2vec);
  const SparseMatrix mv = assemble_mass(p2);
  const Vector one = interpolate(p2, field([](const Point&) { return Vec2(1.0, 0.0); }));
  CHECK((mv * one).sum() == doctest::Approx(1.0).epsilon(1e-13));

  const FESpace pd(mesh, SpaceKind::P1disc);
  const SparseMatrix md = assemble_mass(pd);
  CHECK(Vector::Ones(md.rows()).dot(md * Vector::Ones(md.cols())) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("diffusion matrix") {
  const auto mesh = testing::unit_square(3);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  const SparseMatrix a = as.diffusion(as.constant(1.0));
  const Vector c = interpolate(v, field([](const Point&) { return Vec2(2.0, -1.0); }));
  CHECK((a * c).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(max_diff(as.diffusion(as.constant(0.37)), 0.37 * a) <= 1e-14 * testing::max_abs_entry(a));
  const Vector x1 = interpolate(v, field([](const Point& x) { return Vec2(x.x, 0.0); }));
  CHECK(x1.dot(a * x1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(symmetric_pattern(a));
  CHECK(max_diff(a, SparseMatrix(a.transpose())) <= 1e-13 * testing::max_abs_entry(a));

  // Linearity in the coefficient.
  const CoefficientField c1 = as.sample([](const Point& x) { return 1.0 + x.x * x.y; });
  const CoefficientField c2 = as.sample([](const Point& x) { return 2.0 + std::sin(x.x); });
  const SparseMatrix lhs = as.diffusion(1.5 * c1 + 0.25 * c2);
  const SparseMatrix rhs = 1.5 * as.diffusion(c1) + 0.25 * as.diffusion(c2);
  CHECK(max_diff(lhs, rhs) <= 1e-13 * testing::max_abs_entry(lhs));

  CHECK_THROWS_AS(as.diffusion(as.constant(-1.0)), std::domain_error);
}

TEST_CASE("grad-div matrix") {
  const auto mesh = testing::unit_square(3);
  const FESpace v(mesh, SpaceKind::P2vec);
  const SparseMatrix g = assemble_graddiv(v);
  const Vector shear = interpolate(v, field([](const Point& x) { return Vec2(x.y, 0.0); }));
  CHECK(std::abs(shear.dot(g * shear)) <= 1e-12);
  const Vector stretch = interpolate(v, field([](const Point& x) { return Vec2(x.x, 0.0); }));
  CHECK(stretch.dot(g * stretch) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(max_diff(g, SparseMatrix(g.transpose())) <= 1e-14 * testing::max_abs_entry(g));
}

TEST_CASE("skew-symmetric convection") {
  const auto mesh = testing::unit_square(3);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector w = testing::random_vector(v.n_dofs(), rng);
    const Vector x = testing::random_vector(v.n_dofs(), rng);
    const SparseMatrix n = as.convection(w);
    CHECK(std::abs(x.dot(n * x)) <= 1e-13 * norm_inf(n) * x.squaredNorm());
    CHECK(max_diff(n, SparseMatrix(-SparseMatrix(n.transpose()))) <= 1e-13 * testing::max_abs_entry(n));
    CHECK(symmetric_pattern(n));
  }
  CHECK(testing::max_abs_entry(as.convection(Vector::Zero(v.n_dofs()))) == 0.0);

  // b*(w, u, chi) with w = (1, 0), u = (x1, 0), chi = (x2 (1 - x2), 0):
  // half of int x2 (1 - x2) = 1/12.
  const Vector w = interpolate(v, field([](const Point&) { return Vec2(1.0, 0.0); }));
  const Vector u = interpolate(v, field([](const Point& x) { return Vec2(x.x, 0.0); }));
  const Vector chi = interpolate(v, field([](const Point& x) { return Vec2(x.y * (1.0 - x.y), 0.0); }));
  CHECK(chi.dot(as.convection(w) * u) == doctest::Approx(1.0 / 12.0).epsilon(1e-13));

  // Quadratic fields against a tensor Gauss oracle on the square.
  auto wf = [](double x, double y) { return Vec2(y * y, x * y); };
  auto uf = [](double x, double y) { return Vec2(x * y, x * x - y); };
  auto cf = [](double x, double y) { return Vec2(y * (1.0 - y), x * x); };
  auto grad = [](const std::function<Vec2(double, double)>& f, double x, double y) {
    const double h = 1e-4;
    Mat2 g;
    g.col(0) = (f(x + h, y) - f(x - h, y)) / (2.0 * h);
    g.col(1) = (f(x, y + h) - f(x, y - h)) / (2.0 * h);
    return g;
  };
  const double expected = square_integral([&](double x, double y) {
    const Vec2 wv = wf(x, y);
    return 0.5 * (grad(uf, x, y) * wv).dot(cf(x, y)) - 0.5 * (grad(cf, x, y) * wv).dot(uf(x, y));
  });
  const Vector wi = interpolate(v, field([&](const Point& p) { return wf(p.x, p.y); }));
  const Vector ui = interpolate(v, field([&](const Point& p) { return uf(p.x, p.y); }));
  const Vector ci = interpolate(v, field([&](const Point& p) { return cf(p.x, p.y); }));
  CHECK(std::abs(ci.dot(as.convection(wi) * ui) - expected) <= 1e-8);
}

TEST_CASE("divergence coupling") {
  const auto mesh = testing::unit_square(3);
  const FESpace v(mesh, SpaceKind::P2vec);
  const FESpace p1(mesh, SpaceKind::P1);
  const FESpace pd(mesh, SpaceKind::P1disc);
  for (const FESpace* p : {&p1, &pd}) {
    const SparseMatrix b = assemble_div_coupling(v, *p);
    CHECK(b.rows() == p->n_dofs());
    CHECK(b.cols() == v.n_dofs());
    const Vector rot = interpolate(v, field([](const Point& x) { return Vec2(x.y, -x.x); }));
    CHECK((b * rot).norm() <= 1e-12);
    const Vector radial = interpolate(v, field([](const Point& x) { return Vec2(x.x, x.y); }));
    // Partition of unity: sum over pressure basis functions of int 2 q = 2.
    CHECK((b * radial).sum() == doctest::Approx(2.0).epsilon(1e-13));

    // The saddle block carries -B^T: q^T(Bu) = -(p, div u) pairing.
    const SparseMatrix k = compose_saddle(assemble_mass(v), b);
    std::mt19937_64 rng(5);
    const Vector q = testing::random_vector(p->n_dofs(), rng);
    const Vector u = testing::random_vector(v.n_dofs(), rng);
    Vector x = Vector::Zero(v.n_dofs() + p->n_dofs());
    x.tail(p->n_dofs()) = q;
    const Vector top = (k * x).head(v.n_dofs());
    CHECK(std::abs(u.dot(top) + q.dot(b * u)) <= 1e-14 * (1.0 + std::abs(q.dot(b * u))));
  }
}

TEST_CASE("eddy viscosity coefficient") {
  const auto mesh = testing::unit_square(2);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  const Vector zero = Vector::Zero(v.n_dofs());
  CHECK(as.eev_coefficient(std::vector<Vector>{zero}, 1.0, 0.1).max_abs() == 0.0);

  const Vector e1 = interpolate(v, field([](const Point&) { return Vec2(1.0, 0.0); }));
  const CoefficientField c = as.eev_coefficient(std::vector<Vector>{e1, Vector(-e1)}, 1.0, 0.1);
  CHECK(c.min() == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(c.max() == doctest::Approx(0.2).epsilon(1e-14));

  // Permutation invariance and invariance under a common shift of members.
  std::mt19937_64 rng(9);
  std::vector<Vector> members;
  for (int j = 0; j < 4; ++j) members.push_back(testing::random_vector(v.n_dofs(), rng));
  auto fluct = [](std::vector<Vector> m) {
    Vector mean = Vector::Zero(m[0].size());
    for (const auto& x : m) mean += x / static_cast<double>(m.size());
    for (auto& x : m) x -= mean;
    return m;
  };
  const CoefficientField base = as.eev_coefficient(fluct(members), 0.7, 0.05);
  std::vector<Vector> permuted = {members[2], members[0], members[3], members[1]};
  CHECK((base - as.eev_coefficient(fluct(permuted), 0.7, 0.05)).max_abs() <= 1e-15 * base.max_abs());
  const Vector shift = testing::random_vector(v.n_dofs(), rng);
  std::vector<Vector> shifted = members;
  for (auto& x : shifted) x += shift;
  CHECK((base - as.eev_coefficient(fluct(shifted), 0.7, 0.05)).max_abs() <= 1e-13 * base.max_abs());

  CHECK_THROWS_AS(as.eev_coefficient(std::vector<Vector>{zero}, -1.0, 0.1), std::invalid_argument);
}

TEST_CASE("lagged right-hand side") {
  const auto mesh = testing::unit_square(2);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  const Vector zero = Vector::Zero(v.n_dofs());
  const CoefficientField nz = as.constant(0.0);
  CHECK(as.lagged_rhs(zero, zero, nz, nullptr, 0.0).isZero(0.0));

  const VectorFunction f = [](const Point&, double) { return Vec2(1.0, 0.0); };
  const Vector r = as.lagged_rhs(zero, zero, nz, f, 0.0);
  double first = 0.0, second = 0.0;
  for (int i = 0; i < v.n_dofs(); ++i) (i % 2 == 0 ? first : second) += r[i];
  CHECK(first == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(second) <= 1e-15);

  std::mt19937_64 rng(2);
  const Vector u = testing::random_vector(v.n_dofs(), rng);
  const VectorFunction g = [](const Point& x, double t) { return Vec2(x.x * t, std::cos(x.y)); };
  CHECK((as.lagged_rhs(u, zero, nz, g, 0.3) - as.load(g, 0.3)).norm() <= 1e-15 * as.load(g, 0.3).norm());

  // Nonzero fluctuations enter with the documented signs.
  const Vector fl = testing::random_vector(v.n_dofs(), rng);
  const CoefficientField nf = as.constant(0.002);
  const Vector full = as.lagged_rhs(u, fl, nf, g, 0.3);
  const Vector parts = as.load(g, 0.3) - as.convection_vector(fl, u) - as.diffusion_vector(nf, u);
  CHECK((full - parts).norm() <= 1e-13 * parts.norm());
  CHECK((as.convection_vector(fl, u) - as.convection(fl) * u).norm() <= 1e-13 * u.norm());
}

TEST_CASE("single-pass momentum equals its parts") {
  const auto mesh = testing::unit_square(2);
  const FESpace v(mesh, SpaceKind::P2vec);
  const Assembler as(v);
  std::mt19937_64 rng(4);
  const Vector w = testing::random_vector(v.n_dofs(), rng);
  const CoefficientField nu = as.sample([](const Point& x) { return 0.01 + 0.001 * x.x; });
  MomentumTerms t;
  t.mass_scale = 10.0;
  t.advecting = &w;
  t.diffusion = &nu;
  t.graddiv = 3.0;
  const SparseMatrix all = as.momentum(t);
  const SparseMatrix parts = 10.0 * as.mass() + as.convection(w) + as.diffusion(nu) + 3.0 * as.graddiv();
  CHECK(max_diff(all, parts) <= 1e-13 * testing::max_abs_entry(parts));
}

TEST_CASE("error norms and pressure utilities") {
  const auto mesh = testing::unit_square(4);
  const FESpace v(mesh, SpaceKind::P2vec);
  const FESpace p1(mesh, SpaceKind::P1);
  const FESpace pd(mesh, SpaceKind::P1disc);
  const VectorFunction quad = [](const Point& x, double) { return Vec2(x.x * x.y, x.y * x.y - x.x); };
  const GradientFunction dquad = [](const Point& x, double) {
    Mat2 g;
    g << x.y, x.x, -1.0, 2.0 * x.y;
    return g;
  };
  const ErrorNorms e = velocity_error(v, interpolate(v, quad), quad, dquad, 0.0);
  CHECK(e.l2_sq <= 1e-26);
  CHECK(e.h1_semi_sq <= 1e-24);

  const ScalarFunction lin = [](const Point& x, double) { return 2.0 * x.x - x.y; };
  const Vector pl = interpolate(p1, lin);
  CHECK(pressure_error_sq(p1, Vector(pl.array() + 5.0), lin, 0.0) <= 1e-26);
  CHECK(integrate_scalar(p1, pl) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(std::abs(integrate_scalar(p1, subtract_mean(p1, pl))) <= 1e-15);

  const Vector pdv = p1_to_p1disc(p1, pd, pl);
  CHECK(integrate_scalar(pd, pdv) == doctest::Approx(0.5).epsilon(1e-13));

  std::mt19937_64 rng(6);
  const Vector u = testing::random_vector(v.n_dofs(), rng);
  const Vector div = divergence_p1disc(v, pd, u);
  CHECK(div.dot(assemble_mass(pd) * div) ==
        doctest::Approx(u.dot(assemble_graddiv(v) * u)).epsilon(1e-12));
  const Assembler as(v);
  CHECK(as.max_divergence(u) == doctest::Approx(div.cwiseAbs().maxCoeff()).epsilon(1e-12));
  CHECK(as.divergence_l2(u) == doctest::Approx(std::sqrt(u.dot(assemble_graddiv(v) * u))).epsilon(1e-12));
  const Vector rot = interpolate(v, VectorFunction([](const Point& x, double) { return Vec2(x.y * x.y, x.x); }));
  CHECK(as.divergence_l2(rot) <= 1e-14);
}
