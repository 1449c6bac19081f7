#include "ensflow/problems.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ensflow/format.hpp"

namespace ensflow {

namespace {

constexpr double kTol = 1e-12;

bool near(double a, double b) { return std::abs(a - b) <= kTol * (1.0 + std::abs(b)); }

VectorFunction zero_field() {
  return [](const Point&, double) { return Vec2(0.0, 0.0); };
}

// Rules for every edge of an axis-aligned rectangle tagged with one label.
BoundaryRule whole_boundary(const std::string& tag) {
  return {tag, [](const Point&, const Point&) { return true; }};
}

}  // namespace

ViscosityModel constant_viscosity(double nu, int count) {
  if (!(nu > 0.0)) throw std::invalid_argument("viscosity must be positive");
  if (count < 1) throw std::invalid_argument("ensemble size must be >= 1");
  ViscosityModel m;
  m.kind = "constant";
  m.mean = nu;
  m.constants.assign(count, nu);
  for (int j = 0; j < count; ++j) {
    m.members.push_back([nu](const Point&) { return nu; });
  }
  return m;
}

ViscosityModel uniform_viscosity(double a, double b, int count,
                                 std::uint64_t seed) {
  if (!(a > 0.0) || !(b >= a)) {
    throw std::invalid_argument("uniform viscosity needs 0 < a <= b");
  }
  ViscosityModel m;
  m.kind = "uniform";
  m.mean = 0.5 * (a + b);
  m.constants = uniform_samples(a, b, count, seed);
  for (double nu : m.constants) {
    m.members.push_back([nu](const Point&) { return nu; });
  }
  return m;
}

ViscosityModel kl_viscosity(const KLViscosity& field, const SparseGrid& grid) {
  if (grid.dimension != field.dimension()) {
    throw std::invalid_argument("sparse grid dimension " +
                                std::to_string(grid.dimension) +
                                " does not match KL dimension " +
                                std::to_string(field.dimension()));
  }
  ViscosityModel m;
  m.kind = "kl";
  m.mean = field.mean();
  m.weights = grid.weights;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<double> y = grid.points[j];
    m.members.push_back([field, y, j](const Point& x) {
      try {
        return field(x, y);
      } catch (const std::domain_error& e) {
        std::string where = "collocation point " + std::to_string(j + 1) + " (y =";
        for (double v : y) where += " " + format_double(v);
        throw std::domain_error(std::string(e.what()) + " at " + where + ")");
      }
    });
  }
  return m;
}

bool ProblemSpec::has_exact() const {
  if (realizations.empty()) return false;
  for (const auto& r : realizations) {
    if (!r.exact) return false;
  }
  return true;
}

Vec2 ProblemSpec::mean_velocity(const Point& x, double t) const {
  if (!has_exact()) throw std::logic_error(name + ": no exact solution");
  Vec2 sum(0.0, 0.0);
  for (const auto& r : realizations) sum += r.exact->velocity(x, t);
  return sum / static_cast<double>(realizations.size());
}

Mat2 ProblemSpec::mean_gradient(const Point& x, double t) const {
  if (!has_exact()) throw std::logic_error(name + ": no exact solution");
  Mat2 sum = Mat2::Zero();
  for (const auto& r : realizations) sum += r.exact->gradient(x, t);
  return sum / static_cast<double>(realizations.size());
}

double ProblemSpec::mean_pressure(const Point& x, double t) const {
  if (!has_exact()) throw std::logic_error(name + ": no exact solution");
  double sum = 0.0;
  for (const auto& r : realizations) sum += r.exact->pressure(x, t);
  return sum / static_cast<double>(realizations.size());
}

namespace manufactured {

Vec2 velocity(const Point& x, double t) {
  const double a = 1.0 + std::exp(t);
  return {std::cos(x.y) + a * std::sin(x.y), std::sin(x.x) + a * std::cos(x.x)};
}

Mat2 gradient(const Point& x, double t) {
  const double a = 1.0 + std::exp(t);
  Mat2 g;
  g << 0.0, -std::sin(x.y) + a * std::cos(x.y),
      std::cos(x.x) - a * std::sin(x.x), 0.0;
  return g;
}

Vec2 time_derivative(const Point& x, double t) {
  const double e = std::exp(t);
  return {e * std::sin(x.y), e * std::cos(x.x)};
}

double pressure(const Point& x, double t) {
  return std::sin(x.x + x.y) * (1.0 + std::exp(t));
}

Vec2 pressure_gradient(const Point& x, double t) {
  const double g = std::cos(x.x + x.y) * (1.0 + std::exp(t));
  return {g, g};
}

Vec2 forcing(const Point& x, double t, double s, double nu) {
  // Each component of u is harmonic up to sign: Laplacian(u) = -u.
  const Vec2 u = velocity(x, t);
  const Mat2 g = gradient(x, t);
  const Vec2 convection = g * u;
  return s * time_derivative(x, t) + s * s * convection + nu * s * u +
         s * pressure_gradient(x, t);
}

}  // namespace manufactured

ProblemSpec manufactured_problem(double eps, const ViscosityModel& viscosity) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  const int count = viscosity.size();
  if (static_cast<int>(viscosity.constants.size()) != count) {
    throw std::invalid_argument(
        "manufactured problem needs spatially constant viscosities");
  }
  ProblemSpec p;
  p.name = "manufactured";
  p.domain = Rectangle{0.0, 1.0, 0.0, 1.0};
  p.boundary_rules = {whole_boundary("dirichlet")};
  p.viscosity = viscosity;
  p.projection_boundary = ProjectionBoundary::Full;
  const auto k = affine_perturbation_coefficients(count,
                                                  PerturbationFormula::Alternating);
  for (int j = 0; j < count; ++j) {
    const double s = 1.0 + k[j] * eps;
    const double nu = viscosity.constants[j];
    Realization r;
    VectorFunction u = [s](const Point& x, double t) {
      return Vec2(s * manufactured::velocity(x, t));
    };
    r.initial = u;
    r.boundary["dirichlet"] = u;
    r.forcing = [s, nu](const Point& x, double t) {
      return manufactured::forcing(x, t, s, nu);
    };
    r.exact = ExactSolution{
        u,
        [s](const Point& x, double t) {
          return Mat2(s * manufactured::gradient(x, t));
        },
        [s](const Point& x, double t) { return s * manufactured::pressure(x, t); }};
    p.realizations.push_back(std::move(r));
  }
  return p;
}

Vec2 tgv_velocity(const Point& x, double t, double nu) {
  const double d = std::exp(-2.0 * nu * t);
  return {std::sin(x.x) * std::cos(x.y) * d, -std::cos(x.x) * std::sin(x.y) * d};
}

Mat2 tgv_gradient(const Point& x, double t, double nu) {
  const double d = std::exp(-2.0 * nu * t);
  Mat2 g;
  g << std::cos(x.x) * std::cos(x.y) * d, -std::sin(x.x) * std::sin(x.y) * d,
      std::sin(x.x) * std::sin(x.y) * d, -std::cos(x.x) * std::cos(x.y) * d;
  return g;
}

double tgv_pressure(const Point& x, double t, double nu) {
  return 0.25 * (std::cos(2.0 * x.x) + std::cos(2.0 * x.y)) *
         std::exp(-4.0 * nu * t);
}

ProblemSpec tgv_problem(const ViscosityModel& viscosity, double length) {
  if (!(length > 0.0)) throw std::invalid_argument("TGV length must be positive");
  if (viscosity.size() < 1) throw std::invalid_argument("empty viscosity model");
  ProblemSpec p;
  p.name = "tgv";
  p.domain = Rectangle{0.0, length, 0.0, length};
  p.boundary_rules = {whole_boundary("dirichlet")};
  p.viscosity = viscosity;
  p.projection_boundary = ProjectionBoundary::Normal;
  const double nu = viscosity.mean;
  const bool exact = viscosity.kind == "constant";
  VectorFunction u = [nu](const Point& x, double t) { return tgv_velocity(x, t, nu); };
  for (int j = 0; j < viscosity.size(); ++j) {
    Realization r;
    r.initial = u;
    r.boundary["dirichlet"] = u;
    if (exact) {
      r.exact = ExactSolution{
          u, [nu](const Point& x, double t) { return tgv_gradient(x, t, nu); },
          [nu](const Point& x, double t) { return tgv_pressure(x, t, nu); }};
    }
    p.realizations.push_back(std::move(r));
  }
  return p;
}

ProblemSpec step_channel_problem(double eps, const ViscosityModel& viscosity) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  const int count = viscosity.size();
  if (count < 1) throw std::invalid_argument("empty viscosity model");
  ProblemSpec p;
  p.name = "step";
  const Rectangle outer{0.0, 40.0, 0.0, 10.0};
  const Rectangle step{5.0, 6.0, 0.0, 1.0};
  p.domain = SteppedRectangle{outer, step};
  auto on_step = [step](const Point& a, const Point& b) {
    auto inside = [&](const Point& q) {
      return q.x >= step.x0 - kTol && q.x <= step.x1 + kTol &&
             q.y >= step.y0 - kTol && q.y <= step.y1 + kTol;
    };
    // Edges along the obstacle's exposed sides; its base lies outside the
    // fluid.
    return inside(a) && inside(b) && !(near(a.y, 0.0) && near(b.y, 0.0));
  };
  p.boundary_rules = {
      {"inlet", [](const Point& a, const Point& b) { return near(a.x, 0.0) && near(b.x, 0.0); }},
      {"outlet", [](const Point& a, const Point& b) { return near(a.x, 40.0) && near(b.x, 40.0); }},
      {"step", on_step},
      {"wall",
       [on_step](const Point& a, const Point& b) {
         const bool horizontal = (near(a.y, 0.0) && near(b.y, 0.0)) ||
                                 (near(a.y, 10.0) && near(b.y, 10.0));
         return horizontal && !on_step(a, b);
       }},
  };
  p.viscosity = viscosity;
  p.projection_boundary = ProjectionBoundary::Normal;
  const auto k = affine_perturbation_coefficients(count, PerturbationFormula::Linear);
  for (int j = 0; j < count; ++j) {
    const double s = 1.0 + k[j] * eps;
    VectorFunction profile = [s](const Point& x, double) {
      return Vec2(s * x.y * (x.y - 10.0) / 25.0, 0.0);
    };
    Realization r;
    r.initial = profile;
    r.boundary["inlet"] = profile;
    r.boundary["outlet"] = profile;
    r.boundary["wall"] = zero_field();
    r.boundary["step"] = zero_field();
    p.realizations.push_back(std::move(r));
  }
  return p;
}

ProblemSpec cavity_problem(double eps, const ViscosityModel& viscosity) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  const int count = viscosity.size();
  if (count < 1) throw std::invalid_argument("empty viscosity model");
  ProblemSpec p;
  p.name = "cavity";
  p.domain = Rectangle{-1.0, 1.0, -1.0, 1.0};
  auto lid = [](const Point& a, const Point& b) { return near(a.y, 1.0) && near(b.y, 1.0); };
  p.boundary_rules = {
      {"lid", lid},
      {"wall", [lid](const Point& a, const Point& b) { return !lid(a, b); }},
  };
  p.viscosity = viscosity;
  p.projection_boundary = ProjectionBoundary::Normal;
  const auto k = affine_perturbation_coefficients(count, PerturbationFormula::Linear);
  for (int j = 0; j < count; ++j) {
    const double s = 1.0 + k[j] * eps;
    Realization r;
    r.initial = zero_field();
    r.boundary["lid"] = [s](const Point& x, double) {
      const double w = 1.0 - x.x * x.x;
      return Vec2(s * w * w, 0.0);
    };
    r.boundary["wall"] = zero_field();
    p.realizations.push_back(std::move(r));
  }
  return p;
}

KLViscosity tgv_kl_field() {
  return KLViscosity(1.0 / 1000.0, 1.0, 0.01, std::numbers::pi, 2);
}

KLViscosity step_kl_field() { return KLViscosity(1.0 / 600.0, 1.0, 0.01, 40.0, 2); }

KLViscosity cavity_kl_field() {
  return KLViscosity(2.0 / 15000.0, 1.0, 0.01, 2.0, 2);
}

}  // namespace ensflow
