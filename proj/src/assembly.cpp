#include "ensflow/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ensflow {

// ---------------------------------------------------------------------------
// CoefficientField

CoefficientField CoefficientField::from_function(
    const TriMesh& mesh, const QuadratureRule& rule,
    const std::function<double(const Point&)>& f) {
  CoefficientField out(mesh.n_cells(), rule.size());
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellMap m = cell_map(mesh, static_cast<int>(c));
    for (std::size_t q = 0; q < rule.size(); ++q) {
      out(c, q) = f(m.map(rule.points[q][0], rule.points[q][1]));
    }
  }
  return out;
}

double CoefficientField::min() const {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double CoefficientField::max() const {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

double CoefficientField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool CoefficientField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

CoefficientField& CoefficientField::operator+=(const CoefficientField& other) {
  if (other.values_.size() != values_.size()) {
    throw std::invalid_argument("coefficient fields differ in layout");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

CoefficientField& CoefficientField::operator-=(const CoefficientField& other) {
  if (other.values_.size() != values_.size()) {
    throw std::invalid_argument("coefficient fields differ in layout");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

CoefficientField& CoefficientField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

CoefficientField operator+(CoefficientField a, const CoefficientField& b) {
  return a += b;
}
CoefficientField operator-(CoefficientField a, const CoefficientField& b) {
  return a -= b;
}
CoefficientField operator*(double s, CoefficientField a) { return a *= s; }

// ---------------------------------------------------------------------------
// Assembler

namespace {

// Physical gradients of the scalar shapes at one quadrature point.
inline void physical_gradients(const ShapeTable& shapes, const CellMap& m,
                               std::size_t q, std::array<double, 2>* out) {
  const Mat2& it = m.inverse_transpose;
  for (int a = 0; a < shapes.n_functions; ++a) {
    const auto& g = shapes.dphi(q, a);
    out[a] = {it(0, 0) * g[0] + it(0, 1) * g[1],
              it(1, 0) * g[0] + it(1, 1) * g[1]};
  }
}

}  // namespace

Assembler::Assembler(const FESpace& space, int quad_degree)
    : space_(space),
      rule_(quadrature_rule(quad_degree)),
      shapes_(shape_table(space.degree(), rule_)) {
  const TriMesh& mesh = space_.mesh();
  const int nc = static_cast<int>(mesh.n_cells());
  maps_.reserve(nc);
  for (int c = 0; c < nc; ++c) maps_.push_back(cell_map(mesh, c));

  const int n = space_.n_dofs();
  const int nd = space_.dofs_per_cell();
  std::vector<std::vector<int>> rows(n);
  for (int c = 0; c < nc; ++c) {
    const auto dofs = space_.cell_dofs(c);
    for (int i : dofs) rows[i].insert(rows[i].end(), dofs.begin(), dofs.end());
  }
  row_ptr_.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    auto& r = rows[i];
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    row_ptr_[i + 1] = row_ptr_[i] + static_cast<int>(r.size());
  }
  col_idx_.reserve(row_ptr_[n]);
  for (auto& r : rows) col_idx_.insert(col_idx_.end(), r.begin(), r.end());
  slot_.resize(static_cast<std::size_t>(nc) * nd * nd);
  for (int c = 0; c < nc; ++c) {
    const auto dofs = space_.cell_dofs(c);
    for (int i = 0; i < nd; ++i) {
      const int* first = col_idx_.data() + row_ptr_[dofs[i]];
      const int* last = col_idx_.data() + row_ptr_[dofs[i] + 1];
      for (int j = 0; j < nd; ++j) {
        slot_[(static_cast<std::size_t>(c) * nd + i) * nd + j] =
            static_cast<int>(std::lower_bound(first, last, dofs[j]) -
                             col_idx_.data());
      }
    }
  }
}

void Assembler::check_vector(const char* what) const {
  if (!space_.is_vector()) {
    throw std::invalid_argument(std::string(what) + " needs a vector space");
  }
}

void Assembler::check_length(const Vector& v, const char* what) const {
  if (v.size() != space_.n_dofs()) {
    throw std::invalid_argument(std::string(what) + ": field has " +
                                std::to_string(v.size()) + " entries, space has " +
                                std::to_string(space_.n_dofs()));
  }
}

SparseMatrix Assembler::finish(std::vector<double>& values) const {
  const int n = space_.n_dofs();
  SparseMatrix m(n, n);
  m.reserve(static_cast<Eigen::Index>(values.size()));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(values.size());
  for (int i = 0; i < n; ++i) {
    for (int k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (values[k] != 0.0) trip.emplace_back(i, col_idx_[k], values[k]);
    }
  }
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return m;
}

SparseMatrix Assembler::momentum(const MomentumTerms& terms) const {
  if ((terms.advecting || terms.graddiv != 0.0) && !space_.is_vector()) {
    check_vector("convection/grad-div");
  }
  if (terms.advecting) check_length(*terms.advecting, "advecting field");
  if (terms.diffusion &&
      (terms.diffusion->n_cells() != space_.mesh().n_cells() ||
       terms.diffusion->n_points() != rule_.size())) {
    throw std::invalid_argument("diffusion coefficient layout mismatch");
  }
  const int nc = static_cast<int>(space_.mesh().n_cells());
  const int ns = shapes_.n_functions;
  const int ncomp = space_.n_components();
  const int nd = space_.dofs_per_cell();
  std::vector<double> values(col_idx_.size(), 0.0);
  std::vector<double> local(nd * nd);
  std::array<double, 2> grad[6];
  for (int c = 0; c < nc; ++c) {
    std::fill(local.begin(), local.end(), 0.0);
    const CellMap& m = maps_[c];
    const double jdet = std::abs(m.det);
    const auto dofs = space_.cell_dofs(c);
    for (std::size_t q = 0; q < rule_.size(); ++q) {
      const double wt = rule_.weights[q] * jdet;
      physical_gradients(shapes_, m, q, grad);
      const double* phi = &shapes_.value[q * ns];
      double wx = 0.0, wy = 0.0;
      if (terms.advecting) {
        for (int b = 0; b < ns; ++b) {
          wx += (*terms.advecting)[dofs[2 * b]] * phi[b];
          wy += (*terms.advecting)[dofs[2 * b + 1]] * phi[b];
        }
      }
      const double kappa = terms.diffusion ? (*terms.diffusion)(c, q) : 0.0;
      for (int a = 0; a < ns; ++a) {
        const double wa = wx * grad[a][0] + wy * grad[a][1];
        for (int b = 0; b < ns; ++b) {
          double s = terms.mass_scale * phi[a] * phi[b] +
                     kappa * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
          if (terms.advecting) {
            const double wb = wx * grad[b][0] + wy * grad[b][1];
            s += 0.5 * (wb * phi[a] - wa * phi[b]);
          }
          s *= wt;
          for (int k = 0; k < ncomp; ++k) {
            local[(ncomp * a + k) * nd + ncomp * b + k] += s;
          }
          if (terms.graddiv != 0.0) {
            const double g = terms.graddiv * wt;
            for (int k = 0; k < 2; ++k) {
              for (int l = 0; l < 2; ++l) {
                local[(2 * a + k) * nd + 2 * b + l] += g * grad[a][k] * grad[b][l];
              }
            }
          }
        }
      }
    }
    const int* slots = &slot_[static_cast<std::size_t>(c) * nd * nd];
    for (int k = 0; k < nd * nd; ++k) values[slots[k]] += local[k];
  }
  return finish(values);
}

SparseMatrix Assembler::mass() const {
  MomentumTerms t;
  t.mass_scale = 1.0;
  return momentum(t);
}

SparseMatrix Assembler::diffusion(const CoefficientField& coeff,
                                  bool allow_negative) const {
  if (!coeff.all_finite()) {
    throw std::domain_error("diffusion coefficient is not finite");
  }
  if (!allow_negative && coeff.min() < 0.0) {
    throw std::domain_error("negative diffusion coefficient in a system matrix");
  }
  MomentumTerms t;
  t.diffusion = &coeff;
  return momentum(t);
}

SparseMatrix Assembler::graddiv() const {
  check_vector("grad-div");
  MomentumTerms t;
  t.graddiv = 1.0;
  return momentum(t);
}

SparseMatrix Assembler::convection(const Vector& w) const {
  check_vector("convection");
  MomentumTerms t;
  t.advecting = &w;
  return momentum(t);
}

SparseMatrix Assembler::div_coupling(const FESpace& pressure) const {
  check_vector("div coupling");
  if (pressure.is_vector()) {
    throw std::invalid_argument("pressure space must be scalar");
  }
  if (&pressure.mesh() != &space_.mesh()) {
    throw std::invalid_argument("velocity and pressure meshes differ");
  }
  const ShapeTable pshape = shape_table(1, rule_);
  const int nc = static_cast<int>(space_.mesh().n_cells());
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nc) * 36);
  std::array<double, 2> grad[6];
  double local[3][12];
  for (int c = 0; c < nc; ++c) {
    std::fill(&local[0][0], &local[0][0] + 36, 0.0);
    const CellMap& m = maps_[c];
    const double jdet = std::abs(m.det);
    for (std::size_t q = 0; q < rule_.size(); ++q) {
      const double wt = rule_.weights[q] * jdet;
      physical_gradients(shapes_, m, q, grad);
      for (int k = 0; k < 3; ++k) {
        const double pk = pshape.phi(q, k) * wt;
        for (int b = 0; b < 6; ++b) {
          local[k][2 * b] += pk * grad[b][0];
          local[k][2 * b + 1] += pk * grad[b][1];
        }
      }
    }
    const auto vd = space_.cell_dofs(c);
    const auto pd = pressure.cell_dofs(c);
    for (int k = 0; k < 3; ++k) {
      for (int j = 0; j < 12; ++j) trip.emplace_back(pd[k], vd[j], local[k][j]);
    }
  }
  SparseMatrix b(pressure.n_dofs(), space_.n_dofs());
  b.setFromTriplets(trip.begin(), trip.end());
  b.prune(0.0);
  b.makeCompressed();
  return b;
}

void Assembler::evaluate(const Vector& u, int cell, Vec2* values,
                         Mat2* grads) const {
  const int ns = shapes_.n_functions;
  const auto dofs = space_.cell_dofs(cell);
  std::array<double, 2> grad[6];
  for (std::size_t q = 0; q < rule_.size(); ++q) {
    const double* phi = &shapes_.value[q * ns];
    if (values) {
      Vec2 v = Vec2::Zero();
      for (int b = 0; b < ns; ++b) {
        v[0] += u[dofs[2 * b]] * phi[b];
        v[1] += u[dofs[2 * b + 1]] * phi[b];
      }
      values[q] = v;
    }
    if (grads) {
      physical_gradients(shapes_, maps_[cell], q, grad);
      Mat2 g = Mat2::Zero();
      for (int b = 0; b < ns; ++b) {
        const double u0 = u[dofs[2 * b]], u1 = u[dofs[2 * b + 1]];
        g(0, 0) += u0 * grad[b][0];
        g(0, 1) += u0 * grad[b][1];
        g(1, 0) += u1 * grad[b][0];
        g(1, 1) += u1 * grad[b][1];
      }
      grads[q] = g;
    }
  }
}

Vector Assembler::load(const VectorFunction& f, double t) const {
  check_vector("load");
  const int ns = shapes_.n_functions;
  Vector r = Vector::Zero(space_.n_dofs());
  for (int c = 0; c < static_cast<int>(space_.mesh().n_cells()); ++c) {
    const CellMap& m = maps_[c];
    const double jdet = std::abs(m.det);
    const auto dofs = space_.cell_dofs(c);
    for (std::size_t q = 0; q < rule_.size(); ++q) {
      const Vec2 fv = f(m.map(rule_.points[q][0], rule_.points[q][1]), t);
      if (!std::isfinite(fv[0]) || !std::isfinite(fv[1])) {
        throw std::domain_error("non-finite forcing sample");
      }
      const double wt = rule_.weights[q] * jdet;
      for (int a = 0; a < ns; ++a) {
        const double s = wt * shapes_.phi(q, a);
        r[dofs[2 * a]] += s * fv[0];
        r[dofs[2 * a + 1]] += s * fv[1];
      }
    }
  }
  return r;
}

Vector Assembler::lagged_rhs(const Vector& u, const Vector& fluctuation,
                             const CoefficientField& nu_fluctuation,
                             const VectorFunction& forcing, double t) const {
  check_vector("lagged right-hand side");
  check_length(u, "lagged rhs");
  check_length(fluctuation, "lagged rhs");
  const int ns = shapes_.n_functions;
  const std::size_t nq = rule_.size();
  const bool has_nu = nu_fluctuation.n_points() != 0;
  const bool has_fluct = fluctuation.squaredNorm() != 0.0;
  Vector r = Vector::Zero(space_.n_dofs());
  std::vector<Vec2> uv(nq), wv(nq);
  std::vector<Mat2> ug(nq);
  std::array<double, 2> grad[6];
  for (int c = 0; c < static_cast<int>(space_.mesh().n_cells()); ++c) {
    const CellMap& m = maps_[c];
    const double jdet = std::abs(m.det);
    const auto dofs = space_.cell_dofs(c);
    const bool need_u = has_fluct || has_nu;
    if (need_u) evaluate(u, c, uv.data(), ug.data());
    if (has_fluct) evaluate(fluctuation, c, wv.data(), nullptr);
    for (std::size_t q = 0; q < nq; ++q) {
      const double wt = rule_.weights[q] * jdet;
      Vec2 fv = Vec2::Zero();
      if (forcing) {
        fv = forcing(m.map(rule_.points[q][0], rule_.points[q][1]), t);
        if (!std::isfinite(fv[0]) || !std::isfinite(fv[1])) {
          throw std::domain_error("non-finite forcing sample");
        }
      }
      physical_gradients(shapes_, m, q, grad);
      // -b*(w, u, phi) = -1/2 (w.grad u, phi) + 1/2 (w.grad phi, u)
      Vec2 pointwise = fv;
      if (has_fluct) pointwise -= 0.5 * (ug[q] * wv[q]);
      const double nu = has_nu ? nu_fluctuation(c, q) : 0.0;
      for (int a = 0; a < ns; ++a) {
        const double phi = shapes_.phi(q, a);
        double r0 = pointwise[0] * phi;
        double r1 = pointwise[1] * phi;
        if (has_fluct) {
          const double wphi = wv[q][0] * grad[a][0] + wv[q][1] * grad[a][1];
          r0 += 0.5 * wphi * uv[q][0];
          r1 += 0.5 * wphi * uv[q][1];
        }
        if (nu != 0.0) {
          r0 -= nu * (ug[q](0, 0) * grad[a][0] + ug[q](0, 1) * grad[a][1]);
          r1 -= nu * (ug[q](1, 0) * grad[a][0] + ug[q](1, 1) * grad[a][1]);
        }
        r[dofs[2 * a]] += wt * r0;
        r[dofs[2 * a + 1]] += wt * r1;
      }
    }
  }
  return r;
}

Vector Assembler::convection_vector(const Vector& w, const Vector& v) const {
  check_length(w, "convection vector");
  return -lagged_rhs(v, w, CoefficientField(), VectorFunction(), 0.0);
}

Vector Assembler::diffusion_vector(const CoefficientField& coeff,
                                   const Vector& v) const {
  check_length(v, "diffusion vector");
  return -lagged_rhs(v, Vector::Zero(v.size()), coeff, VectorFunction(), 0.0);
}

CoefficientField Assembler::eev_coefficient(std::span<const Vector> fluctuations,
                                            double mu, double dt) const {
  check_vector("EEV coefficient");
  if (mu < 0.0) throw std::invalid_argument("EEV calibration mu must be >= 0");
  if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
  CoefficientField out = constant(0.0);
  if (mu == 0.0) return out;
  const std::size_t nq = rule_.size();
  std::vector<Vec2> v(nq);
  for (const Vector& f : fluctuations) {
    check_length(f, "fluctuation");
    for (int c = 0; c < static_cast<int>(space_.mesh().n_cells()); ++c) {
      evaluate(f, c, v.data(), nullptr);
      for (std::size_t q = 0; q < nq; ++q) out(c, q) += v[q].squaredNorm();
    }
  }
  out *= mu * dt;
  return out;
}

double Assembler::max_divergence(const Vector& u) const {
  check_vector("divergence");
  check_length(u, "divergence");
  double best = 0.0;
  std::array<double, 2> ref[6];
  static constexpr double corner[3][2] = {{0, 0}, {1, 0}, {0, 1}};
  for (int c = 0; c < static_cast<int>(space_.mesh().n_cells()); ++c) {
    const auto dofs = space_.cell_dofs(c);
    const Mat2& it = maps_[c].inverse_transpose;
    for (const auto& x : corner) {
      reference_basis(2, x[0], x[1], nullptr, ref);
      double div = 0.0;
      for (int b = 0; b < 6; ++b) {
        const double gx = it(0, 0) * ref[b][0] + it(0, 1) * ref[b][1];
        const double gy = it(1, 0) * ref[b][0] + it(1, 1) * ref[b][1];
        div += u[dofs[2 * b]] * gx + u[dofs[2 * b + 1]] * gy;
      }
      best = std::max(best, std::abs(div));
    }
  }
  return best;
}

double Assembler::divergence_l2(const Vector& u) const {
  check_vector("divergence");
  check_length(u, "divergence");
  std::vector<Mat2> grads(rule_.size());
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(space_.mesh().n_cells()); ++c) {
    evaluate(u, c, nullptr, grads.data());
    const double area = std::abs(maps_[c].det);
    for (std::size_t q = 0; q < rule_.size(); ++q) {
      const double div = grads[q].trace();
      sum += rule_.weights[q] * area * div * div;
    }
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Free functions

SparseMatrix assemble_mass(const FESpace& space) {
  return Assembler(space).mass();
}

SparseMatrix assemble_diffusion(const FESpace& space,
                                const CoefficientField& coeff) {
  return Assembler(space).diffusion(coeff);
}

SparseMatrix assemble_graddiv(const FESpace& space) {
  return Assembler(space).graddiv();
}

SparseMatrix assemble_convection_skew(const FESpace& space, const Vector& w) {
  return Assembler(space).convection(w);
}

SparseMatrix assemble_div_coupling(const FESpace& velocity,
                                   const FESpace& pressure) {
  return Assembler(velocity).div_coupling(pressure);
}

CoefficientField compute_eev_coefficient(const FESpace& space,
                                         std::span<const Vector> fluctuations,
                                         double mu, double dt) {
  return Assembler(space).eev_coefficient(fluctuations, mu, dt);
}

Vector assemble_rhs_lagged(const Assembler& assembler, const Vector& u,
                           const Vector& fluctuation,
                           const CoefficientField& nu_fluctuation,
                           const VectorFunction& forcing, double t) {
  return assembler.lagged_rhs(u, fluctuation, nu_fluctuation, forcing, t);
}

ErrorNorms velocity_error(const FESpace& space, const Vector& u,
                          const VectorFunction& exact,
                          const GradientFunction& exact_grad, double t) {
  if (!space.is_vector()) throw std::invalid_argument("vector space required");
  const QuadratureRule rule = quadrature_rule(kErrorDegree);
  const ShapeTable shapes = shape_table(2, rule);
  ErrorNorms out;
  std::array<double, 2> grad[6];
  for (int c = 0; c < static_cast<int>(space.mesh().n_cells()); ++c) {
    const CellMap m = cell_map(space.mesh(), c);
    const double jdet = std::abs(m.det);
    const auto dofs = space.cell_dofs(c);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = m.map(rule.points[q][0], rule.points[q][1]);
      physical_gradients(shapes, m, q, grad);
      Vec2 v = Vec2::Zero();
      Mat2 g = Mat2::Zero();
      for (int b = 0; b < 6; ++b) {
        const double phi = shapes.phi(q, b);
        for (int k = 0; k < 2; ++k) {
          const double coef = u[dofs[2 * b + k]];
          v[k] += coef * phi;
          g(k, 0) += coef * grad[b][0];
          g(k, 1) += coef * grad[b][1];
        }
      }
      const double wt = rule.weights[q] * jdet;
      if (exact) out.l2_sq += wt * (exact(x, t) - v).squaredNorm();
      if (exact_grad) {
        out.h1_semi_sq += wt * (exact_grad(x, t) - g).squaredNorm();
      }
    }
  }
  return out;
}

double integrate_scalar(const FESpace& space, const Vector& p) {
  if (space.is_vector()) throw std::invalid_argument("scalar space required");
  double sum = 0.0;
  for (int c = 0; c < static_cast<int>(space.mesh().n_cells()); ++c) {
    const auto dofs = space.cell_dofs(c);
    sum += std::abs(space.mesh().signed_area(c)) *
           (p[dofs[0]] + p[dofs[1]] + p[dofs[2]]) / 3.0;
  }
  return sum;
}

Vector subtract_mean(const FESpace& space, const Vector& p) {
  const double mean = integrate_scalar(space, p) / space.mesh().total_area();
  return p.array() - mean;
}

Vector p1_to_p1disc(const FESpace& p1, const FESpace& p1disc, const Vector& p) {
  if (p1.kind() != SpaceKind::P1 || p1disc.kind() != SpaceKind::P1disc ||
      &p1.mesh() != &p1disc.mesh()) {
    throw std::invalid_argument("p1_to_p1disc: incompatible spaces");
  }
  Vector out(p1disc.n_dofs());
  for (int c = 0; c < static_cast<int>(p1.mesh().n_cells()); ++c) {
    const auto src = p1.cell_dofs(c);
    const auto dst = p1disc.cell_dofs(c);
    for (int k = 0; k < 3; ++k) out[dst[k]] = p[src[k]];
  }
  return out;
}

Vector divergence_p1disc(const FESpace& velocity, const FESpace& p1disc,
                         const Vector& u) {
  if (!velocity.is_vector() || p1disc.kind() != SpaceKind::P1disc ||
      &velocity.mesh() != &p1disc.mesh()) {
    throw std::invalid_argument("divergence_p1disc: incompatible spaces");
  }
  Vector out(p1disc.n_dofs());
  std::array<double, 2> ref[6];
  static constexpr double corner[3][2] = {{0, 0}, {1, 0}, {0, 1}};
  for (int c = 0; c < static_cast<int>(velocity.mesh().n_cells()); ++c) {
    const auto dofs = velocity.cell_dofs(c);
    const auto pd = p1disc.cell_dofs(c);
    const Mat2 it = cell_map(velocity.mesh(), c).inverse_transpose;
    for (int k = 0; k < 3; ++k) {
      reference_basis(2, corner[k][0], corner[k][1], nullptr, ref);
      double div = 0.0;
      for (int b = 0; b < 6; ++b) {
        const double gx = it(0, 0) * ref[b][0] + it(0, 1) * ref[b][1];
        const double gy = it(1, 0) * ref[b][0] + it(1, 1) * ref[b][1];
        div += u[dofs[2 * b]] * gx + u[dofs[2 * b + 1]] * gy;
      }
      out[pd[k]] = div;
    }
  }
  return out;
}

double pressure_error_sq(const FESpace& space, const Vector& p,
                         const ScalarFunction& exact, double t) {
  if (space.is_vector()) throw std::invalid_argument("scalar space required");
  const QuadratureRule rule = quadrature_rule(kErrorDegree);
  const int nc = static_cast<int>(space.mesh().n_cells());
  // Both fields are compared with their means removed.
  std::vector<double> diff(nc * rule.size()), wts(nc * rule.size());
  double integral = 0.0, area = 0.0;
  for (int c = 0; c < nc; ++c) {
    const CellMap m = cell_map(space.mesh(), c);
    const double jdet = std::abs(m.det);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      const double d = exact(m.map(xi, eta), t) - evaluate_scalar(space, p, c, xi, eta);
      const std::size_t k = c * rule.size() + q;
      diff[k] = d;
      wts[k] = rule.weights[q] * jdet;
      integral += wts[k] * d;
      area += wts[k];
    }
  }
  const double mean = integral / area;
  double sum = 0.0;
  for (std::size_t k = 0; k < diff.size(); ++k) {
    sum += wts[k] * (diff[k] - mean) * (diff[k] - mean);
  }
  return sum;
}

}  // namespace ensflow
