#include "ensflow/linalg.hpp"

extern "C" {
#include <umfpack.h>
}

#include <algorithm>
#include <cmath>
#include <string>

#include "ensflow/parallel.hpp"

namespace ensflow {

SparseMatrix compose_saddle(const SparseMatrix& a, const SparseMatrix& b,
                            const SparseMatrix* c) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(b.rows());
  if (a.cols() != n || b.cols() != n) {
    throw std::invalid_argument("compose_saddle: A must be square and B m x n");
  }
  if (c && (c->rows() != m || c->cols() != m)) {
    throw std::invalid_argument("compose_saddle: C must be m x m");
  }
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(a.nonZeros() + 2 * b.nonZeros() + (c ? c->nonZeros() : 0));
  for (int i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      trip.emplace_back(i, it.col(), it.value());
    }
  }
  for (int q = 0; q < m; ++q) {
    for (SparseMatrix::InnerIterator it(b, q); it; ++it) {
      trip.emplace_back(n + q, it.col(), -it.value());
      trip.emplace_back(it.col(), n + q, -it.value());
    }
  }
  if (c) {
    for (int q = 0; q < m; ++q) {
      for (SparseMatrix::InnerIterator it(*c, q); it; ++it) {
        trip.emplace_back(n + q, n + it.col(), it.value());
      }
    }
  }
  SparseMatrix out(n + m, n + m);
  out.setFromTriplets(trip.begin(), trip.end());
  out.makeCompressed();
  return out;
}

struct Factorization::Impl {
  // UMFPACK sees the row-compressed arrays of M as the column-compressed
  // arrays of M^T; solves therefore use the transposed system flag.
  std::vector<int> ptr, idx;
  std::vector<double> val;
  void* numeric = nullptr;
  int n = 0;

  ~Impl() {
    if (numeric) umfpack_di_free_numeric(&numeric);
  }
};

Factorization::Factorization(const SparseMatrix& m)
    : impl_(std::make_unique<Impl>()) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("factorize: matrix must be square");
  }
  SparseMatrix copy = m;
  copy.makeCompressed();
  const int n = static_cast<int>(copy.rows());
  impl_->n = n;
  impl_->ptr.assign(copy.outerIndexPtr(), copy.outerIndexPtr() + n + 1);
  impl_->idx.assign(copy.innerIndexPtr(), copy.innerIndexPtr() + copy.nonZeros());
  impl_->val.assign(copy.valuePtr(), copy.valuePtr() + copy.nonZeros());
  for (double v : impl_->val) {
    if (!std::isfinite(v)) throw std::domain_error("factorize: non-finite entry");
  }

  double control[UMFPACK_CONTROL];
  double info[UMFPACK_INFO];
  umfpack_di_defaults(control);
  void* symbolic = nullptr;
  int status = umfpack_di_symbolic(n, n, impl_->ptr.data(), impl_->idx.data(),
                                   impl_->val.data(), &symbolic, control, info);
  if (status != UMFPACK_OK) {
    if (symbolic) umfpack_di_free_symbolic(&symbolic);
    throw std::runtime_error("UMFPACK symbolic analysis failed, status " +
                             std::to_string(status));
  }
  status = umfpack_di_numeric(impl_->ptr.data(), impl_->idx.data(),
                              impl_->val.data(), symbolic, &impl_->numeric,
                              control, info);
  umfpack_di_free_symbolic(&symbolic);
  if (status == UMFPACK_WARNING_singular_matrix) {
    // Locate the first zero on the diagonal of U and map it back through
    // the column permutation of M^T (= a row of M).
    int lnz = 0, unz = 0, nr = 0, nc = 0, nz_udiag = 0;
    umfpack_di_get_lunz(&lnz, &unz, &nr, &nc, &nz_udiag, impl_->numeric);
    std::vector<int> p(n), q(n);
    std::vector<double> udiag(n);
    int do_recip = 0;
    umfpack_di_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr,
                           nullptr, p.data(), q.data(), udiag.data(),
                           &do_recip, nullptr, impl_->numeric);
    int pivot = -1;
    for (int k = 0; k < n; ++k) {
      if (udiag[k] == 0.0) {
        pivot = q[k];
        break;
      }
    }
    throw SingularMatrixError(
        "matrix is singular: zero pivot at row " + std::to_string(pivot), pivot);
  }
  if (status != UMFPACK_OK) {
    throw std::runtime_error("UMFPACK numeric factorization failed, status " +
                             std::to_string(status));
  }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

int Factorization::size() const { return impl_->n; }

Vector Factorization::solve(const Vector& b) const {
  if (b.size() != impl_->n) {
    throw std::invalid_argument("solve: right-hand side has length " +
                                std::to_string(b.size()) + ", expected " +
                                std::to_string(impl_->n));
  }
  Vector x(impl_->n);
  std::vector<int> wi(impl_->n);
  std::vector<double> w(5 * static_cast<std::size_t>(impl_->n));
  double control[UMFPACK_CONTROL];
  umfpack_di_defaults(control);
  const int status = umfpack_di_wsolve(
      UMFPACK_At, impl_->ptr.data(), impl_->idx.data(), impl_->val.data(),
      x.data(), b.data(), impl_->numeric, control, nullptr, wi.data(),
      w.data());
  if (status != UMFPACK_OK) {
    throw std::runtime_error("UMFPACK solve failed, status " +
                             std::to_string(status));
  }
  return x;
}

Eigen::MatrixXd solve_multi_rhs(const Factorization& f,
                                const Eigen::MatrixXd& rhs, int threads) {
  if (rhs.rows() != f.size()) {
    throw std::invalid_argument("solve_multi_rhs: row count mismatch");
  }
  Eigen::MatrixXd out(rhs.rows(), rhs.cols());
  parallel_for(static_cast<int>(rhs.cols()), threads, [&](int j) {
    out.col(j) = f.solve(rhs.col(j));
  });
  return out;
}

std::vector<Vector> solve_multi_rhs(const Factorization& f,
                                    const std::vector<Vector>& rhs,
                                    int threads) {
  std::vector<Vector> out(rhs.size());
  parallel_for(static_cast<int>(rhs.size()), threads,
               [&](int j) { out[j] = f.solve(rhs[j]); });
  return out;
}

double norm_inf(const SparseMatrix& m) {
  double best = 0.0;
  for (int i = 0; i < m.outerSize(); ++i) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(m, i); it; ++it) {
      row += std::abs(it.value());
    }
    best = std::max(best, row);
  }
  return best;
}

double relative_residual(const SparseMatrix& m, const Vector& x,
                         const Vector& b) {
  const double denom =
      norm_inf(m) * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  const double r = (m * x - b).lpNorm<Eigen::Infinity>();
  return denom > 0.0 ? r / denom : r;
}

ConstrainedMatrix::ConstrainedMatrix(const SparseMatrix& a,
                                     std::vector<int> dofs)
    : dofs_(std::move(dofs)) {
  const int n = static_cast<int>(a.rows());
  std::sort(dofs_.begin(), dofs_.end());
  dofs_.erase(std::unique(dofs_.begin(), dofs_.end()), dofs_.end());
  std::vector<char> fixed(n, 0);
  for (int d : dofs_) {
    if (d < 0 || d >= n) throw std::out_of_range("constrained dof out of range");
    fixed[d] = 1;
  }
  std::vector<Eigen::Triplet<double>> kept, coupled;
  kept.reserve(a.nonZeros());
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) {
      kept.emplace_back(i, i, 1.0);
      continue;
    }
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) {
      if (fixed[it.col()]) {
        coupled.emplace_back(i, it.col(), it.value());
      } else {
        kept.emplace_back(i, it.col(), it.value());
      }
    }
  }
  matrix_.resize(n, n);
  matrix_.setFromTriplets(kept.begin(), kept.end());
  matrix_.makeCompressed();
  coupling_.resize(n, n);
  coupling_.setFromTriplets(coupled.begin(), coupled.end());
  coupling_.makeCompressed();
}

void ConstrainedMatrix::lift(Vector& rhs, std::span<const double> values) const {
  if (values.size() != dofs_.size()) {
    throw std::invalid_argument("lift: one value per constrained dof required");
  }
  if (rhs.size() != matrix_.rows()) {
    throw std::invalid_argument("lift: right-hand side length mismatch");
  }
  Vector g = Vector::Zero(rhs.size());
  for (std::size_t k = 0; k < dofs_.size(); ++k) g[dofs_[k]] = values[k];
  rhs -= coupling_ * g;
  for (std::size_t k = 0; k < dofs_.size(); ++k) rhs[dofs_[k]] = values[k];
}

}  // namespace ensflow
