#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace ensflow {

/// Compressed row storage; column indices sorted and duplicate-free.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Vector = Eigen::VectorXd;

/// Thrown when a factorization meets a zero pivot. `pivot()` is the matrix
/// row at which elimination broke down.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, int pivot)
      : std::runtime_error(what), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Symmetric saddle-point layout [[A, -B^T], [-B, C]] for a divergence
/// coupling B with (B u)_q = (q, div u). The second block row is the
/// incompressibility constraint multiplied by -1, so a symmetric A (and C)
/// gives a symmetric system while reproducing the weak form exactly.
SparseMatrix compose_saddle(const SparseMatrix& a, const SparseMatrix& b,
                            const SparseMatrix* c = nullptr);

/// Reusable sparse LU factorization (UMFPACK) with partial pivoting.
class Factorization {
 public:
  /// Throws SingularMatrixError on structural or numerical singularity.
  explicit Factorization(const SparseMatrix& m);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;

  int size() const;
  Vector solve(const Vector& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline Factorization factorize(const SparseMatrix& m) {
  return Factorization(m);
}

/// Solves for every column of `rhs`; columns may be processed concurrently.
Eigen::MatrixXd solve_multi_rhs(const Factorization& f,
                                const Eigen::MatrixXd& rhs, int threads = 1);
std::vector<Vector> solve_multi_rhs(const Factorization& f,
                                    const std::vector<Vector>& rhs,
                                    int threads = 1);

/// ||Mx - b||_inf / (||M||_inf ||x||_inf + ||b||_inf).
double relative_residual(const SparseMatrix& m, const Vector& x,
                         const Vector& b);

/// Infinity norm (max absolute row sum).
double norm_inf(const SparseMatrix& m);

/// Strong elimination of prescribed dofs: their rows and columns are
/// replaced by the identity and their coupling to the free rows is kept
/// so that any set of prescribed values can be lifted into a right-hand
/// side without touching the matrix.
class ConstrainedMatrix {
 public:
  ConstrainedMatrix(const SparseMatrix& a, std::vector<int> dofs);

  const SparseMatrix& matrix() const { return matrix_; }
  const std::vector<int>& dofs() const { return dofs_; }

  /// rhs -= A(:, dofs) * values on the free rows; rhs(dofs) = values.
  void lift(Vector& rhs, std::span<const double> values) const;

 private:
  SparseMatrix matrix_;
  SparseMatrix coupling_;  // free rows x constrained columns
  std::vector<int> dofs_;
};

}  // namespace ensflow
