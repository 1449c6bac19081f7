#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ensflow/mesh.hpp"

namespace ensflow {

/// Square root of the k-th eigenvalue of the Gaussian covariance kernel,
/// (sqrt(pi) l)^(1/2) exp(-(k pi l)^2 / 8).
double kl_eigenvalue(int k, double correlation_length);

/// Truncated Karhunen-Loeve viscosity field
///
///   nu(x, y) = scale * ( c + (sqrt(pi) l / 2)^(1/2) y_1
///       + sum_{k=1..q} sqrt(xi_k) ( sin(k pi x1/L) sin(k pi x2/L) y_{2k}
///                                 + cos(k pi x1/L) cos(k pi x2/L) y_{2k+1} ) )
///
/// driven by N = 2q + 1 uncorrelated unit-variance variables.
class KLViscosity {
 public:
  KLViscosity(double scale, double mean_offset, double correlation_length,
              double length, int terms);

  int dimension() const { return 2 * terms_ + 1; }
  double scale() const { return scale_; }
  double mean_offset() const { return c_; }
  double correlation_length() const { return l_; }
  double length() const { return length_; }
  int terms() const { return terms_; }
  /// Expected viscosity, scale * c.
  double mean() const { return scale_ * c_; }

  /// scale * psi(x, y) without any positivity check.
  double psi_scaled(const Point& x, std::span<const double> y) const;

  /// Viscosity at x for the sample y. Throws std::domain_error when the
  /// value is not positive.
  double operator()(const Point& x, std::span<const double> y) const;

 private:
  double scale_, c_, l_, length_;
  int terms_;
  double constant_mode_;
  std::vector<double> sqrt_xi_;
};

/// Collocation points in [-sqrt(3), sqrt(3)]^N with weights of the uniform
/// density (weights sum to one; Smolyak weights may be negative).
struct SparseGrid {
  int dimension = 0;
  int level = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Smolyak combination of nested Clenshaw-Curtis rules (1D sizes 1, 3, 5,
/// 9, ...). Supports level 0..4.
SparseGrid clenshaw_curtis_sparse_grid(int dimension, int level);

/// sum_j w_j values_j.
double expect_qoi(std::span<const double> values, const SparseGrid& grid);

/// CSV "w,y1,...,yN", one row per point, 17 significant digits.
void write_grid_csv(std::ostream& out, const SparseGrid& grid);

enum class PerturbationFormula {
  /// k_j = (-1)^(j+1) 4 ceil(j/2) / J
  Alternating,
  /// k_j = (2j - 1 - J) / floor(J/2)
  Linear,
};

/// Perturbation coefficients k_1..k_J; realization j is scaled by
/// (1 + k_j eps).
std::vector<double> affine_perturbation_coefficients(int count,
                                                     PerturbationFormula formula);

/// Seeded draws from U(a, b) using a 64-bit Mersenne Twister and the top 53
/// bits of each output, so streams are identical across standard libraries.
std::vector<double> uniform_samples(double a, double b, int count,
                                    std::uint64_t seed);

inline constexpr std::uint64_t kDefaultSeed = 42;

}  // namespace ensflow
