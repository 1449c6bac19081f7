#pragma once

#include <array>
#include <vector>

namespace ensflow {

/// Quadrature on the reference triangle (0,0), (1,0), (0,1).
struct QuadratureRule {
  int degree = 0;
  /// Reference coordinates (xi, eta); barycentrics are (1-xi-eta, xi, eta).
  std::vector<std::array<double, 2>> points;
  /// Weights summing to the reference area 1/2.
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Rule exact for all polynomials of total degree <= `degree` (1..10).
/// Throws std::invalid_argument for unsupported degrees.
QuadratureRule quadrature_rule(int degree);

/// Quadrature degree used for every system assembly.
inline constexpr int kAssemblyDegree = 5;
/// Quadrature degree used for errors against closed-form fields.
inline constexpr int kErrorDegree = 8;

}  // namespace ensflow
