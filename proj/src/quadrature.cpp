#include "ensflow/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ensflow {

namespace {

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = std::legendre(n, z);
      dp = n * (z * p - std::legendre(n - 1, z)) / (z * z - 1.0);
      const double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    dp = n * (z * std::legendre(n, z) - std::legendre(n - 1, z)) / (z * z - 1.0);
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
}

// Collapsed (Duffy) product rule: exact for degree 2n - 2.
QuadratureRule collapsed_rule(int degree) {
  const int n = (degree + 3) / 2;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  QuadratureRule rule;
  rule.degree = degree;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double xi = x[i];
      const double eta = x[j] * (1.0 - x[i]);
      rule.points.push_back({xi, eta});
      rule.weights.push_back(w[i] * w[j] * (1.0 - x[i]));
    }
  }
  return rule;
}

}  // namespace

QuadratureRule quadrature_rule(int degree) {
  if (degree < 1 || degree > 10) {
    throw std::invalid_argument("unsupported quadrature degree " +
                                std::to_string(degree));
  }
  QuadratureRule rule;
  rule.degree = degree;
  switch (degree) {
    case 1:
      rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
      rule.weights = {0.5};
      return rule;
    case 2:
      rule.points = {{1.0 / 6.0, 1.0 / 6.0},
                     {2.0 / 3.0, 1.0 / 6.0},
                     {1.0 / 6.0, 2.0 / 3.0}};
      rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
      return rule;
    case 4:
    case 5: {
      // Radon's seven-point rule.
      const double s15 = std::sqrt(15.0);
      const double a = (6.0 - s15) / 21.0;
      const double b = (6.0 + s15) / 21.0;
      const double wa = (155.0 - s15) / 2400.0;
      const double wb = (155.0 + s15) / 2400.0;
      rule.points = {{1.0 / 3.0, 1.0 / 3.0}, {a, a}, {1.0 - 2.0 * a, a},
                     {a, 1.0 - 2.0 * a},     {b, b}, {1.0 - 2.0 * b, b},
                     {b, 1.0 - 2.0 * b}};
      rule.weights = {9.0 / 80.0, wa, wa, wa, wb, wb, wb};
      return rule;
    }
    default:
      return collapsed_rule(degree);
  }
}

}  // namespace ensflow
