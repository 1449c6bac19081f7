#include "ensflow/stochastic.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "ensflow/format.hpp"

namespace ensflow {

double kl_eigenvalue(int k, double correlation_length) {
  if (k < 1) throw std::invalid_argument("KL index must be >= 1");
  if (!(correlation_length > 0.0)) {
    throw std::invalid_argument("correlation length must be positive");
  }
  const double pi = std::numbers::pi;
  const double kl = k * pi * correlation_length;
  return std::sqrt(std::sqrt(pi) * correlation_length) * std::exp(-kl * kl / 8.0);
}

KLViscosity::KLViscosity(double scale, double mean_offset,
                         double correlation_length, double length, int terms)
    : scale_(scale),
      c_(mean_offset),
      l_(correlation_length),
      length_(length),
      terms_(terms) {
  if (!(scale > 0.0) || !(length > 0.0) || terms < 0) {
    throw std::invalid_argument("invalid KL viscosity parameters");
  }
  constant_mode_ = std::sqrt(std::sqrt(std::numbers::pi) * l_ / 2.0);
  for (int k = 1; k <= terms_; ++k) sqrt_xi_.push_back(kl_eigenvalue(k, l_));
}

double KLViscosity::psi_scaled(const Point& x, std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dimension()) {
    throw std::invalid_argument("KL sample has " + std::to_string(y.size()) +
                                " entries, expected " +
                                std::to_string(dimension()));
  }
  double psi = c_ + constant_mode_ * y[0];
  const double w = std::numbers::pi / length_;
  for (int k = 1; k <= terms_; ++k) {
    const double s = std::sin(k * w * x.x) * std::sin(k * w * x.y);
    const double c = std::cos(k * w * x.x) * std::cos(k * w * x.y);
    psi += sqrt_xi_[k - 1] * (s * y[2 * k - 1] + c * y[2 * k]);
  }
  return scale_ * psi;
}

double KLViscosity::operator()(const Point& x, std::span<const double> y) const {
  const double nu = psi_scaled(x, y);
  if (!(nu > 0.0)) {
    throw std::domain_error("non-positive viscosity " + format_double(nu) +
                            " at (" + format_double(x.x) + ", " +
                            format_double(x.y) + ")");
  }
  return nu;
}

namespace {

// Nested Clenshaw-Curtis rule of index i >= 1 (1, 3, 5, 9, ... points) with
// weights of the uniform probability density on [-1, 1]. Points are given
// as integer positions on the finest grid of 2^(max_level - 1) intervals.
struct Rule1d {
  std::vector<int> position;
  std::vector<double> x;
  std::vector<double> w;
};

Rule1d clenshaw_curtis(int index, int max_level) {
  Rule1d r;
  if (index == 1) {
    r.position = {max_level >= 2 ? 1 << (max_level - 2) : 0};
    r.x = {0.0};
    r.w = {1.0};
    return r;
  }
  const int n = 1 << (index - 1);  // intervals
  const int stride = 1 << (max_level - index);
  for (int k = 0; k <= n; ++k) {
    const double theta = std::numbers::pi * k / n;
    double s = 0.0;
    for (int j = 1; j <= n / 2; ++j) {
      const double b = (2 * j == n) ? 1.0 : 2.0;
      s += b / (4.0 * j * j - 1.0) * std::cos(2.0 * j * theta);
    }
    const double c = (k == 0 || k == n) ? 1.0 : 2.0;
    // Integration weights on [-1,1] sum to 2; halve for the density.
    r.w.push_back(0.5 * c / n * (1.0 - s));
    double x = -std::cos(theta);
    if (2 * k == n) x = 0.0;
    r.x.push_back(x);
    r.position.push_back(k * stride);
  }
  return r;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

SparseGrid clenshaw_curtis_sparse_grid(int dimension, int level) {
  if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
  if (level < 0 || level > 4) {
    throw std::invalid_argument("unsupported sparse grid level " +
                                std::to_string(level) + " (0..4)");
  }
  const int max_index = level + 1;
  const int fine = std::max(max_index, 1);
  std::vector<Rule1d> rules;
  for (int i = 1; i <= max_index; ++i) rules.push_back(clenshaw_curtis(i, fine));
  const double half_width = std::sqrt(3.0);

  // Smolyak: sum over multi-indices i >= 1 with level+1 <= |i| - N + 1 <=
  // ... i.e. q - N + 1 <= |i| <= q, q = N + level, coefficient
  // (-1)^(q-|i|) C(N-1, q-|i|).
  const int q = dimension + level;
  std::map<std::vector<int>, double> merged;
  std::map<std::vector<int>, std::vector<double>> coords;
  std::vector<int> index(dimension, 1);
  while (true) {
    int sum = 0;
    for (int v : index) sum += v;
    if (sum <= q && sum >= q - dimension + 1) {
      const double coef =
          ((q - sum) % 2 == 0 ? 1.0 : -1.0) * binomial(dimension - 1, q - sum);
      // Tensor product of the selected 1D rules.
      std::vector<int> pos(dimension, 0);
      while (true) {
        std::vector<int> key(dimension);
        std::vector<double> y(dimension);
        double w = coef;
        for (int d = 0; d < dimension; ++d) {
          const Rule1d& r = rules[index[d] - 1];
          key[d] = r.position[pos[d]];
          y[d] = half_width * r.x[pos[d]];
          w *= r.w[pos[d]];
        }
        merged[key] += w;
        coords.emplace(key, std::move(y));
        int d = 0;
        while (d < dimension) {
          if (++pos[d] < static_cast<int>(rules[index[d] - 1].x.size())) break;
          pos[d] = 0;
          ++d;
        }
        if (d == dimension) break;
      }
    }
    // Next multi-index with entries in [1, max_index].
    int d = 0;
    while (d < dimension) {
      if (++index[d] <= max_index) break;
      index[d] = 1;
      ++d;
    }
    if (d == dimension) break;
  }
  SparseGrid grid;
  grid.dimension = dimension;
  grid.level = level;
  for (const auto& [key, w] : merged) {
    if (w == 0.0) continue;
    grid.points.push_back(coords.at(key));
    grid.weights.push_back(w);
  }
  return grid;
}

double expect_qoi(std::span<const double> values, const SparseGrid& grid) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("expect_qoi: " + std::to_string(values.size()) +
                                " values for " + std::to_string(grid.size()) +
                                " points");
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) sum += grid.weights[j] * values[j];
  return sum;
}

void write_grid_csv(std::ostream& out, const SparseGrid& grid) {
  out << 'w';
  for (int d = 1; d <= grid.dimension; ++d) out << ",y" << d;
  out << '\n';
  for (std::size_t j = 0; j < grid.size(); ++j) {
    out << format_double(grid.weights[j]);
    for (double y : grid.points[j]) out << ',' << format_double(y);
    out << '\n';
  }
}

std::vector<double> affine_perturbation_coefficients(int count,
                                                     PerturbationFormula formula) {
  if (count < 1) throw std::invalid_argument("ensemble size must be >= 1");
  std::vector<double> k(count);
  for (int j = 1; j <= count; ++j) {
    if (formula == PerturbationFormula::Alternating) {
      const double sign = (j % 2 == 1) ? 1.0 : -1.0;
      k[j - 1] = sign * 4.0 * ((j + 1) / 2) / count;
    } else {
      const int half = count / 2;
      k[j - 1] = half == 0 ? 0.0 : static_cast<double>(2 * j - 1 - count) / half;
    }
  }
  return k;
}

std::vector<double> uniform_samples(double a, double b, int count,
                                    std::uint64_t seed) {
  if (!(b >= a)) throw std::invalid_argument("uniform_samples: need a <= b");
  std::mt19937_64 engine(seed);
  std::vector<double> out(count);
  for (double& v : out) {
    const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    v = a + (b - a) * u;
  }
  return out;
}

}  // namespace ensflow
