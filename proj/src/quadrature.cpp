#include "semiheat/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace semiheat {
namespace {

// Legendre P_n and its derivative at x in [-1, 1] by the three-term recurrence.
void legendre(std::size_t n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (std::size_t k = 2; k <= n; ++k) {
    const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = pk;
  }
  p = p1;
  dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

Rule1D gauss_legendre(std::size_t n) {
  if (n == 0) throw std::invalid_argument("gauss_legendre: n must be positive");
  Rule1D rule;
  rule.points.resize(n);
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0, dp = 0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    legendre(n, x, p, dp);
    // map from [-1,1] to [0,1], ascending order
    rule.points[n - 1 - i] = 0.5 * (x + 1.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

Rule1D gauss_lobatto(std::size_t n) {
  if (n < 2) throw std::invalid_argument("gauss_lobatto: n must be at least 2");
  Rule1D rule;
  rule.points.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const std::size_t N = n - 1;
  const double wend = 2.0 / (N * (N + 1.0));
  rule.points[0] = 0.0;
  rule.points[N] = 1.0;
  rule.weights[0] = rule.weights[N] = 0.5 * wend;
  // interior nodes are the roots of P_N'
  for (std::size_t i = 1; i < N; ++i) {
    double x = -std::cos(std::numbers::pi * i / N);
    for (int it = 0; it < 100; ++it) {
      // P_N'' from the Legendre ODE: (1-x^2) P'' = 2x P' - N(N+1) P
      double p = 0, dp = 0;
      legendre(N, x, p, dp);
      const double d2p = (2.0 * x * dp - N * (N + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    double p = 0, dp = 0;
    legendre(N, x, p, dp);
    rule.points[i] = 0.5 * (x + 1.0);
    rule.weights[i] = 0.5 * wend / (p * p);
  }
  return rule;
}

LagrangeBasis1D::LagrangeBasis1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw std::invalid_argument("LagrangeBasis1D: empty node set");
  denom_.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) denom_[i] *= nodes_[i] - nodes_[j];
}

double LagrangeBasis1D::value(std::size_t i, double x) const {
  double v = 1.0;
  for (std::size_t j = 0; j < nodes_.size(); ++j)
    if (j != i) v *= x - nodes_[j];
  return v / denom_[i];
}

void LagrangeBasis1D::evaluate(double x, std::span<double> values, std::span<double> first,
                               std::span<double> second) const {
  const std::size_t n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    // Product of (x - x_j) over j != i, carrying first and second derivatives.
    double v = 1.0, d1 = 0.0, d2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double t = x - nodes_[j];
      d2 = d2 * t + 2.0 * d1;
      d1 = d1 * t + v;
      v *= t;
    }
    if (!values.empty()) values[i] = v / denom_[i];
    if (!first.empty()) first[i] = d1 / denom_[i];
    if (!second.empty()) second[i] = d2 / denom_[i];
  }
}

BasisTable tabulate(const LagrangeBasis1D& basis, std::span<const double> points) {
  BasisTable t;
  t.n_points = points.size();
  t.n_basis = basis.size();
  t.value.resize(t.n_points * t.n_basis);
  t.first.resize(t.n_points * t.n_basis);
  t.second.resize(t.n_points * t.n_basis);
  for (std::size_t q = 0; q < t.n_points; ++q) {
    const std::size_t o = q * t.n_basis;
    basis.evaluate(points[q], std::span(t.value).subspan(o, t.n_basis),
                   std::span(t.first).subspan(o, t.n_basis), std::span(t.second).subspan(o, t.n_basis));
  }
  return t;
}

}  // namespace semiheat
