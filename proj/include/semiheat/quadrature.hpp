#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semiheat {

// A one-dimensional rule on the unit interval [0, 1].
struct Rule1D {
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const { return points.size(); }
};

// n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1.
Rule1D gauss_legendre(std::size_t n);

// n-point Gauss-Lobatto rule (n >= 2), includes both end points and is exact
// for polynomials of degree 2n-3.
Rule1D gauss_lobatto(std::size_t n);

// Lagrange polynomials through a fixed node set on [0, 1].
class LagrangeBasis1D {
 public:
  explicit LagrangeBasis1D(std::vector<double> nodes);

  std::size_t size() const { return nodes_.size(); }
  std::size_t degree() const { return nodes_.size() - 1; }
  std::span<const double> nodes() const { return nodes_; }

  // Writes phi_i(x), phi_i'(x), phi_i''(x) for all i. Any output span may be
  // empty, in which case it is skipped.
  void evaluate(double x, std::span<double> values, std::span<double> first = {},
                std::span<double> second = {}) const;

  double value(std::size_t i, double x) const;

 private:
  std::vector<double> nodes_;
  std::vector<double> denom_;  // prod_{j != i} (x_i - x_j)
};

// Basis values tabulated at a list of points: entry [q * n_basis + i].
struct BasisTable {
  std::size_t n_points = 0;
  std::size_t n_basis = 0;
  std::vector<double> value, first, second;

  double v(std::size_t q, std::size_t i) const { return value[q * n_basis + i]; }
  double d(std::size_t q, std::size_t i) const { return first[q * n_basis + i]; }
  double dd(std::size_t q, std::size_t i) const { return second[q * n_basis + i]; }
};

BasisTable tabulate(const LagrangeBasis1D& basis, std::span<const double> points);

}  // namespace semiheat
