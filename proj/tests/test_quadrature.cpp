#include <doctest.h>

#include <cmath>

#include "semiheat/quadrature.hpp"
#include "test_support.hpp"

using namespace semiheat;

namespace {

double integrate(const Rule1D& r, int power) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.points[i], power);
  return s;
}

}  // namespace

TEST_CASE("gauss-legendre exactness") {
  for (std::size_t n = 1; n <= 12; ++n) {
    const Rule1D r = gauss_legendre(n);
    REQUIRE(r.size() == n);
    for (int d = 0; d <= static_cast<int>(2 * n - 1); ++d)
      CHECK(integrate(r, d) == doctest::Approx(1.0 / (d + 1)).epsilon(1e-13));
  }
}

TEST_CASE("gauss-lobatto includes end points and is exact to 2n-3") {
  for (std::size_t n = 2; n <= 13; ++n) {
    const Rule1D r = gauss_lobatto(n);
    REQUIRE(r.size() == n);
    CHECK(r.points.front() == 0.0);
    CHECK(r.points.back() == 1.0);
    for (std::size_t i = 1; i < n; ++i) CHECK(r.points[i] > r.points[i - 1]);
    for (int d = 0; d <= static_cast<int>(2 * n - 3); ++d)
      CHECK(integrate(r, d) == doctest::Approx(1.0 / (d + 1)).epsilon(1e-13));
  }
}

TEST_CASE("lagrange basis is cardinal and reproduces polynomials") {
  for (std::size_t p = 1; p <= 9; ++p) {
    const LagrangeBasis1D b(gauss_lobatto(p + 1).points);
    std::vector<double> v(p + 1), d(p + 1), dd(p + 1);
    for (std::size_t i = 0; i <= p; ++i) {
      b.evaluate(b.nodes()[i], v);
      for (std::size_t j = 0; j <= p; ++j) CHECK(v[j] == doctest::Approx(i == j ? 1.0 : 0.0).scale(1.0).epsilon(1e-12));
    }
    // q(x) = x^p: the interpolant reproduces value and two derivatives.
    auto g = test::rng(p);
    for (int s = 0; s < 10; ++s) {
      const double x = test::uniform(g, 0, 1);
      b.evaluate(x, v, d, dd);
      double qv = 0, qd = 0, qdd = 0;
      for (std::size_t j = 0; j <= p; ++j) {
        const double c = std::pow(b.nodes()[j], static_cast<double>(p));
        qv += c * v[j];
        qd += c * d[j];
        qdd += c * dd[j];
      }
      const double pp = static_cast<double>(p);
      CHECK(qv == doctest::Approx(std::pow(x, pp)).scale(1.0).epsilon(1e-11));
      CHECK(qd == doctest::Approx(pp * std::pow(x, pp - 1)).scale(1.0).epsilon(1e-9));
      CHECK(qdd == doctest::Approx(pp * (pp - 1) * (p >= 2 ? std::pow(x, pp - 2) : 0.0)).scale(1.0).epsilon(1e-7));
      CHECK(b.value(p, x) == doctest::Approx(v[p]));
    }
  }
}

TEST_CASE("tabulate matches evaluate") {
  const LagrangeBasis1D b(gauss_lobatto(4).points);
  const Rule1D q = gauss_legendre(5);
  const BasisTable t = tabulate(b, q.points);
  CHECK(t.n_points == 5);
  CHECK(t.n_basis == 4);
  std::vector<double> v(4), d(4), dd(4);
  for (std::size_t k = 0; k < 5; ++k) {
    b.evaluate(q.points[k], v, d, dd);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(t.v(k, i) == doctest::Approx(v[i]));
      CHECK(t.d(k, i) == doctest::Approx(d[i]));
      CHECK(t.dd(k, i) == doctest::Approx(dd[i]));
    }
  }
}
