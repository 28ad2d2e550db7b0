#include <doctest.h>

#include <cmath>
#include <numbers>

#include "semiheat/errors.hpp"
#include "semiheat/scheme.hpp"
#include "test_support.hpp"

using namespace semiheat;
using std::numbers::pi;

namespace {

const Rectangle kUnit{0, 1, 0, 1};

SpacePtr space_on(Mesh m, int p) { return Space::make(test::share(std::move(m)), p); }

ProblemSpec pure_heat() {
  ProblemSpec p = builtin("heat_decay");
  return p;
}

double max_nodal_error(const Field& U, const std::function<double(Point)>& u) {
  double e = 0.0;
  const Space& s = U.space();
  for (std::uint32_t n = 0; n < s.n_nodes(); ++n) e = std::max(e, std::abs(U.values()[n] - u(s.node_point(n))));
  return e;
}

// (g, phi_i) over the free nodes with g evaluated pointwise.
std::vector<double> load_of(const Space& s, const std::function<double(Point)>& g) {
  return assemble_load(s, s.mesh(), [&](const CellId&, const Box& b, std::span<const double> tx,
                                        std::span<const double> ty, std::span<double> out) {
    for (std::size_t j = 0; j < ty.size(); ++j)
      for (std::size_t i = 0; i < tx.size(); ++i) out[i + tx.size() * j] = g({b.x0 + b.hx * tx[i], b.y0 + b.hy * ty[j]});
  });
}

}  // namespace

TEST_CASE("initial projection examples") {
  ProblemSpec zero = pure_heat();
  zero.u0 = [](Point) { return 0.0; };
  zero.lap_u0 = [](Point) { return 0.0; };
  const Field U0 = project_initial(zero, space_on(Mesh::uniform(kUnit, 2), 2));
  CHECK(U0.linf_norm() == 0.0);

  // Ritz projection of sin(pi x) sin(pi y): nodal error shrinks at least like h^(p+1).
  const ProblemSpec hd = pure_heat();
  for (int p = 1; p <= 3; ++p) {
    double prev = 0.0;
    for (std::uint32_t l = 2; l <= 4; ++l) {
      const double e = max_nodal_error(project_initial(hd, space_on(Mesh::uniform(kUnit, l), p)), hd.u0);
      if (l > 2) CHECK(prev / e > std::pow(2.0, p + 1) * 0.7);
      prev = e;
    }
  }

  const ProblemSpec e1 = builtin("example1");
  const Field U = project_initial(e1, space_on(Mesh::uniform(e1.domain, 5), 3));
  CHECK(U.linf_norm() == doctest::Approx(10.0).epsilon(1e-2));
}

TEST_CASE("imex step examples") {
  const ProblemSpec hd = pure_heat();
  const auto s = space_on(Mesh::uniform(kUnit, 2), 2);
  CHECK(imex_step(Field(s), s, 0.01, 0.0, hd, nullptr).linf_norm() == 0.0);

  // One step of the blow-up problem grows the peak.
  const ProblemSpec e1 = builtin("example1");
  const auto s1 = space_on(Mesh::uniform(e1.domain, 5), 3);
  const Field U0 = project_initial(e1, s1);
  const Field U1 = imex_step(U0, s1, 0.05375 / 2, 0.0, e1);
  CHECK(U1.eval({0, 0}) > U0.eval({0, 0}));
}

TEST_CASE("property: pure heat steps do not increase the sampled norm") {
  auto g = test::rng(31);
  const ProblemSpec hd = pure_heat();
  const auto s = space_on(Mesh::uniform(kUnit, 3), 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(s->n_free());
    for (auto& x : v) x = test::uniform(g, -1, 1);
    Field U = Field::from_free(s, v);
    double prev = U.linf_norm();
    for (int m = 0; m < 5; ++m) {
      U = imex_step(U, s, 0.02, 0.02 * m, hd);
      const double n = U.linf_norm();
      CHECK(n <= prev * (1 + 1e-12));
      prev = n;
    }
  }
}

TEST_CASE("identical meshes need no transfer") {
  auto g = test::rng(32);
  const ProblemSpec e1 = builtin("example1");
  const Mesh m = test::random_mesh(g, e1.domain, 2, 2, 0.3);
  const auto s = space_on(m, 2);
  const auto s_copy = space_on(m, 2);
  const Field U0 = project_initial(e1, s);
  const Field a = imex_step(U0, s, 0.01, 0.0, e1);
  const Field b = imex_step(U0, s_copy, 0.01, 0.0, e1);
  for (std::size_t i = 0; i < a.values().size(); ++i)
    CHECK(a.values()[i] == doctest::Approx(b.values()[i]).scale(1.0).epsilon(1e-9));
}

TEST_CASE("interpolant in time") {
  auto g = test::rng(33);
  const auto s = space_on(Mesh::uniform(kUnit, 2), 2);
  std::vector<double> v1(s->n_free()), v2(s->n_free());
  for (auto& x : v1) x = test::uniform(g, -1, 1);
  for (auto& x : v2) x = test::uniform(g, -1, 1);
  TimeSlab slab;
  slab.t_prev = 0.2;
  slab.t_next = 0.3;
  slab.U_prev = Field::from_free(s, v1);
  slab.U_next = Field::from_free(s, v2);
  const Point x{0.31, 0.62};
  CHECK(interpolant_at(slab, 0.3)(x) == slab.U_next.eval(x));
  CHECK(interpolant_at(slab, 0.2)(x) == slab.U_prev.eval(x));
  CHECK(interpolant_at(slab, 0.25)(x) == doctest::Approx(0.5 * (slab.U_prev.eval(x) + slab.U_next.eval(x))));
  CHECK_THROWS_AS(interpolant_at(slab, 0.31), RangeError);
  CHECK_THROWS_AS(interpolant_at(slab, 0.19), RangeError);

  // Sampled norm of the blend never exceeds the larger endpoint norm.
  const double bound = std::max(slab.U_prev.linf_norm(), slab.U_next.linf_norm());
  const Rule1D r = s->sample_rule();
  for (int k = 0; k < 10; ++k) {
    const double t = test::uniform(g, 0.2, 0.3);
    const auto U = interpolant_at(slab, t);
    double mx = 0.0;
    for (const auto& c : s->mesh().leaves()) {
      const Box b = s->mesh().box(c);
      for (double py : r.points)
        for (double px : r.points) mx = std::max(mx, std::abs(U({b.x0 + b.hx * px, b.y0 + b.hy * py})));
    }
    CHECK(mx <= bound + 1e-14);
  }
}

TEST_CASE("discrete laplacian") {
  const ProblemSpec hd = pure_heat();
  const auto s = space_on(Mesh::uniform(kUnit, 2), 2);
  const Field U = Field::interpolate_function(s, hd.u0);
  TimeSlab still;
  still.t_prev = 0.0;
  still.t_next = 0.1;
  still.U_prev = U;
  still.U_next = U;
  const auto A = discrete_laplacian(still, hd, SlabEnd::Next);
  CHECK(A({0.3, 0.4}) == 0.0);
  const auto A0 = discrete_laplacian(still, hd, SlabEnd::Prev);
  CHECK(A0({0.3, 0.4}) == doctest::Approx(2 * pi * pi * std::sin(0.3 * pi) * std::sin(0.4 * pi)));
}

TEST_CASE("property: discrete reconstruction identity") {
  auto g = test::rng(34);
  const ProblemSpec e1 = builtin("example1");
  for (int trial = 0; trial < 4; ++trial) {
    const Mesh m0 = test::random_mesh(g, e1.domain, 2, 2, 0.3);
    std::vector<CellId> marked;
    for (const auto& c : m0.leaves())
      if (test::uniform(g, 0, 1) < 0.3) marked.push_back(c);
    const Mesh m1 = trial % 2 ? refine(m0, marked) : m0;
    const int p = 2 + trial % 2;
    const auto s0 = space_on(m0, p), s1 = space_on(m1, p);
    const Field U0 = project_initial(e1, s0);
    const double k = 0.01;
    const Field U1 = imex_step(U0, s1, k, 0.0, e1);
    TimeSlab slab;
    slab.t_prev = 0.0;
    slab.t_next = k;
    slab.U_prev = U0;
    slab.U_next = U1;
    const auto A1 = discrete_laplacian(slab, e1, SlabEnd::Next);
    // (A^1, V) on the finer quadrature mesh against a (grad U^1, grad V).
    const auto lhs = assemble_load(*s1, m1, [&](const CellId&, const Box& b, std::span<const double> tx,
                                                std::span<const double> ty, std::span<double> out) {
      for (std::size_t j = 0; j < ty.size(); ++j)
        for (std::size_t i = 0; i < tx.size(); ++i) out[i + tx.size() * j] = A1({b.x0 + b.hx * tx[i], b.y0 + b.hy * ty[j]});
    });
    const CsrMatrix S = assemble_stiffness(*s1, e1.a);
    const auto u = U1.free_values();
    std::vector<double> Su(u.size());
    S.multiply(u, Su);
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      scale = std::max(scale, std::abs(Su[i]));
      diff = std::max(diff, std::abs(Su[i] - lhs[i]));
    }
    CHECK(diff <= 1e-8 * scale);
  }

  // Initial projection: (-a lap u0, V) = a (grad U0, grad V).
  const auto s = space_on(Mesh::uniform(e1.domain, 3), 3);
  const Field U0 = project_initial(e1, s);
  const auto b = load_of(*s, [&](Point x) { return -e1.lap_u0(x); });
  const CsrMatrix S = assemble_stiffness(*s, 1.0);
  const auto u = U0.free_values();
  std::vector<double> Su(u.size());
  S.multiply(u, Su);
  double scale = 0.0, diff = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    scale = std::max(scale, std::abs(b[i]));
    diff = std::max(diff, std::abs(Su[i] - b[i]));
  }
  CHECK(diff <= 1e-8 * scale);
}

TEST_CASE("trajectory") {
  const ProblemSpec hd = pure_heat();
  const auto s = space_on(Mesh::uniform(kUnit, 2), 2);
  Trajectory tr(project_initial(hd, s));
  tr.push(imex_step(tr.field(0), s, 0.01, 0.0, hd), 0.01);
  tr.push(imex_step(tr.field(1), s, 0.02, 0.01, hd), 0.03);
  CHECK(tr.steps() == 2);
  CHECK(tr.time(2) == 0.03);
  const TimeSlab s2 = tr.slab(2);
  CHECK(s2.m == 2);
  CHECK(s2.k() == doctest::Approx(0.02));
  REQUIRE(s2.U_prev2.has_value());
  CHECK(s2.t_prev2 == 0.0);
  CHECK_FALSE(tr.slab(1).U_prev2.has_value());
  CHECK_THROWS_AS(tr.slab(3), RangeError);
  CHECK_THROWS_AS(tr.at(0.05), RangeError);
  const Point x{0.4, 0.4};
  CHECK(tr.at(0.03)(x) == doctest::Approx(tr.field(2).eval(x)));
  CHECK(tr.at(0.0)(x) == doctest::Approx(tr.field(0).eval(x)));
  CHECK(tr.at(0.02)(x) == doctest::Approx(0.5 * (tr.field(1).eval(x) + tr.field(2).eval(x))));
}
