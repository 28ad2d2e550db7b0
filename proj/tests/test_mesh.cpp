#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "semiheat/errors.hpp"
#include "semiheat/mesh.hpp"
#include "test_support.hpp"

using namespace semiheat;

namespace {

const Rectangle kUnit{0, 1, 0, 1};

bool box_inside(const Box& in, const Box& out) {
  const double e = 1e-12;
  return in.x0 >= out.x0 - e && in.y0 >= out.y0 - e && in.x0 + in.hx <= out.x0 + out.hx + e &&
         in.y0 + in.hy <= out.y0 + out.hy + e;
}

// Number of leaves of `m` whose box contains box `b`.
int containing_count(const Mesh& m, const Box& b) {
  int n = 0;
  for (const auto& c : m.leaves()) n += box_inside(b, m.box(c));
  return n;
}

double area_sum(const Mesh& m) {
  double s = 0.0;
  for (const auto& c : m.leaves()) s += m.box(c).area();
  return s;
}

Mesh quadrant_refined(int quadrant, int depth) {
  Mesh m = Mesh::uniform(kUnit, 1);
  CellId target = CellId{0, 0, 0}.child(quadrant);
  for (int d = 0; d < depth; ++d) {
    const CellId t = target;
    m = refine(m, std::span<const CellId>(&t, 1));
    target = target.child(quadrant == 2 ? 1 : 2);  // walk toward the centre
  }
  return m;
}

}  // namespace

TEST_CASE("rectangle validation") {
  CHECK_THROWS_AS(Rectangle(1, 0, 0, 1), DomainError);
  CHECK_THROWS_AS(Rectangle(0, 1, 2, 2), DomainError);
  CHECK(Rectangle(-8, 8, -8, 8).area() == 256.0);
}

TEST_CASE("cell ids") {
  const CellId c{3, 5, 2};
  CHECK(CellId::from_key(c.key()) == c);
  CHECK(c.child(3).parent() == c);
  CHECK(c.contains(c.child(0).child(2)));
  CHECK_FALSE(c.child(0).contains(c));
}

TEST_CASE("refine examples") {
  const Mesh u = Mesh::uniform(kUnit, 2);
  CHECK(refine(u, {}) == u);

  const Mesh root(kUnit);
  const CellId r{0, 0, 0};
  const Mesh r1 = refine(root, std::span<const CellId>(&r, 1));
  CHECK(r1.size() == 4);
  for (const auto& c : r1.leaves()) CHECK(c.level == 1);

  // One cell of a 2x2 mesh refined twice: closure keeps neighbours within one level.
  Mesh m = Mesh::uniform(kUnit, 1);
  const CellId a{1, 0, 0};
  m = refine(m, std::span<const CellId>(&a, 1));
  const CellId b{2, 1, 1};  // the inner child, touching the other quadrants
  m = refine(m, std::span<const CellId>(&b, 1));
  CHECK(test::brute_one_irregular(m));
  CHECK(is_one_irregular(m));
  CHECK_FALSE(m.is_leaf(CellId{1, 1, 0}));
}

TEST_CASE("coarsen examples") {
  const Mesh u = Mesh::uniform(kUnit, 2);
  CHECK(coarsen(u, {}) == u);

  const Mesh one = Mesh::uniform(kUnit, 1);
  const std::vector<CellId> all(one.leaves().begin(), one.leaves().end());
  const Mesh merged = coarsen(one, all);
  CHECK(merged.size() == 1);
  CHECK(merged.leaves()[0] == CellId{0, 0, 0});

  const std::vector<CellId> three(all.begin(), all.begin() + 3);
  CHECK(coarsen(one, three) == one);

  // min_level is respected.
  CHECK(coarsen(one, all, 1) == one);
}

TEST_CASE("overlay examples") {
  const Mesh nw = quadrant_refined(2, 1);
  const Mesh se = quadrant_refined(1, 1);
  const Mesh fine = overlay_finest(nw, se);
  const Mesh coarse = overlay_coarsest(nw, se);
  for (const auto& c : fine.leaves()) {
    CHECK(containing_count(nw, fine.box(c)) == 1);
    CHECK(containing_count(se, fine.box(c)) == 1);
  }
  // Both quadrants refined in the join.
  CHECK_FALSE(fine.is_leaf(CellId{1, 0, 1}));
  CHECK_FALSE(fine.is_leaf(CellId{1, 1, 0}));
  // Neither refined in the meet.
  CHECK(coarse == Mesh::uniform(kUnit, 1));

  const Mesh u = Mesh::uniform(kUnit, 2);
  CHECK(overlay_finest(u, u) == u);
  CHECK(overlay_coarsest(u, u) == u);
  const CellId c{2, 1, 1};
  const Mesh ref = refine(u, std::span<const CellId>(&c, 1));
  CHECK(overlay_finest(u, ref) == ref);
  CHECK(overlay_coarsest(u, ref) == u);

  CHECK_THROWS_AS(overlay_finest(u, Mesh::uniform(Rectangle(0, 2, 0, 1), 2)), DomainMismatchError);
  CHECK_THROWS_AS(overlay_coarsest(u, Mesh::uniform(Rectangle(0, 2, 0, 1), 2)), DomainMismatchError);
}

TEST_CASE("min diameter examples") {
  CHECK(min_diameter(Mesh::uniform(kUnit, 1)) == doctest::Approx(std::sqrt(2.0) / 2));
  CHECK(min_diameter(Mesh(kUnit)) == doctest::Approx(std::sqrt(2.0)));
  // (-8, 8)^2 refined five levels locally at the origin.
  Mesh m(Rectangle(-8, 8, -8, 8));
  for (int l = 0; l < 5; ++l) {
    std::vector<CellId> marked;
    for (const auto& c : m.leaves()) {
      const Box b = m.box(c);
      if (b.x0 <= 0 && b.x0 + b.hx >= 0 && b.y0 <= 0 && b.y0 + b.hy >= 0) marked.push_back(c);
    }
    m = refine(m, marked);
  }
  CHECK(min_diameter(m) == doctest::Approx(16 * std::sqrt(2.0) / 32));
}

TEST_CASE("locate and neighbours") {
  const Mesh u = Mesh::uniform(kUnit, 2);
  CHECK(u.locate({0.1, 0.1}) == CellId{2, 0, 0});
  CHECK(u.locate({0.9, 0.6}) == CellId{2, 3, 2});
  CHECK(u.neighbor(CellId{2, 0, 0}, Direction::West) == std::nullopt);
  CHECK(u.neighbor(CellId{2, 0, 0}, Direction::East) == CellId{2, 1, 0});
  CHECK(u.neighbor(CellId{2, 0, 0}, Direction::North) == CellId{2, 0, 1});
}

TEST_CASE("interior faces cover each shared edge once") {
  auto g = test::rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Mesh m = test::random_mesh(g, kUnit, 1, 3, 0.3);
    double length = 0.0;
    for (const auto& f : interior_faces(m)) {
      CHECK(f.hi > f.lo);
      length += f.hi - f.lo;
      const Box a = m.box(f.minus), b = m.box(f.plus);
      if (f.vertical) {
        CHECK(a.x0 + a.hx == doctest::Approx(f.fixed));
        CHECK(b.x0 == doctest::Approx(f.fixed));
      } else {
        CHECK(a.y0 + a.hy == doctest::Approx(f.fixed));
        CHECK(b.y0 == doctest::Approx(f.fixed));
      }
    }
    // Total interior edge length = (sum of perimeters - boundary) / 2.
    double perim = 0.0;
    for (const auto& c : m.leaves()) perim += 2 * (m.box(c).hx + m.box(c).hy);
    CHECK(length == doctest::Approx((perim - 4.0) / 2));
  }
}

TEST_CASE("property: random refinement keeps the tiling and 1-irregularity") {
  auto g = test::rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const Mesh m = test::random_mesh(g, Rectangle(-8, 8, -2, 2), 0, 5, 0.25);
    CHECK(area_sum(m) == doctest::Approx(m.domain().area()).epsilon(1e-12));
    CHECK(test::brute_one_irregular(m));
    // Random coarsening preserves the same properties.
    std::vector<CellId> marked;
    for (const auto& c : m.leaves())
      if (test::uniform(g, 0, 1) < 0.7) marked.push_back(c);
    const Mesh c = coarsen(m, marked);
    CHECK(area_sum(c) == doctest::Approx(c.domain().area()).epsilon(1e-12));
    CHECK(test::brute_one_irregular(c));
    CHECK(c.size() <= m.size());
  }
}

TEST_CASE("property: refine then coarsen with the same marks restores the mesh") {
  auto g = test::rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const Mesh m = Mesh::uniform(kUnit, 2);
    // Marks that need no closure: isolated cells in a uniform mesh.
    std::vector<CellId> marked;
    for (const auto& c : m.leaves())
      if (test::uniform(g, 0, 1) < 0.4) marked.push_back(c);
    const Mesh r = refine(m, marked);
    std::vector<CellId> children;
    for (const auto& c : marked)
      for (int q = 0; q < 4; ++q) children.push_back(c.child(q));
    CHECK(coarsen(r, children) == m);
  }
}

TEST_CASE("property: overlays on random pairs") {
  auto g = test::rng(303);
  for (int trial = 0; trial < 40; ++trial) {
    const Mesh a = test::random_mesh(g, kUnit, 1, 4, 0.3);
    const Mesh b = test::random_mesh(g, kUnit, 1, 4, 0.3);
    const Mesh j = overlay_finest(a, b), mt = overlay_coarsest(a, b);
    CHECK(j == overlay_finest(b, a));
    CHECK(mt == overlay_coarsest(b, a));
    CHECK(overlay_finest(j, j) == j);
    CHECK(overlay_coarsest(mt, mt) == mt);
    CHECK(overlay_coarsest(j, a) == a);
    for (const auto& c : j.leaves()) {
      CHECK(containing_count(a, j.box(c)) == 1);
      CHECK(containing_count(b, j.box(c)) == 1);
    }
    for (const auto& c : a.leaves()) CHECK(containing_count(mt, a.box(c)) == 1);
    for (const auto& c : b.leaves()) CHECK(containing_count(mt, b.box(c)) == 1);
    CHECK(area_sum(j) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(area_sum(mt) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(test::brute_one_irregular(j));
  }
}

TEST_CASE("generation counter is unique per mesh") {
  const Mesh a = Mesh::uniform(kUnit, 1);
  const Mesh b = Mesh::uniform(kUnit, 1);
  CHECK(a.generation() != b.generation());
  CHECK(a == b);
}
