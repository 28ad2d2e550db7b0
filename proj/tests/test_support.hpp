#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "semiheat/mesh.hpp"

namespace semiheat::test {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Random 1-irregular mesh: `rounds` passes, each refining a random subset of leaves.
inline Mesh random_mesh(std::mt19937_64& g, Rectangle dom, std::uint32_t base, int rounds, double frac,
                        std::uint32_t cap = 7) {
  Mesh m = Mesh::uniform(dom, base);
  for (int r = 0; r < rounds; ++r) {
    std::vector<CellId> marked;
    for (const auto& c : m.leaves())
      if (c.level < cap && uniform(g, 0.0, 1.0) < frac) marked.push_back(c);
    m = refine(m, marked);
  }
  return m;
}

inline std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

// Brute-force 1-irregularity over all pairs of edge-adjacent leaves.
inline bool brute_one_irregular(const Mesh& m) {
  const auto leaves = m.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const Box a = m.box(leaves[i]);
    for (std::size_t j = i + 1; j < leaves.size(); ++j) {
      const Box b = m.box(leaves[j]);
      const double eps = 1e-12 * (m.domain().width() + m.domain().height());
      const bool touch_x = std::abs(a.x0 + a.hx - b.x0) < eps || std::abs(b.x0 + b.hx - a.x0) < eps;
      const bool touch_y = std::abs(a.y0 + a.hy - b.y0) < eps || std::abs(b.y0 + b.hy - a.y0) < eps;
      const bool overlap_y = std::min(a.y0 + a.hy, b.y0 + b.hy) - std::max(a.y0, b.y0) > eps;
      const bool overlap_x = std::min(a.x0 + a.hx, b.x0 + b.hx) - std::max(a.x0, b.x0) > eps;
      if ((touch_x && overlap_y) || (touch_y && overlap_x)) {
        const int d = static_cast<int>(leaves[i].level) - static_cast<int>(leaves[j].level);
        if (d > 1 || d < -1) return false;
      }
    }
  }
  return true;
}

}  // namespace semiheat::test
