#include "semiheat/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <unordered_set>

#include "semiheat/errors.hpp"

namespace semiheat {
namespace {

std::atomic<std::uint64_t> next_generation{1};

using KeySet = std::unordered_set<std::uint64_t>;

std::optional<CellId> ancestor_leaf(const KeySet& leaves, CellId c) {
  while (true) {
    if (leaves.contains(c.key())) return c;
    if (c.level == 0) return std::nullopt;
    c = c.parent();
  }
}

std::optional<CellId> same_level_neighbor(const CellId& c, Direction d) {
  const std::uint32_t n = 1u << c.level;
  switch (d) {
    case Direction::West:
      if (c.ix == 0) return std::nullopt;
      return CellId{c.level, c.ix - 1, c.iy};
    case Direction::East:
      if (c.ix + 1 >= n) return std::nullopt;
      return CellId{c.level, c.ix + 1, c.iy};
    case Direction::South:
      if (c.iy == 0) return std::nullopt;
      return CellId{c.level, c.ix, c.iy - 1};
    case Direction::North:
      if (c.iy + 1 >= n) return std::nullopt;
      return CellId{c.level, c.ix, c.iy + 1};
  }
  return std::nullopt;
}

constexpr Direction kDirections[4] = {Direction::West, Direction::East, Direction::South, Direction::North};

std::vector<CellId> to_sorted(const KeySet& keys) {
  std::vector<CellId> out;
  out.reserve(keys.size());
  for (auto k : keys) out.push_back(CellId::from_key(k));
  std::sort(out.begin(), out.end());
  return out;
}

void require_same_domain(const Mesh& a, const Mesh& b) {
  if (!(a.domain() == b.domain())) throw DomainMismatchError("meshes are defined on different rectangles");
}

}  // namespace

Rectangle::Rectangle(double x0, double x1, double y0, double y1) : x_min(x0), x_max(x1), y_min(y0), y_max(y1) {
  if (!(x0 < x1) || !(y0 < y1)) throw DomainError("rectangle must satisfy x_min < x_max and y_min < y_max");
}

bool Rectangle::contains(Point p, double slack) const {
  return p.x >= x_min - slack && p.x <= x_max + slack && p.y >= y_min - slack && p.y <= y_max + slack;
}

double Box::diameter() const { return std::hypot(hx, hy); }

bool CellId::contains(const CellId& other) const {
  if (other.level < level) return false;
  const std::uint32_t d = other.level - level;
  return (other.ix >> d) == ix && (other.iy >> d) == iy;
}

std::ostream& operator<<(std::ostream& os, const CellId& c) {
  return os << "(" << c.level << ":" << c.ix << "," << c.iy << ")";
}

Mesh::Mesh(Rectangle domain) : Mesh(domain, {CellId{}}) {}

Mesh::Mesh(Rectangle domain, std::vector<CellId> leaves)
    : domain_(domain), leaves_(std::move(leaves)), generation_(next_generation.fetch_add(1)) {
  std::sort(leaves_.begin(), leaves_.end());
  index_.reserve(leaves_.size() * 2);
  for (std::uint32_t i = 0; i < leaves_.size(); ++i) {
    index_.emplace(leaves_[i].key(), i);
    max_level_ = std::max(max_level_, leaves_[i].level);
  }
}

Mesh Mesh::uniform(Rectangle domain, std::uint32_t level) {
  std::vector<CellId> leaves;
  const std::uint32_t n = 1u << level;
  leaves.reserve(static_cast<std::size_t>(n) * n);
  for (std::uint32_t ix = 0; ix < n; ++ix)
    for (std::uint32_t iy = 0; iy < n; ++iy) leaves.push_back({level, ix, iy});
  return Mesh(domain, std::move(leaves));
}

std::size_t Mesh::index_of(const CellId& c) const { return index_.at(c.key()); }

std::optional<CellId> Mesh::leaf_containing(const CellId& c) const {
  CellId d = c;
  while (true) {
    if (index_.contains(d.key())) return d;
    if (d.level == 0) return std::nullopt;
    d = d.parent();
  }
}

std::optional<std::size_t> Mesh::leaf_index_containing(const CellId& c) const {
  CellId d = c;
  while (true) {
    if (auto it = index_.find(d.key()); it != index_.end()) return it->second;
    if (d.level == 0) return std::nullopt;
    d = d.parent();
  }
}

CellId Mesh::locate(Point p) const {
  const double scale = std::ldexp(1.0, static_cast<int>(max_level_));
  const auto n = static_cast<std::int64_t>(1) << max_level_;
  auto ix = static_cast<std::int64_t>(std::floor((p.x - domain_.x_min) / domain_.width() * scale));
  auto iy = static_cast<std::int64_t>(std::floor((p.y - domain_.y_min) / domain_.height() * scale));
  ix = std::clamp<std::int64_t>(ix, 0, n - 1);
  iy = std::clamp<std::int64_t>(iy, 0, n - 1);
  return *leaf_containing(CellId{max_level_, static_cast<std::uint32_t>(ix), static_cast<std::uint32_t>(iy)});
}

Box Mesh::box(const CellId& c) const {
  const double hx = std::ldexp(domain_.width(), -static_cast<int>(c.level));
  const double hy = std::ldexp(domain_.height(), -static_cast<int>(c.level));
  return Box{domain_.x_min + c.ix * hx, domain_.y_min + c.iy * hy, hx, hy};
}

double Mesh::min_diameter() const {
  return std::hypot(std::ldexp(domain_.width(), -static_cast<int>(max_level_)),
                    std::ldexp(domain_.height(), -static_cast<int>(max_level_)));
}

std::optional<CellId> Mesh::neighbor(const CellId& c, Direction d) const { return same_level_neighbor(c, d); }

Mesh refine(const Mesh& mesh, std::span<const CellId> marked) {
  if (marked.empty()) return mesh;
  KeySet leaves;
  leaves.reserve(mesh.size() * 2);
  for (const auto& c : mesh.leaves()) leaves.insert(c.key());

  std::vector<CellId> work;
  auto split = [&](const CellId& c) {
    if (c.level >= CellId::max_level) return;
    leaves.erase(c.key());
    for (int q = 0; q < 4; ++q) {
      leaves.insert(c.child(q).key());
      work.push_back(c.child(q));
    }
  };
  for (const auto& c : marked)
    if (leaves.contains(c.key())) split(c);

  // Closure: a new leaf at level l forces every edge neighbour region to be
  // covered by leaves of level >= l-1.
  while (!work.empty()) {
    const CellId c = work.back();
    work.pop_back();
    if (!leaves.contains(c.key())) continue;
    for (auto d : kDirections) {
      auto n = same_level_neighbor(c, d);
      if (!n) continue;
      auto host = ancestor_leaf(leaves, *n);
      if (host && host->level + 1 < c.level) {
        split(*host);
        work.push_back(c);
        break;
      }
    }
  }
  return Mesh(mesh.domain(), to_sorted(leaves));
}

Mesh coarsen(const Mesh& mesh, std::span<const CellId> marked, std::uint32_t min_level) {
  if (marked.empty()) return mesh;
  KeySet mark;
  for (const auto& c : marked)
    if (mesh.is_leaf(c) && c.level > min_level) mark.insert(c.key());

  std::vector<CellId> parents;
  {
    KeySet seen;
    for (auto k : mark) {
      const CellId p = CellId::from_key(k).parent();
      if (!seen.insert(p.key()).second) continue;
      bool all = true;
      for (int q = 0; q < 4 && all; ++q) all = mark.contains(p.child(q).key());
      if (all) parents.push_back(p);
    }
  }
  if (parents.empty()) return mesh;
  std::sort(parents.begin(), parents.end());

  KeySet leaves;
  for (const auto& c : mesh.leaves()) leaves.insert(c.key());
  auto merge = [&](const CellId& p) {
    for (int q = 0; q < 4; ++q) leaves.erase(p.child(q).key());
    leaves.insert(p.key());
  };
  auto unmerge = [&](const CellId& p) {
    leaves.erase(p.key());
    for (int q = 0; q < 4; ++q) leaves.insert(p.child(q).key());
  };
  for (const auto& p : parents) merge(p);

  // A merged cell P violates 1-irregularity when some neighbour region of P
  // is refined below P's children level along the shared edge.
  auto violates = [&](const CellId& p) {
    for (auto d : kDirections) {
      auto n = same_level_neighbor(p, d);
      if (!n) continue;
      if (ancestor_leaf(leaves, *n)) continue;  // neighbour no finer than P
      // children of n touching P
      int qa = 0, qb = 0;
      switch (d) {
        case Direction::West: qa = 1, qb = 3; break;
        case Direction::East: qa = 0, qb = 2; break;
        case Direction::South: qa = 2, qb = 3; break;
        case Direction::North: qa = 0, qb = 1; break;
      }
      for (int q : {qa, qb})
        if (!ancestor_leaf(leaves, n->child(q))) return true;
    }
    return false;
  };

  std::vector<CellId> active = parents;
  while (true) {
    std::vector<CellId> bad, keep;
    for (const auto& p : active) (violates(p) ? bad : keep).push_back(p);
    if (bad.empty()) break;
    for (const auto& p : bad) unmerge(p);
    active = std::move(keep);
  }
  return Mesh(mesh.domain(), to_sorted(leaves));
}

Mesh overlay_finest(const Mesh& a, const Mesh& b) {
  require_same_domain(a, b);
  std::vector<CellId> out;
  out.reserve(std::max(a.size(), b.size()));
  for (const auto& c : a.leaves())
    if (b.leaf_containing(c)) out.push_back(c);
  for (const auto& c : b.leaves())
    if (auto host = a.leaf_containing(c); host && host->level < c.level) out.push_back(c);
  return Mesh(a.domain(), std::move(out));
}

Mesh overlay_coarsest(const Mesh& a, const Mesh& b) {
  require_same_domain(a, b);
  std::vector<CellId> out;
  out.reserve(std::min(a.size(), b.size()));
  for (const auto& c : a.leaves()) out.push_back(b.leaf_containing(c).value_or(c));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return Mesh(a.domain(), std::move(out));
}

std::vector<Face> interior_faces(const Mesh& mesh) {
  std::vector<Face> faces;
  faces.reserve(mesh.size() * 2 + 4);
  for (const auto& c : mesh.leaves()) {
    const Box bc = mesh.box(c);
    for (auto d : kDirections) {
      auto n = same_level_neighbor(c, d);
      if (!n) continue;
      CellId other;
      if (mesh.is_leaf(*n)) {
        if (d == Direction::West || d == Direction::South) continue;  // emitted by the other side
        other = *n;
      } else if (auto host = mesh.leaf_containing(*n)) {
        other = *host;  // coarser neighbour: the fine side emits the segment
      } else {
        continue;  // refined neighbour emits
      }
      Face f;
      const bool c_is_minus = (d == Direction::East || d == Direction::North);
      f.minus = c_is_minus ? c : other;
      f.plus = c_is_minus ? other : c;
      f.vertical = (d == Direction::West || d == Direction::East);
      if (f.vertical) {
        f.fixed = (d == Direction::East) ? bc.x0 + bc.hx : bc.x0;
        f.lo = bc.y0;
        f.hi = bc.y0 + bc.hy;
      } else {
        f.fixed = (d == Direction::North) ? bc.y0 + bc.hy : bc.y0;
        f.lo = bc.x0;
        f.hi = bc.x0 + bc.hx;
      }
      faces.push_back(f);
    }
  }
  return faces;
}

bool is_one_irregular(const Mesh& mesh) {
  for (const auto& f : interior_faces(mesh)) {
    const auto la = static_cast<int>(f.minus.level), lb = static_cast<int>(f.plus.level);
    if (std::abs(la - lb) > 1) return false;
  }
  return true;
}

}  // namespace semiheat
