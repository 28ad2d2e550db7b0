#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace semiheat {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Rectangle {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;

  Rectangle() = default;
  Rectangle(double x0, double x1, double y0, double y1);

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool contains(Point p, double slack = 0.0) const;
  bool operator==(const Rectangle&) const = default;
};

struct Box {
  double x0, y0, hx, hy;
  double diameter() const;
  double area() const { return hx * hy; }
};

// A quadtree node, addressed by its level and integer position on the
// 2^level x 2^level lattice over the root rectangle. Children are the four
// congruent quadrants numbered SW, SE, NW, NE.
struct CellId {
  std::uint32_t level = 0;
  std::uint32_t ix = 0;
  std::uint32_t iy = 0;

  static constexpr std::uint32_t max_level = 28;

  CellId parent() const { return {level - 1, ix >> 1, iy >> 1}; }
  CellId child(int quadrant) const {
    return {level + 1, 2 * ix + static_cast<std::uint32_t>(quadrant & 1),
            2 * iy + static_cast<std::uint32_t>(quadrant >> 1)};
  }
  // True if `other` equals this cell or lies inside it.
  bool contains(const CellId& other) const;
  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(level) << 58) | (static_cast<std::uint64_t>(ix) << 29) | iy;
  }
  static CellId from_key(std::uint64_t k) {
    return {static_cast<std::uint32_t>(k >> 58), static_cast<std::uint32_t>((k >> 29) & 0x1FFFFFFFu),
            static_cast<std::uint32_t>(k & 0x1FFFFFFFu)};
  }

  auto operator<=>(const CellId&) const = default;
};

std::ostream& operator<<(std::ostream& os, const CellId& c);

enum class Direction { West = 0, East = 1, South = 2, North = 3 };

// An interior face segment. `minus` lies west (resp. south) of the segment,
// `plus` east (resp. north); the unit normal points from minus to plus. When
// the two cells differ in level the segment is the edge of the finer one.
struct Face {
  CellId minus, plus;
  bool vertical = true;  // normal along +x when true, along +y otherwise
  double fixed = 0.0;    // x of a vertical face, y of a horizontal one
  double lo = 0.0, hi = 0.0;
};

// Leaf set of a quadtree over a rectangle. Immutable after construction;
// all modifying operations return a new mesh.
class Mesh {
 public:
  explicit Mesh(Rectangle domain);
  Mesh(Rectangle domain, std::vector<CellId> leaves);

  static Mesh uniform(Rectangle domain, std::uint32_t level);

  const Rectangle& domain() const { return domain_; }
  std::span<const CellId> leaves() const { return leaves_; }
  std::size_t size() const { return leaves_.size(); }
  std::uint64_t generation() const { return generation_; }
  std::uint32_t max_level() const { return max_level_; }

  bool is_leaf(const CellId& c) const { return index_.contains(c.key()); }
  // Position of a leaf in leaves(); the cell must be a leaf.
  std::size_t index_of(const CellId& c) const;
  // The leaf equal to or containing `c`, or nullopt if `c` is refined.
  std::optional<CellId> leaf_containing(const CellId& c) const;
  std::optional<std::size_t> leaf_index_containing(const CellId& c) const;
  // Leaf containing a point of the closed domain (ties go to the cell with the larger index).
  CellId locate(Point p) const;

  Box box(const CellId& c) const;
  double diameter(const CellId& c) const { return box(c).diameter(); }
  double min_diameter() const;
  // Same-level neighbour across the given side, or nullopt on the boundary.
  std::optional<CellId> neighbor(const CellId& c, Direction d) const;

  bool operator==(const Mesh& other) const {
    return domain_ == other.domain_ && leaves_ == other.leaves_;
  }

 private:
  Rectangle domain_;
  std::vector<CellId> leaves_;
  std::unordered_map<std::uint64_t, std::uint32_t> index_;
  std::uint32_t max_level_ = 0;
  std::uint64_t generation_ = 0;
};

Mesh refine(const Mesh& mesh, std::span<const CellId> marked);
// Merges sibling quadruples whose four members are all marked leaves, as long
// as the merged cell stays at or above min_level and the mesh stays 1-irregular.
Mesh coarsen(const Mesh& mesh, std::span<const CellId> marked, std::uint32_t min_level = 0);
// Coarsest common refinement.
Mesh overlay_finest(const Mesh& a, const Mesh& b);
// Finest common coarsening.
Mesh overlay_coarsest(const Mesh& a, const Mesh& b);
inline double min_diameter(const Mesh& m) { return m.min_diameter(); }

std::vector<Face> interior_faces(const Mesh& mesh);
// Edge-adjacent leaves differ by at most one level.
bool is_one_irregular(const Mesh& mesh);

}  // namespace semiheat
