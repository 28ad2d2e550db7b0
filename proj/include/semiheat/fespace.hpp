#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "semiheat/mesh.hpp"
#include "semiheat/quadrature.hpp"

namespace semiheat {

struct SpaceMatrices;

enum class NodeKind : std::uint8_t { Free, Boundary, Constrained };

struct ConstraintEntry {
  std::uint32_t master;
  double weight;
};

// Continuous tensor-product Lagrange space of degree p on a quadtree mesh.
// Local nodes are the Gauss-Lobatto points of each cell, numbered
// i + (p+1) j with i running along x. Nodes on the interior of a coarse edge
// next to a finer cell (hanging nodes) are constrained to the coarse trace;
// the constraint masters are always unconstrained nodes.
class Space {
 public:
  Space(std::shared_ptr<const Mesh> mesh, int degree);

  static std::shared_ptr<const Space> make(std::shared_ptr<const Mesh> mesh, int degree) {
    return std::make_shared<const Space>(std::move(mesh), degree);
  }

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  std::size_t nodes_per_side() const { return static_cast<std::size_t>(degree_) + 1; }
  std::size_t n_local() const { return nodes_per_side() * nodes_per_side(); }

  std::size_t n_nodes() const { return kinds_.size(); }
  std::size_t n_free() const { return n_free_; }
  std::size_t n_unconstrained() const { return n_unconstrained_; }

  // Global node ids of leaf `cell_index` in local order.
  std::span<const std::uint32_t> cell_nodes(std::size_t cell_index) const {
    return {cell_nodes_.data() + cell_index * n_local(), n_local()};
  }
  NodeKind kind(std::uint32_t node) const { return kinds_[node]; }
  Point node_point(std::uint32_t node) const { return points_[node]; }
  // -1 unless the node is free.
  std::int32_t free_index(std::uint32_t node) const { return free_index_[node]; }
  // Index among all unconstrained nodes (free and boundary), -1 for constrained.
  std::int32_t unconstrained_index(std::uint32_t node) const { return unconstrained_index_[node]; }
  std::span<const ConstraintEntry> constraint(std::uint32_t node) const;

  const LagrangeBasis1D& basis() const { return basis_; }
  // Gauss-Lobatto sample points used for L-infinity norms (p+3 per direction).
  const Rule1D& sample_rule() const { return sample_rule_; }
  // Gauss quadrature (p+2 per direction).
  const Rule1D& quad_rule() const { return quad_rule_; }

  // Mass and unit-coefficient stiffness matrices, built on first use.
  const SpaceMatrices& matrices() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  int degree_;
  LagrangeBasis1D basis_;
  Rule1D sample_rule_, quad_rule_;
  std::vector<std::uint32_t> cell_nodes_;
  std::vector<NodeKind> kinds_;
  std::vector<Point> points_;
  std::vector<std::int32_t> free_index_, unconstrained_index_;
  std::vector<std::uint32_t> constraint_offset_;  // CSR over nodes
  std::vector<ConstraintEntry> constraint_entries_;
  std::size_t n_free_ = 0, n_unconstrained_ = 0;

  mutable std::once_flag matrices_once_;
  mutable std::shared_ptr<const SpaceMatrices> matrices_;
};

using SpacePtr = std::shared_ptr<const Space>;

enum SampleWhat : unsigned { kValue = 1, kGradient = 2, kLaplacian = 4 };

// Field samples on a tensor grid, entry [qx + nx * qy].
struct GridSamples {
  std::size_t nx = 0, ny = 0;
  std::vector<double> v, dx, dy, lap;
};

using PointFunction = std::function<double(Point)>;

// A finite-element function: one coefficient per global node, with the
// constrained entries kept consistent with their masters.
class Field {
 public:
  Field() = default;
  explicit Field(SpacePtr space);  // zero field

  static Field interpolate_function(SpacePtr space, const PointFunction& g);
  // Free coefficients given; boundary nodes set to zero.
  static Field from_free(SpacePtr space, std::span<const double> free_values);

  const Space& space() const { return *space_; }
  const SpacePtr& space_ptr() const { return space_; }
  std::span<const double> values() const { return values_; }
  std::vector<double> free_values() const;

  double eval(Point x) const;
  Point gradient(Point x) const;
  double laplacian(Point x) const;

  // Samples on the tensor grid tx x ty given in reference coordinates of
  // `target`, which must equal or lie inside a leaf of this field's mesh.
  void sample_grid(const CellId& target, std::span<const double> tx, std::span<const double> ty, unsigned what,
                   GridSamples& out) const;

  // Coefficients of one leaf in local order.
  void cell_coefficients(std::size_t cell_index, std::span<double> out) const;

  // Sets constrained entries from their masters.
  void resolve_constraints();

  double linf_norm() const;

  Field& operator+=(const Field& other);
  Field& operator*=(double s);

 private:
  SpacePtr space_;
  std::vector<double> values_;
  friend Field interpolate(const Field&, SpacePtr);
};

Field interpolate(const Field& source, SpacePtr target);

// Maximum of |g| over the Gauss-Lobatto sample grid of a box.
double cell_linf(const PointFunction& g, const Box& box, const Rule1D& rule);

// Largest |[grad g] . n| over the interior faces of every leaf of `mesh`, with
// g = sum coeffs[i] * fields[i]. The mesh must be at least as fine as every
// field's mesh. Boundary edges are ignored.
std::vector<double> jump_linf_map(const Mesh& mesh, std::span<const Field* const> fields,
                                  std::span<const double> coeffs, const Rule1D& rule);
double jump_linf(const Field& field, const CellId& cell);

}  // namespace semiheat
