#include "semiheat/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "semiheat/errors.hpp"
#include "semiheat/kernels.hpp"

namespace semiheat {
namespace {

constexpr double kDropWeight = 1e-14;

std::uint64_t vertex_key(std::uint64_t X, std::uint64_t Y) { return (X << 29) | Y; }

std::uint64_t edge_key(std::uint32_t level, bool horizontal, std::uint64_t line, std::uint64_t pos) {
  return (static_cast<std::uint64_t>(level) << 58) | (static_cast<std::uint64_t>(horizontal) << 57) | (line << 28) |
         pos;
}

// Reference coordinates of `target` inside its containing leaf `leaf`.
struct SubcellMap {
  double offset_x, offset_y, scale;
};

SubcellMap subcell_map(const CellId& leaf, const CellId& target) {
  const std::uint32_t d = target.level - leaf.level;
  const double scale = std::ldexp(1.0, -static_cast<int>(d));
  return {static_cast<double>(target.ix - (leaf.ix << d)) * scale,
          static_cast<double>(target.iy - (leaf.iy << d)) * scale, scale};
}

void tensor_eval(const double* coef, std::size_t n1, const BasisTable& tx, const BasisTable& ty, double sx, double sy,
                 unsigned what, GridSamples& out) {
  const std::size_t nx = tx.n_points, ny = ty.n_points;
  const bool need_d = (what & (kGradient | kLaplacian)) != 0;
  const bool need_dd = (what & kLaplacian) != 0;
  thread_local std::vector<double> T, dT, ddT;
  T.assign(n1 * nx, 0.0);
  if (need_d) dT.assign(n1 * nx, 0.0);
  if (need_dd) ddT.assign(n1 * nx, 0.0);
  for (std::size_t j = 0; j < n1; ++j) {
    const double* cj = coef + n1 * j;
    for (std::size_t q = 0; q < nx; ++q) {
      const double* phi = &tx.value[q * n1];
      double s = 0.0, sd = 0.0, sdd = 0.0;
      for (std::size_t i = 0; i < n1; ++i) s += cj[i] * phi[i];
      T[j * nx + q] = s;
      if (need_d) {
        const double* dphi = &tx.first[q * n1];
        for (std::size_t i = 0; i < n1; ++i) sd += cj[i] * dphi[i];
        dT[j * nx + q] = sd;
      }
      if (need_dd) {
        const double* ddphi = &tx.second[q * n1];
        for (std::size_t i = 0; i < n1; ++i) sdd += cj[i] * ddphi[i];
        ddT[j * nx + q] = sdd;
      }
    }
  }
  out.nx = nx;
  out.ny = ny;
  const std::size_t n = nx * ny;
  if (what & kValue) out.v.assign(n, 0.0);
  if (what & kGradient) {
    out.dx.assign(n, 0.0);
    out.dy.assign(n, 0.0);
  }
  if (what & kLaplacian) out.lap.assign(n, 0.0);
  for (std::size_t qy = 0; qy < ny; ++qy) {
    for (std::size_t j = 0; j < n1; ++j) {
      const double psi = ty.v(qy, j);
      const double dpsi = ty.d(qy, j);
      const double ddpsi = ty.dd(qy, j);
      const double* Tj = &T[j * nx];
      double* row = nullptr;
      if (what & kValue) {
        row = &out.v[qy * nx];
        for (std::size_t q = 0; q < nx; ++q) row[q] += Tj[q] * psi;
      }
      if (what & kGradient) {
        const double* dTj = &dT[j * nx];
        double* rx = &out.dx[qy * nx];
        double* ry = &out.dy[qy * nx];
        for (std::size_t q = 0; q < nx; ++q) {
          rx[q] += sx * dTj[q] * psi;
          ry[q] += sy * Tj[q] * dpsi;
        }
      }
      if (what & kLaplacian) {
        const double* ddTj = &ddT[j * nx];
        double* rl = &out.lap[qy * nx];
        for (std::size_t q = 0; q < nx; ++q) rl[q] += sx * sx * ddTj[q] * psi + sy * sy * Tj[q] * ddpsi;
      }
    }
  }
}

}  // namespace

Space::Space(std::shared_ptr<const Mesh> mesh, int degree)
    : mesh_(std::move(mesh)),
      degree_(degree),
      basis_(degree >= 1 ? gauss_lobatto(static_cast<std::size_t>(degree) + 1).points : std::vector<double>{0.0}) {
  if (degree < 1) throw DomainError("polynomial degree must be at least 1");
  if (!mesh_) throw DomainError("space requires a mesh");
  sample_rule_ = gauss_lobatto(static_cast<std::size_t>(degree) + 3);
  quad_rule_ = gauss_legendre(static_cast<std::size_t>(degree) + 2);

  const Mesh& m = *mesh_;
  const std::size_t p = static_cast<std::size_t>(degree_);
  const std::size_t n1 = p + 1, nl = n1 * n1;
  const std::uint32_t L = m.max_level();
  const std::uint64_t top = std::uint64_t{1} << L;
  const auto g = basis_.nodes();

  std::unordered_map<std::uint64_t, std::uint32_t> vertex_id, edge_base;
  vertex_id.reserve(m.size() * 2);
  edge_base.reserve(m.size() * 3);
  std::vector<bool> on_boundary;
  cell_nodes_.resize(m.size() * nl);

  auto fresh = [&](Point pt, bool boundary) {
    const auto id = static_cast<std::uint32_t>(points_.size());
    points_.push_back(pt);
    on_boundary.push_back(boundary);
    return id;
  };

  const auto leaves = m.leaves();
  for (std::size_t ci = 0; ci < leaves.size(); ++ci) {
    const CellId& c = leaves[ci];
    const Box b = m.box(c);
    const std::uint32_t shift = L - c.level;
    const std::uint64_t n_at_level = std::uint64_t{1} << c.level;
    std::uint32_t* out = &cell_nodes_[ci * nl];
    for (std::size_t j = 0; j < n1; ++j) {
      for (std::size_t i = 0; i < n1; ++i) {
        const bool xe = (i == 0 || i == p), ye = (j == 0 || j == p);
        const Point pt{b.x0 + g[i] * b.hx, b.y0 + g[j] * b.hy};
        std::uint32_t id;
        if (xe && ye) {
          const std::uint64_t X = static_cast<std::uint64_t>(c.ix + (i == p)) << shift;
          const std::uint64_t Y = static_cast<std::uint64_t>(c.iy + (j == p)) << shift;
          auto [it, inserted] = vertex_id.try_emplace(vertex_key(X, Y), 0);
          if (inserted) it->second = fresh(pt, X == 0 || Y == 0 || X == top || Y == top);
          id = it->second;
        } else if (xe) {
          const std::uint64_t line = c.ix + (i == p);
          auto [it, inserted] = edge_base.try_emplace(edge_key(c.level, false, line, c.iy), 0);
          if (inserted) {
            const bool bd = line == 0 || line == n_at_level;
            it->second = static_cast<std::uint32_t>(points_.size());
            for (std::size_t k = 1; k < p; ++k) fresh({pt.x, b.y0 + g[k] * b.hy}, bd);
          }
          id = it->second + static_cast<std::uint32_t>(j - 1);
        } else if (ye) {
          const std::uint64_t line = c.iy + (j == p);
          auto [it, inserted] = edge_base.try_emplace(edge_key(c.level, true, line, c.ix), 0);
          if (inserted) {
            const bool bd = line == 0 || line == n_at_level;
            it->second = static_cast<std::uint32_t>(points_.size());
            for (std::size_t k = 1; k < p; ++k) fresh({b.x0 + g[k] * b.hx, pt.y}, bd);
          }
          id = it->second + static_cast<std::uint32_t>(i - 1);
        } else {
          id = fresh(pt, false);
        }
        out[i + n1 * j] = id;
      }
    }
  }

  const std::size_t n_nodes = points_.size();

  // Raw constraints from every face whose sides differ in level.
  std::vector<std::vector<ConstraintEntry>> raw(n_nodes);
  std::vector<bool> constrained(n_nodes, false);
  for (const Face& f : interior_faces(m)) {
    if (f.minus.level == f.plus.level) continue;
    const bool fine_is_minus = f.minus.level > f.plus.level;
    const CellId& fine = fine_is_minus ? f.minus : f.plus;
    const CellId& coarse = fine_is_minus ? f.plus : f.minus;
    const auto fn = cell_nodes(m.index_of(fine));
    const auto cn = cell_nodes(m.index_of(coarse));
    // Local index of the k-th node along the shared edge.
    std::size_t fine_fixed = fine_is_minus ? p : 0, coarse_fixed = fine_is_minus ? 0 : p;
    auto local = [&](std::size_t fixed, std::size_t k) { return f.vertical ? fixed + n1 * k : k + n1 * fixed; };
    const double offset = 0.5 * static_cast<double>(f.vertical ? (fine.iy & 1u) : (fine.ix & 1u));
    for (std::size_t k = 0; k < n1; ++k) {
      const std::uint32_t node = fn[local(fine_fixed, k)];
      if (constrained[node]) continue;
      bool is_coarse_node = false;
      for (std::size_t q = 0; q < n1 && !is_coarse_node; ++q) is_coarse_node = cn[local(coarse_fixed, q)] == node;
      if (is_coarse_node) continue;
      const double s = offset + 0.5 * g[k];
      for (std::size_t q = 0; q < n1; ++q) {
        const double w = basis_.value(q, s);
        if (std::fabs(w) > kDropWeight) raw[node].push_back({cn[local(coarse_fixed, q)], w});
      }
      constrained[node] = true;
    }
  }

  // Expand chains so that every master is unconstrained.
  std::vector<std::vector<ConstraintEntry>> resolved(n_nodes);
  std::vector<char> done(n_nodes, 0);
  std::function<const std::vector<ConstraintEntry>&(std::uint32_t)> resolve =
      [&](std::uint32_t node) -> const std::vector<ConstraintEntry>& {
    if (done[node]) return resolved[node];
    std::unordered_map<std::uint32_t, double> acc;
    for (const auto& e : raw[node]) {
      if (constrained[e.master]) {
        for (const auto& sub : resolve(e.master)) acc[sub.master] += e.weight * sub.weight;
      } else {
        acc[e.master] += e.weight;
      }
    }
    auto& r = resolved[node];
    for (const auto& [mst, w] : acc)
      if (std::fabs(w) > kDropWeight) r.push_back({mst, w});
    std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.master < b.master; });
    done[node] = 1;
    return r;
  };

  kinds_.resize(n_nodes);
  free_index_.assign(n_nodes, -1);
  unconstrained_index_.assign(n_nodes, -1);
  constraint_offset_.assign(n_nodes + 1, 0);
  for (std::uint32_t n = 0; n < n_nodes; ++n) {
    if (constrained[n]) {
      kinds_[n] = NodeKind::Constrained;
      const auto& r = resolve(n);
      constraint_entries_.insert(constraint_entries_.end(), r.begin(), r.end());
    } else {
      kinds_[n] = on_boundary[n] ? NodeKind::Boundary : NodeKind::Free;
      unconstrained_index_[n] = static_cast<std::int32_t>(n_unconstrained_++);
      if (!on_boundary[n]) free_index_[n] = static_cast<std::int32_t>(n_free_++);
    }
    constraint_offset_[n + 1] = static_cast<std::uint32_t>(constraint_entries_.size());
  }
}

std::span<const ConstraintEntry> Space::constraint(std::uint32_t node) const {
  return {constraint_entries_.data() + constraint_offset_[node], constraint_offset_[node + 1] - constraint_offset_[node]};
}

Field::Field(SpacePtr space) : space_(std::move(space)), values_(space_->n_nodes(), 0.0) {}

Field Field::interpolate_function(SpacePtr space, const PointFunction& g) {
  Field f(std::move(space));
  const Space& s = *f.space_;
  for (std::uint32_t n = 0; n < s.n_nodes(); ++n)
    if (s.kind(n) != NodeKind::Constrained) f.values_[n] = g(s.node_point(n));
  f.resolve_constraints();
  return f;
}

Field Field::from_free(SpacePtr space, std::span<const double> free_values) {
  Field f(std::move(space));
  const Space& s = *f.space_;
  if (free_values.size() != s.n_free()) throw DomainError("free vector size does not match the space");
  for (std::uint32_t n = 0; n < s.n_nodes(); ++n)
    if (auto i = s.free_index(n); i >= 0) f.values_[n] = free_values[static_cast<std::size_t>(i)];
  f.resolve_constraints();
  return f;
}

std::vector<double> Field::free_values() const {
  std::vector<double> out(space_->n_free());
  for (std::uint32_t n = 0; n < space_->n_nodes(); ++n)
    if (auto i = space_->free_index(n); i >= 0) out[static_cast<std::size_t>(i)] = values_[n];
  return out;
}

void Field::resolve_constraints() {
  const Space& s = *space_;
  for (std::uint32_t n = 0; n < s.n_nodes(); ++n) {
    if (s.kind(n) != NodeKind::Constrained) continue;
    double v = 0.0;
    for (const auto& e : s.constraint(n)) v += e.weight * values_[e.master];
    values_[n] = v;
  }
}

void Field::cell_coefficients(std::size_t cell_index, std::span<double> out) const {
  const auto nodes = space_->cell_nodes(cell_index);
  for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = values_[nodes[i]];
}

namespace {

struct PointEval {
  double v, dx, dy, lap;
};

PointEval eval_point(const Field& f, Point x) {
  const Space& s = f.space();
  const Mesh& m = s.mesh();
  if (!m.domain().contains(x, 1e-12 * (m.domain().width() + m.domain().height())))
    throw DomainError("evaluation point lies outside the domain");
  const CellId c = m.locate(x);
  const Box b = m.box(c);
  const double tx = std::clamp((x.x - b.x0) / b.hx, 0.0, 1.0);
  const double ty = std::clamp((x.y - b.y0) / b.hy, 0.0, 1.0);
  const std::size_t n1 = s.nodes_per_side();
  thread_local std::vector<double> vx, dx, ddx, vy, dy, ddy, coef;
  vx.resize(n1), dx.resize(n1), ddx.resize(n1), vy.resize(n1), dy.resize(n1), ddy.resize(n1), coef.resize(n1 * n1);
  s.basis().evaluate(tx, vx, dx, ddx);
  s.basis().evaluate(ty, vy, dy, ddy);
  f.cell_coefficients(m.index_of(c), coef);
  PointEval r{0, 0, 0, 0};
  for (std::size_t j = 0; j < n1; ++j) {
    double a = 0, ad = 0, add = 0;
    for (std::size_t i = 0; i < n1; ++i) {
      const double cij = coef[i + n1 * j];
      a += cij * vx[i];
      ad += cij * dx[i];
      add += cij * ddx[i];
    }
    r.v += a * vy[j];
    r.dx += ad * vy[j];
    r.dy += a * dy[j];
    r.lap += add * vy[j] / (b.hx * b.hx) + a * ddy[j] / (b.hy * b.hy);
  }
  r.dx /= b.hx;
  r.dy /= b.hy;
  return r;
}

}  // namespace

double Field::eval(Point x) const { return eval_point(*this, x).v; }

Point Field::gradient(Point x) const {
  const auto r = eval_point(*this, x);
  return {r.dx, r.dy};
}

double Field::laplacian(Point x) const { return eval_point(*this, x).lap; }

void Field::sample_grid(const CellId& target, std::span<const double> tx, std::span<const double> ty, unsigned what,
                        GridSamples& out) const {
  const Space& s = *space_;
  const Mesh& m = s.mesh();
  const auto li = m.leaf_index_containing(target);
  if (!li) throw DomainMismatchError("sample cell is coarser than the field's mesh");
  const CellId leaf = m.leaves()[*li];
  const SubcellMap map = subcell_map(leaf, target);
  thread_local std::vector<double> px, py, coef;
  px.resize(tx.size());
  py.resize(ty.size());
  for (std::size_t q = 0; q < tx.size(); ++q) px[q] = map.offset_x + map.scale * tx[q];
  for (std::size_t q = 0; q < ty.size(); ++q) py[q] = map.offset_y + map.scale * ty[q];
  const BasisTable tab_x = tabulate(s.basis(), px);
  const BasisTable tab_y = tabulate(s.basis(), py);
  coef.resize(s.n_local());
  cell_coefficients(*li, coef);
  const Box b = m.box(leaf);
  tensor_eval(coef.data(), s.nodes_per_side(), tab_x, tab_y, 1.0 / b.hx, 1.0 / b.hy, what, out);
}

double Field::linf_norm() const {
  const Space& s = *space_;
  const auto& pts = s.sample_rule().points;
  GridSamples g;
  double mx = 0.0;
  for (const auto& c : s.mesh().leaves()) {
    sample_grid(c, pts, pts, kValue, g);
    mx = std::max(mx, kernels::max_abs(g.v));
  }
  return mx;
}

Field& Field::operator+=(const Field& other) {
  if (space_ != other.space_) throw DomainMismatchError("fields live on different spaces");
  kernels::axpy(1.0, other.values_, values_);
  return *this;
}

Field& Field::operator*=(double s) {
  for (auto& v : values_) v *= s;
  return *this;
}

Field interpolate(const Field& source, SpacePtr target) {
  if (!(source.space().mesh().domain() == target->mesh().domain()))
    throw DomainMismatchError("interpolation between different rectangles");
  if (target == source.space_ptr()) return source;
  Field out(std::move(target));
  const Space& s = *out.space_;
  for (std::uint32_t n = 0; n < s.n_nodes(); ++n)
    if (s.kind(n) != NodeKind::Constrained) out.values_[n] = source.eval(s.node_point(n));
  out.resolve_constraints();
  return out;
}

double cell_linf(const PointFunction& g, const Box& box, const Rule1D& rule) {
  double mx = 0.0;
  for (double ty : rule.points)
    for (double tx : rule.points) mx = std::max(mx, std::fabs(g({box.x0 + tx * box.hx, box.y0 + ty * box.hy})));
  return mx;
}

std::vector<double> jump_linf_map(const Mesh& mesh, std::span<const Field* const> fields,
                                  std::span<const double> coeffs, const Rule1D& rule) {
  if (fields.size() != coeffs.size()) throw DomainError("one coefficient per field required");
  std::vector<double> out(mesh.size(), 0.0);
  const std::size_t nq = rule.size();
  std::vector<double> jump(nq), ts(nq);
  GridSamples gs;
  const double zero = 0.0, one = 1.0;
  for (const Face& f : interior_faces(mesh)) {
    std::fill(jump.begin(), jump.end(), 0.0);
    for (int side = 0; side < 2; ++side) {
      const CellId& c = side == 0 ? f.minus : f.plus;
      const double sign = side == 0 ? -1.0 : 1.0;
      const Box b = mesh.box(c);
      const double lo = f.vertical ? b.y0 : b.x0;
      const double h = f.vertical ? b.hy : b.hx;
      for (std::size_t q = 0; q < nq; ++q) ts[q] = (f.lo + (f.hi - f.lo) * rule.points[q] - lo) / h;
      const std::span<const double> fixed(side == 0 ? &one : &zero, 1);
      for (std::size_t k = 0; k < fields.size(); ++k) {
        if (coeffs[k] == 0.0) continue;
        if (f.vertical) {
          fields[k]->sample_grid(c, fixed, ts, kGradient, gs);
          for (std::size_t q = 0; q < nq; ++q) jump[q] += sign * coeffs[k] * gs.dx[q];
        } else {
          fields[k]->sample_grid(c, ts, fixed, kGradient, gs);
          for (std::size_t q = 0; q < nq; ++q) jump[q] += sign * coeffs[k] * gs.dy[q];
        }
      }
    }
    const double mx = kernels::max_abs(jump);
    auto& a = out[mesh.index_of(f.minus)];
    auto& b = out[mesh.index_of(f.plus)];
    a = std::max(a, mx);
    b = std::max(b, mx);
  }
  return out;
}

double jump_linf(const Field& field, const CellId& cell) {
  const Field* fs[1] = {&field};
  const double c[1] = {1.0};
  const Mesh& m = field.space().mesh();
  return jump_linf_map(m, fs, c, field.space().sample_rule())[m.index_of(cell)];
}

}  // namespace semiheat
