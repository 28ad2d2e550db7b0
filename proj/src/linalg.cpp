#include "semiheat/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "semiheat/errors.hpp"
#include "semiheat/kernels.hpp"

namespace semiheat {
namespace {

struct Condensed {
  std::int32_t index;
  double weight;
};

enum class Numbering { Free, Unconstrained };

std::int32_t number_of(const Space& s, std::uint32_t node, Numbering num) {
  return num == Numbering::Free ? s.free_index(node) : s.unconstrained_index(node);
}

// Expansion of a node into the chosen numbering (empty for Dirichlet nodes).
void condense_node(const Space& s, std::uint32_t node, Numbering num, std::vector<Condensed>& out) {
  out.clear();
  if (s.kind(node) == NodeKind::Constrained) {
    for (const auto& e : s.constraint(node))
      if (auto i = number_of(s, e.master, num); i >= 0) out.push_back({i, e.weight});
  } else if (auto i = number_of(s, node, num); i >= 0) {
    out.push_back({i, 1.0});
  }
}

struct Reference1D {
  std::vector<double> mass, stiff;  // n1 x n1
};

Reference1D reference_matrices(const Space& s) {
  const std::size_t n1 = s.nodes_per_side();
  const Rule1D& q = s.quad_rule();
  const BasisTable t = tabulate(s.basis(), q.points);
  Reference1D r;
  r.mass.assign(n1 * n1, 0.0);
  r.stiff.assign(n1 * n1, 0.0);
  for (std::size_t k = 0; k < q.size(); ++k)
    for (std::size_t i = 0; i < n1; ++i)
      for (std::size_t j = 0; j < n1; ++j) {
        r.mass[i * n1 + j] += q.weights[k] * t.v(k, i) * t.v(k, j);
        r.stiff[i * n1 + j] += q.weights[k] * t.d(k, i) * t.d(k, j);
      }
  return r;
}

struct Assembled {
  CsrMatrix mass, stiffness;
};

Assembled assemble_pair(const Space& s, Numbering num) {
  const Mesh& m = s.mesh();
  const std::size_t n1 = s.nodes_per_side(), nl = s.n_local();
  const std::size_t n = num == Numbering::Free ? s.n_free() : s.n_unconstrained();
  const Reference1D ref = reference_matrices(s);

  // Per cell: the sorted set of unknowns touched, and each local node's expansion.
  std::vector<std::vector<Condensed>> local(nl);
  std::vector<std::int32_t> touched;
  auto gather = [&](std::size_t ci) {
    const auto nodes = s.cell_nodes(ci);
    touched.clear();
    for (std::size_t a = 0; a < nl; ++a) {
      condense_node(s, nodes[a], num, local[a]);
      for (const auto& c : local[a]) touched.push_back(c.index);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  };

  std::vector<std::vector<std::int32_t>> rows(n);
  for (std::size_t ci = 0; ci < m.size(); ++ci) {
    gather(ci);
    for (auto r : touched) rows[static_cast<std::size_t>(r)].insert(rows[static_cast<std::size_t>(r)].end(),
                                                                     touched.begin(), touched.end());
  }
  Assembled out;
  CsrMatrix& M = out.mass;
  M.n = n;
  M.row_ptr.assign(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) {
    auto& row = rows[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    M.row_ptr[r + 1] = M.row_ptr[r] + static_cast<std::int32_t>(row.size());
  }
  M.cols.reserve(static_cast<std::size_t>(M.row_ptr[n]));
  for (auto& row : rows) {
    M.cols.insert(M.cols.end(), row.begin(), row.end());
    std::vector<std::int32_t>().swap(row);
  }
  M.vals.assign(M.cols.size(), 0.0);
  CsrMatrix& S = out.stiffness;
  S = M;

  auto locate = [&](std::int32_t r, std::int32_t c) {
    const auto b = M.cols.begin() + M.row_ptr[static_cast<std::size_t>(r)];
    const auto e = M.cols.begin() + M.row_ptr[static_cast<std::size_t>(r) + 1];
    return static_cast<std::size_t>(std::lower_bound(b, e, c) - M.cols.begin());
  };

  for (std::size_t ci = 0; ci < m.size(); ++ci) {
    gather(ci);
    if (touched.empty()) continue;
    const Box b = m.box(m.leaves()[ci]);
    const double sm = b.hx * b.hy, sx = b.hy / b.hx, sy = b.hx / b.hy;
    for (std::size_t ja = 0; ja < n1; ++ja)
      for (std::size_t ia = 0; ia < n1; ++ia) {
        const auto& la = local[ia + n1 * ja];
        if (la.empty()) continue;
        for (std::size_t jb = 0; jb < n1; ++jb)
          for (std::size_t ib = 0; ib < n1; ++ib) {
            const auto& lb = local[ib + n1 * jb];
            if (lb.empty()) continue;
            const double mx = ref.mass[ia * n1 + ib], my = ref.mass[ja * n1 + jb];
            const double mv = sm * mx * my;
            const double sv = sx * ref.stiff[ia * n1 + ib] * my + sy * mx * ref.stiff[ja * n1 + jb];
            for (const auto& ca : la)
              for (const auto& cb : lb) {
                const std::size_t pos = locate(ca.index, cb.index);
                const double w = ca.weight * cb.weight;
                M.vals[pos] += w * mv;
                S.vals[pos] += w * sv;
              }
          }
      }
  }
  return out;
}

}  // namespace

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto b = cols.begin() + row_ptr[i], e = cols.begin() + row_ptr[i + 1];
  const auto it = std::lower_bound(b, e, static_cast<std::int32_t>(j));
  return (it != e && *it == static_cast<std::int32_t>(j)) ? vals[static_cast<std::size_t>(it - cols.begin())] : 0.0;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  kernels::active().csr_spmv(n, row_ptr.data(), cols.data(), vals.data(), x.data(), y.data());
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix combine(double alpha, const CsrMatrix& A, double beta, const CsrMatrix& B) {
  if (A.n != B.n || A.cols != B.cols || A.row_ptr != B.row_ptr)
    throw DomainMismatchError("combine requires matrices with identical sparsity");
  CsrMatrix C = A;
  for (std::size_t i = 0; i < C.vals.size(); ++i) C.vals[i] = alpha * A.vals[i] + beta * B.vals[i];
  return C;
}

const SpaceMatrices& Space::matrices() const {
  std::call_once(matrices_once_, [this] {
    auto a = assemble_pair(*this, Numbering::Free);
    matrices_ = std::make_shared<const SpaceMatrices>(SpaceMatrices{std::move(a.mass), std::move(a.stiffness)});
  });
  return *matrices_;
}

CsrMatrix assemble_mass(const Space& space) { return space.matrices().mass; }

CsrMatrix assemble_stiffness(const Space& space, double a) {
  if (!(a > 0.0)) throw DomainError("diffusion coefficient must be positive");
  CsrMatrix S = space.matrices().stiffness;
  for (auto& v : S.vals) v *= a;
  return S;
}

CsrMatrix assemble_mass_unconstrained(const Space& space) {
  return assemble_pair(space, Numbering::Unconstrained).mass;
}

std::vector<double> assemble_load(const Space& s, const Mesh& quad_mesh, const GridIntegrand& g) {
  const Mesh& m = s.mesh();
  if (!(m.domain() == quad_mesh.domain())) throw DomainMismatchError("quadrature mesh on a different rectangle");
  const std::size_t n1 = s.nodes_per_side(), nl = s.n_local();
  const Rule1D& q = s.quad_rule();
  const std::size_t nq = q.size();
  const BasisTable same = tabulate(s.basis(), q.points);

  std::vector<double> b(s.n_free(), 0.0);
  std::vector<double> vals(nq * nq), partial(n1 * nq), px(nq), py(nq);
  std::vector<Condensed> cond;
  std::vector<double> local(nl);
  for (const CellId& c : quad_mesh.leaves()) {
    const auto li = m.leaf_index_containing(c);
    if (!li) throw DomainMismatchError("quadrature mesh is coarser than the space's mesh");
    const CellId leaf = m.leaves()[*li];
    const Box box = quad_mesh.box(c);
    g(c, box, q.points, q.points, vals);

    BasisTable tx_local, ty_local;
    const BasisTable* tx = &same;
    const BasisTable* ty = &same;
    if (leaf.level != c.level) {
      const std::uint32_t d = c.level - leaf.level;
      const double scale = std::ldexp(1.0, -static_cast<int>(d));
      const double ox = static_cast<double>(c.ix - (leaf.ix << d)) * scale;
      const double oy = static_cast<double>(c.iy - (leaf.iy << d)) * scale;
      for (std::size_t k = 0; k < nq; ++k) {
        px[k] = ox + scale * q.points[k];
        py[k] = oy + scale * q.points[k];
      }
      tx_local = tabulate(s.basis(), px);
      ty_local = tabulate(s.basis(), py);
      tx = &tx_local;
      ty = &ty_local;
    }
    // partial[i, qy] = sum_qx w_qx phi_i(qx) g(qx, qy)
    std::fill(partial.begin(), partial.end(), 0.0);
    for (std::size_t qy = 0; qy < nq; ++qy)
      for (std::size_t qx = 0; qx < nq; ++qx) {
        const double wg = q.weights[qx] * vals[qx + nq * qy];
        for (std::size_t i = 0; i < n1; ++i) partial[i * nq + qy] += wg * tx->v(qx, i);
      }
    const double area = box.area();
    for (std::size_t j = 0; j < n1; ++j)
      for (std::size_t i = 0; i < n1; ++i) {
        double acc = 0.0;
        for (std::size_t qy = 0; qy < nq; ++qy) acc += q.weights[qy] * ty->v(qy, j) * partial[i * nq + qy];
        local[i + n1 * j] = area * acc;
      }
    const auto nodes = s.cell_nodes(*li);
    for (std::size_t a = 0; a < nl; ++a) {
      condense_node(s, nodes[a], Numbering::Free, cond);
      for (const auto& cd : cond) b[static_cast<std::size_t>(cd.index)] += cd.weight * local[a];
    }
  }
  return b;
}

std::vector<double> solve_spd(const CsrMatrix& A, std::span<const double> b, double rtol, std::span<const double> x0,
                              SolveStats* stats) {
  const std::size_t n = A.n;
  if (b.size() != n) throw DomainError("right-hand side size does not match the matrix");
  std::vector<double> x(n, 0.0);
  if (n == 0) return x;
  if (x0.size() == n) std::copy(x0.begin(), x0.end(), x.begin());
  const double bnorm = std::sqrt(kernels::dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (stats) *stats = {0, 0.0};
    return x;
  }
  std::vector<double> inv_diag = A.diagonal();
  for (auto& d : inv_diag) {
    if (!(d > 0.0)) throw SolverError("matrix has a non-positive diagonal entry", NAN, 0);
    d = 1.0 / d;
  }
  std::vector<double> r(n), z(n), p(n), Ap(n);
  const int max_it = static_cast<int>(10 * n);
  int it = 0;
  double rnorm = 0.0;
  // The recursive residual can drift from the true one; restart from the
  // current iterate until the true residual meets the tolerance.
  for (int restart = 0;; ++restart) {
    A.multiply(x, Ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - Ap[i];
    rnorm = std::sqrt(kernels::dot(r, r));
    if (rnorm <= rtol * bnorm) break;
    if (restart >= 3) throw SolverError("conjugate gradients stagnated", rnorm / bnorm, it);
    kernels::hadamard(inv_diag, r, z);
    p = z;
    double rz = kernels::dot(r, z);
    while (rnorm > rtol * bnorm) {
      if (it >= max_it) throw SolverError("conjugate gradients did not converge", rnorm / bnorm, it);
      A.multiply(p, Ap);
      const double pAp = kernels::dot(p, Ap);
      if (!(pAp > 0.0)) throw SolverError("matrix is not positive definite", rnorm / bnorm, it);
      const double alpha = rz / pAp;
      kernels::axpy(alpha, p, x);
      kernels::axpy(-alpha, Ap, r);
      kernels::hadamard(inv_diag, r, z);
      const double rz_new = kernels::dot(r, z);
      kernels::xpay(z, rz_new / rz, p);
      rz = rz_new;
      rnorm = std::sqrt(kernels::dot(r, r));
      ++it;
    }
  }
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

}  // namespace semiheat
