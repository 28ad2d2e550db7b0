#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "semiheat/fespace.hpp"

namespace semiheat {

struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::int32_t> row_ptr{0};
  std::vector<std::int32_t> cols;
  std::vector<double> vals;

  std::size_t nnz() const { return vals.size(); }
  double at(std::size_t i, std::size_t j) const;
  void multiply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;
};

// alpha * A + beta * B for matrices with identical sparsity patterns.
CsrMatrix combine(double alpha, const CsrMatrix& A, double beta, const CsrMatrix& B);

struct SpaceMatrices {
  CsrMatrix mass;       // over free nodes
  CsrMatrix stiffness;  // unit coefficient, over free nodes
};

// Systems over the free nodes, hanging-node constraints condensed and the
// boundary rows removed.
CsrMatrix assemble_mass(const Space& space);
CsrMatrix assemble_stiffness(const Space& space, double a);
// Mass matrix over all unconstrained nodes, boundary nodes included.
CsrMatrix assemble_mass_unconstrained(const Space& space);

// Fills out[qx + nx*qy] with the integrand at the tensor points (tx, ty) given
// in reference coordinates of `cell`.
using GridIntegrand = std::function<void(const CellId& cell, const Box& box, std::span<const double> tx,
                                         std::span<const double> ty, std::span<double> out)>;

// b_i = (g, phi_i) over the free nodes. The integrand is sampled at the Gauss
// points of every leaf of `quad_mesh`, which must refine the space's mesh.
std::vector<double> assemble_load(const Space& space, const Mesh& quad_mesh, const GridIntegrand& g);

struct SolveStats {
  int iterations = 0;
  double residual = 0.0;  // final ||Ax - b|| / ||b||
};

// Jacobi-preconditioned conjugate gradients to ||Ax - b|| <= rtol ||b||,
// at most 10 n iterations. Throws SolverError on failure.
std::vector<double> solve_spd(const CsrMatrix& A, std::span<const double> b, double rtol = 1e-10,
                              std::span<const double> x0 = {}, SolveStats* stats = nullptr);

}  // namespace semiheat
