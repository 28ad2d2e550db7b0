#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "semiheat/fespace.hpp"
#include "semiheat/linalg.hpp"
#include "semiheat/problems.hpp"

namespace semiheat {

// U0 with (grad U0, grad V) = (-lap u0, V) for all V in the space.
Field project_initial(const ProblemSpec& problem, SpacePtr space, SolveStats* stats = nullptr);

// One implicit-explicit step:
//   (U - U_prev)/k + a(grad U, grad V) = (f(t_prev, U_prev), V)   for all V on `next`.
// The right-hand side is integrated on the common refinement of both meshes
// with U_prev evaluated on its own mesh.
Field imex_step(const Field& U_prev, SpacePtr next, double k, double t_prev, const ProblemSpec& problem,
                SolveStats* stats = nullptr);

// One interval I_m = (t_{m-1}, t_m). For m >= 2 the slab also carries U^{m-2}
// and t_{m-2}, which define the discrete Laplacian at its left end.
struct TimeSlab {
  std::size_t m = 1;
  double t_prev = 0.0, t_next = 0.0;
  Field U_prev, U_next;
  std::optional<Field> U_prev2;
  double t_prev2 = 0.0;

  double k() const { return t_next - t_prev; }
};

enum class SlabEnd { Prev, Next };

// A^{m-1} (Prev) or A^m (Next) as a pointwise function:
//   A^j = f(t_{j-1}, U^{j-1}) - (U^j - U^{j-1}) / k_j,   A^0 = -a lap u0.
std::function<double(Point)> discrete_laplacian(const TimeSlab& slab, const ProblemSpec& problem, SlabEnd which);

// U(t) = l_{m-1}(t) U^{m-1} + l_m(t) U^m on the slab; RangeError outside it.
std::function<double(Point)> interpolant_at(const TimeSlab& slab, double t);

// U^0, ..., U^M with their times.
class Trajectory {
 public:
  explicit Trajectory(Field U0, double t0 = 0.0);
  void push(Field U, double t);

  std::size_t steps() const { return fields_.size() - 1; }
  const Field& field(std::size_t m) const { return fields_.at(m); }
  double time(std::size_t m) const { return times_.at(m); }
  TimeSlab slab(std::size_t m) const;

  // Piecewise-linear interpolant; RangeError for t outside [t_0, t_M].
  std::function<double(Point)> at(double t) const;

 private:
  std::vector<Field> fields_;
  std::vector<double> times_;
};

}  // namespace semiheat
