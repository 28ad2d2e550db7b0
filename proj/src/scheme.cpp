#include "semiheat/scheme.hpp"

#include <algorithm>
#include <cmath>

#include "semiheat/errors.hpp"

namespace semiheat {

Field project_initial(const ProblemSpec& problem, SpacePtr space, SolveStats* stats) {
  const Space& s = *space;
  const auto& lap = problem.lap_u0;
  const auto rhs = assemble_load(s, s.mesh(), [&](const CellId&, const Box& b, std::span<const double> tx,
                                                  std::span<const double> ty, std::span<double> out) {
    for (std::size_t j = 0; j < ty.size(); ++j)
      for (std::size_t i = 0; i < tx.size(); ++i)
        out[i + tx.size() * j] = -lap({b.x0 + tx[i] * b.hx, b.y0 + ty[j] * b.hy});
  });
  const auto x = solve_spd(s.matrices().stiffness, rhs, 1e-10, {}, stats);
  return Field::from_free(std::move(space), x);
}

Field imex_step(const Field& U_prev, SpacePtr next, double k, double t_prev, const ProblemSpec& problem,
                SolveStats* stats) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  const Space& s = *next;
  const Mesh& prev_mesh = U_prev.space().mesh();
  const bool same_mesh = prev_mesh == s.mesh();
  const Mesh quad_mesh = same_mesh ? s.mesh() : overlay_finest(prev_mesh, s.mesh());
  GridSamples gs;
  const auto rhs = assemble_load(s, quad_mesh, [&](const CellId& c, const Box& b, std::span<const double> tx,
                                                   std::span<const double> ty, std::span<double> out) {
    U_prev.sample_grid(c, tx, ty, kValue, gs);
    for (std::size_t j = 0; j < ty.size(); ++j)
      for (std::size_t i = 0; i < tx.size(); ++i) {
        const std::size_t q = i + tx.size() * j;
        const double u = gs.v[q];
        out[q] = u / k + problem.f({b.x0 + tx[i] * b.hx, b.y0 + ty[j] * b.hy}, t_prev, u);
      }
  });
  const SpaceMatrices& mats = s.matrices();
  const CsrMatrix A = combine(1.0 / k, mats.mass, problem.a, mats.stiffness);
  std::vector<double> guess;
  if (same_mesh && U_prev.space().degree() == s.degree()) guess = U_prev.free_values();
  const auto x = solve_spd(A, rhs, 1e-10, guess, stats);
  return Field::from_free(std::move(next), x);
}

std::function<double(Point)> discrete_laplacian(const TimeSlab& slab, const ProblemSpec& problem, SlabEnd which) {
  if (which == SlabEnd::Prev && !slab.U_prev2) {
    const double a = problem.a;
    auto lap = problem.lap_u0;
    return [a, lap](Point x) { return -a * lap(x); };
  }
  const Field src = which == SlabEnd::Next ? slab.U_prev : *slab.U_prev2;
  const Field dst = which == SlabEnd::Next ? slab.U_next : slab.U_prev;
  const double t_src = which == SlabEnd::Next ? slab.t_prev : slab.t_prev2;
  const double k = which == SlabEnd::Next ? slab.k() : slab.t_prev - slab.t_prev2;
  auto f = problem.f;
  return [src, dst, t_src, k, f](Point x) {
    const double us = src.eval(x);
    return f(x, t_src, us) - (dst.eval(x) - us) / k;
  };
}

std::function<double(Point)> interpolant_at(const TimeSlab& slab, double t) {
  const double tol = 1e-14 * std::max(1.0, std::fabs(slab.t_next));
  if (t < slab.t_prev - tol || t > slab.t_next + tol) throw RangeError("time outside the slab");
  const double lm = std::clamp((t - slab.t_prev) / slab.k(), 0.0, 1.0);
  const Field a = slab.U_prev, b = slab.U_next;
  if (lm == 1.0) return [b](Point x) { return b.eval(x); };
  if (lm == 0.0) return [a](Point x) { return a.eval(x); };
  return [a, b, lm](Point x) { return (1.0 - lm) * a.eval(x) + lm * b.eval(x); };
}

Trajectory::Trajectory(Field U0, double t0) {
  fields_.push_back(std::move(U0));
  times_.push_back(t0);
}

void Trajectory::push(Field U, double t) {
  if (!(t > times_.back())) throw RangeError("trajectory times must increase");
  fields_.push_back(std::move(U));
  times_.push_back(t);
}

TimeSlab Trajectory::slab(std::size_t m) const {
  if (m < 1 || m > steps()) throw RangeError("slab index out of range");
  TimeSlab s;
  s.m = m;
  s.t_prev = times_[m - 1];
  s.t_next = times_[m];
  s.U_prev = fields_[m - 1];
  s.U_next = fields_[m];
  if (m >= 2) {
    s.U_prev2 = fields_[m - 2];
    s.t_prev2 = times_[m - 2];
  }
  return s;
}

std::function<double(Point)> Trajectory::at(double t) const {
  if (t < times_.front() || t > times_.back()) throw RangeError("time outside the trajectory");
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  std::size_t m = static_cast<std::size_t>(it - times_.begin());
  if (m == 0) return [f = fields_[0]](Point x) { return f.eval(x); };
  return interpolant_at(slab(m), t);
}

}  // namespace semiheat
