#include "semiheat/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semiheat/errors.hpp"
#include "semiheat/kernels.hpp"

namespace semiheat {

double log_factor(double h) { return std::max(1.0, std::log(1.0 / h)); }

namespace {

std::vector<Point> grid_points(const Box& b, std::span<const double> t) {
  std::vector<Point> pts;
  pts.reserve(t.size() * t.size());
  for (double ty : t)
    for (double tx : t) pts.push_back({b.x0 + tx * b.hx, b.y0 + ty * b.hy});
  return pts;
}

void finish_space(const Mesh& mesh, double a, const std::vector<double>& vol, const std::vector<double>& jump,
                  SpaceEstimate& out) {
  out.eta.resize(mesh.size());
  out.max = 0.0;
  const auto leaves = mesh.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const double h = mesh.diameter(leaves[i]);
    out.eta[i] = h * h / a * vol[i] + h * jump[i];
    out.max = std::max(out.max, out.eta[i]);
  }
  out.h_min = mesh.min_diameter();
}

}  // namespace

InitialEstimate estimate_initial(const ProblemSpec& problem, const Field& U0) {
  const Space& s = U0.space();
  const Mesh& mesh = s.mesh();
  const auto& t = s.sample_rule().points;
  InitialEstimate out;
  std::vector<double> vol(mesh.size(), 0.0);
  out.error_per_cell.assign(mesh.size(), 0.0);
  GridSamples g;
  const auto leaves = mesh.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    U0.sample_grid(leaves[i], t, t, kValue | kLaplacian, g);
    const auto pts = grid_points(mesh.box(leaves[i]), t);
    double v = 0.0, e = 0.0;
    for (std::size_t q = 0; q < pts.size(); ++q) {
      v = std::max(v, std::fabs(g.lap[q] - problem.lap_u0(pts[q])));
      e = std::max(e, std::fabs(problem.u0(pts[q]) - g.v[q]));
    }
    // h^2/a |A0 + a lap U0| with A0 = -a lap u0
    vol[i] = problem.a * v;
    out.error_per_cell[i] = e;
    out.error = std::max(out.error, e);
  }
  const Field* fs[1] = {&U0};
  const double c[1] = {1.0};
  finish_space(mesh, problem.a, vol, jump_linf_map(mesh, fs, c, s.sample_rule()), out.space);
  return out;
}

SlabEstimate estimate_slab(const TimeSlab& slab, const ProblemSpec& problem, int time_quad) {
  const Field& Un = slab.U_next;
  const Field& Up = slab.U_prev;
  const Field* Upp = slab.U_prev2 ? &*slab.U_prev2 : nullptr;
  const Mesh& Mn = Un.space().mesh();
  const Mesh& Mp = Up.space().mesh();
  const double a = problem.a;
  const double k = slab.k();
  if (!(k > 0.0)) throw DomainError("slab must have positive length");
  const double k_prev = Upp ? slab.t_prev - slab.t_prev2 : 0.0;

  const bool same = Mp == Mn;
  auto join = std::make_shared<const Mesh>(same ? Mn : overlay_finest(Mp, Mn));
  const Mesh meet = same ? Mn : overlay_coarsest(Mp, Mn);
  const Mesh W = (Upp && !(Upp->space().mesh() == *join)) ? overlay_finest(*join, Upp->space().mesh()) : *join;

  const Rule1D tq = gauss_legendre(static_cast<std::size_t>(time_quad));
  const std::size_t nt = tq.size();
  SlabEstimate out;
  out.profile.t0 = slab.t_prev;
  out.profile.k = k;
  out.profile.s.resize(nt);
  out.profile.w.resize(nt);
  out.profile.norm.assign(nt, 0.0);
  for (std::size_t j = 0; j < nt; ++j) {
    out.profile.s[j] = slab.t_prev + k * tq.points[j];
    out.profile.w[j] = k * tq.weights[j];
  }
  std::vector<double> max_R(nt, 0.0);

  std::vector<double> vol_next(Mn.size(), 0.0), vol_dot(join->size(), 0.0);
  const auto& t = Un.space().sample_rule().points;
  GridSamples gn, gp, gpp;
  const std::size_t np = t.size() * t.size();
  std::vector<double> A_next(np), A_prev(np);
  for (const CellId& c : W.leaves()) {
    Un.sample_grid(c, t, t, kValue | kLaplacian, gn);
    Up.sample_grid(c, t, t, kValue | kLaplacian, gp);
    if (Upp) Upp->sample_grid(c, t, t, kValue, gpp);
    const auto pts = grid_points(W.box(c), t);
    double vn = 0.0, vd = 0.0;
    for (std::size_t q = 0; q < np; ++q) {
      const double ut = (gn.v[q] - gp.v[q]) / k;
      A_next[q] = problem.f(pts[q], slab.t_prev, gp.v[q]) - ut;
      A_prev[q] = Upp ? problem.f(pts[q], slab.t_prev2, gpp.v[q]) - (gp.v[q] - gpp.v[q]) / k_prev
                      : -a * problem.lap_u0(pts[q]);
      vn = std::max(vn, std::fabs(A_next[q] + a * gn.lap[q]));
      vd = std::max(vd, std::fabs(A_next[q] - A_prev[q] + a * (gn.lap[q] - gp.lap[q])));
      for (std::size_t j = 0; j < nt; ++j) {
        const double lm = tq.points[j];
        const double u = (1.0 - lm) * gp.v[q] + lm * gn.v[q];
        const double R = problem.f(pts[q], out.profile.s[j], u) - (1.0 - lm) * A_prev[q] - lm * A_next[q] - ut;
        max_R[j] = std::max(max_R[j], std::fabs(R));
        out.profile.norm[j] = std::max(out.profile.norm[j], std::fabs(u));
      }
    }
    auto& cn = vol_next[*Mn.leaf_index_containing(c)];
    cn = std::max(cn, vn);
    auto& cd = vol_dot[*join->leaf_index_containing(c)];
    cd = std::max(cd, vd);
  }
  for (std::size_t j = 0; j < nt; ++j) out.eta_T += out.profile.w[j] * max_R[j];

  {
    const Field* fs[1] = {&Un};
    const double c[1] = {1.0};
    finish_space(Mn, a, vol_next, jump_linf_map(Mn, fs, c, Un.space().sample_rule()), out.space_next);
  }
  {
    const Field* fs[2] = {&Un, &Up};
    const double c[2] = {1.0, -1.0};
    const auto jd = jump_linf_map(*join, fs, c, Un.space().sample_rule());
    DerivativeEstimate& d = out.derivative;
    d.join = join;
    d.eta.resize(join->size());
    const auto leaves = join->leaves();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      const double h = meet.diameter(*meet.leaf_containing(leaves[i]));
      d.eta[i] = h * h / (k * a) * vol_dot[i] + h / k * jd[i];
      d.max = std::max(d.max, d.eta[i]);
    }
    d.xi_prime = log_factor(std::min(Mp.min_diameter(), Mn.min_diameter())) * k * d.max;
  }
  return out;
}

SpaceEstimate eta_space(const TimeSlab& slab, const ProblemSpec& problem) {
  return estimate_slab(slab, problem).space_next;
}

DerivativeEstimate eta_space_derivative(const TimeSlab& slab, const ProblemSpec& problem) {
  return estimate_slab(slab, problem).derivative;
}

double eta_time(const TimeSlab& slab, const ProblemSpec& problem, int time_quad) {
  return estimate_slab(slab, problem, time_quad).eta_T;
}

double eta_initial(const InitialEstimate& init, double c_inf) { return init.error + c_inf * init.space.logged(); }

double xi(const SpaceEstimate& prev, const SpaceEstimate& next) { return std::max(prev.logged(), next.logged()); }

double integrate_modulus(const LipschitzModulus& modulus, const NormProfile& p, double shift_a, double shift_b) {
  if (modulus.is_zero) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < p.s.size(); ++j)
    acc += p.w[j] * modulus(p.s[j], p.norm[j] + shift_a, p.norm[j] + shift_b);
  return acc;
}

double phi_integral(const FixedPointData& d, double delta) {
  const double shift = delta * d.psi + d.c_inf * d.xi;
  return integrate_modulus(*d.modulus, d.profile, shift, shift);
}

double phi(const FixedPointData& d, double delta) { return 1.0 + delta * (phi_integral(d, delta) - 1.0); }

namespace {

std::optional<double> delta_closed_form(const FixedPointData& d) {
  const double c = *d.modulus->linear_sum_coefficient;
  double int_norm = 0.0;
  for (std::size_t j = 0; j < d.profile.s.size(); ++j) int_norm += d.profile.w[j] * d.profile.norm[j];
  // phi(delta) = A delta^2 + B delta + 1
  const double A = 2.0 * c * d.profile.k * d.psi;
  const double B = 2.0 * c * (d.c_inf * d.profile.k * d.xi + int_norm) - 1.0;
  if (A == 0.0) {
    if (B >= 0.0) return std::nullopt;
    const double root = -1.0 / B;
    if (root > kDeltaCeiling) return std::nullopt;
    return std::max(1.0, root);
  }
  const double D = B * B - 4.0 * A;
  if (D < 0.0 || B >= 0.0) return std::nullopt;
  const double sq = std::sqrt(D);
  const double r1 = 2.0 / (-B + sq);  // smaller root, cancellation-free
  const double r2 = (-B + sq) / (2.0 * A);
  const double tol = 1e-12;
  double root;
  if (r1 >= 1.0 - tol) {
    root = r1;
  } else if (r2 >= 1.0 - tol && A + B + 1.0 <= 0.0) {
    root = r2;
  } else {
    return std::nullopt;
  }
  if (root > kDeltaCeiling) return std::nullopt;
  return std::max(1.0, root);
}

// Returns the end of [lo, hi] with phi <= 0 after bisecting to 1e-12 relative;
// phi(lo) > 0 >= phi(hi) on entry.
double bisect(const FixedPointData& d, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (phi(d, mid) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

// Golden-section minimization of phi on [lo, hi]; returns the arg-min.
double golden_min(const FixedPointData& d, double lo, double hi) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = phi(d, x1), f2 = phi(d, x2);
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    if (f1 <= 0.0) return x1;
    if (f2 <= 0.0) return x2;
    if (f1 < f2) {
      hi = x2, x2 = x1, f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = phi(d, x1);
    } else {
      lo = x1, x1 = x2, f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = phi(d, x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

std::optional<double> delta_scan(const FixedPointData& d) {
  std::vector<double> grid;
  for (double x = 1.0; x < kDeltaCeiling; x *= 2.0) grid.push_back(x);
  grid.push_back(kDeltaCeiling);
  std::vector<double> vals;
  vals.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double v = phi(d, grid[i]);
    vals.push_back(v);
    if (v <= 0.0) return i == 0 ? 1.0 : bisect(d, grid[i - 1], grid[i]);
    // An increase after a decrease hides a possible dip between grid points.
    if (i >= 1 && v > vals[i - 1] && (i == 1 || vals[i - 1] < vals[i - 2])) {
      const std::size_t lo = i >= 2 ? i - 2 : 0;
      const double x = golden_min(d, grid[lo], grid[i]);
      if (phi(d, x) <= 0.0) return bisect(d, grid[lo], x);
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<double> compute_delta(const FixedPointData& d, DeltaMethod method) {
  if (d.modulus == nullptr) throw DomainError("fixed-point data needs a modulus");
  if (d.modulus->is_zero) return 1.0;
  if (method == DeltaMethod::ClosedForm && !d.modulus->linear_sum_coefficient)
    throw DomainError("closed-form delta requires a modulus of the form c (a + b)");
  const bool closed = method == DeltaMethod::ClosedForm ||
                      (method == DeltaMethod::Auto && d.modulus->linear_sum_coefficient.has_value());
  const auto delta = closed ? delta_closed_form(d) : delta_scan(d);
  if (delta) {
    const double lhs = phi_integral(d, *delta);
    if (!(lhs <= 1.0 - 1.0 / *delta + 1e-10))
      throw Error("fixed-point parameter violates its contraction condition");
  }
  return delta;
}

double compute_r(const FixedPointData& d, double delta) {
  if (d.modulus->is_zero) return 1.0;
  const double base = d.c_inf * d.xi;
  return std::exp(integrate_modulus(*d.modulus, d.profile, delta * d.psi + base, base));
}

void EstimatorLedger::set_initial(double error0, double space_logged0) {
  error0_ = error0;
  space_logged0_ = space_logged0;
}

double EstimatorLedger::next_psi(double eta_T, double xi_m, double xi_prime, double modulus_integral) const {
  const double carry = steps_.empty() ? eta_I() : steps_.back().r * steps_.back().psi;
  return carry + c_inf_ * xi_m * modulus_integral + eta_T + c_inf_ * xi_prime;
}

const StepRecord& EstimatorLedger::push(StepRecord rec) {
  rec.m = steps_.size() + 1;
  if (rec.delta) {
    rec.r_tilde = r_tilde() * rec.r;
  } else {
    rec.r = std::numeric_limits<double>::quiet_NaN();
    rec.r_tilde = std::numeric_limits<double>::quiet_NaN();
  }
  steps_.push_back(rec);
  try {
    steps_.back().bound = total_bound(steps_.size());
  } catch (const BoundInvalidError&) {
    steps_.back().bound = std::numeric_limits<double>::quiet_NaN();
  }
  return steps_.back();
}

double EstimatorLedger::total_bound(std::size_t M) const {
  if (M > steps_.size()) throw RangeError("bound requested beyond the recorded steps");
  double space = space_logged0_;
  for (std::size_t i = 0; i < M; ++i) {
    if (!steps_[i].delta) throw BoundInvalidError("fixed-point parameter absent at step " + std::to_string(i + 1));
    space = std::max(space, steps_[i].space_logged);
  }
  if (M == 0) return error0_ + c_inf_ * space;
  if (zero_modulus_) {
    double sum_T = 0.0, sum_xp = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
      sum_T += steps_[i].eta_T;
      sum_xp += steps_[i].xi_prime;
    }
    return error0_ + sum_T + c_inf_ * sum_xp + c_inf_ * space;
  }
  const StepRecord& last = steps_[M - 1];
  return last.r * last.psi + c_inf_ * space;
}

}  // namespace semiheat
