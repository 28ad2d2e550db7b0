#include "semiheat/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "semiheat/errors.hpp"

namespace semiheat {

Tolerances Tolerances::from_plus(double stol_plus, double ttol_plus) {
  return {stol_plus, stol_plus / 16.0, ttol_plus, ttol_plus / 16.0};
}

void Tolerances::validate() const {
  if (!(stol_plus > 0 && stol_minus > 0 && ttol_plus > 0 && ttol_minus > 0))
    throw DomainError("tolerances must be positive");
  if (stol_plus < 8.0 * stol_minus || ttol_plus < 8.0 * ttol_minus)
    throw DomainError("each plus tolerance must be at least 8 times its minus tolerance");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::FinalTime: return "final-time";
    case StopReason::DeltaNonexistent: return "delta-nonexistent";
    case StopReason::MaxSteps: return "max-steps";
  }
  return "unknown";
}

double ref_time(double eta_T, double r_tilde_prev) { return eta_T / r_tilde_prev; }

std::vector<double> ref_space(std::span<const double> eta_S, std::span<const double> eta_dot, double alpha,
                              double r_tilde_prev) {
  std::vector<double> out(eta_S.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(alpha * eta_S[i], eta_dot[i] / r_tilde_prev);
  return out;
}

std::vector<double> ref_space_first(std::span<const double> error0, std::span<const double> eta_S0,
                                    std::span<const double> eta_S1, std::span<const double> eta_dot, double alpha) {
  std::vector<double> out(error0.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::max({error0[i], alpha * eta_S0[i], alpha * eta_S1[i], eta_dot[i]});
  return out;
}

double space_weight(const LipschitzModulus& modulus, const NormProfile& profile, double xi, double r_tilde_prev) {
  if (modulus.is_zero || profile.k <= 0.0) return 1.0;
  return std::max(1.0, integrate_modulus(modulus, profile, 0.0, xi) / (r_tilde_prev * profile.k));
}

std::vector<double> restrict_max(const Mesh& fine, std::span<const double> values, const Mesh& coarse) {
  std::vector<double> out(coarse.size(), 0.0);
  const auto leaves = fine.leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto j = coarse.leaf_index_containing(leaves[i]);
    if (!j) throw DomainMismatchError("restriction target is finer than the source mesh");
    out[*j] = std::max(out[*j], values[i]);
  }
  return out;
}

double extrapolate_blowup(double t_prev, double norm_prev, double t_last, double norm_last) {
  if (!(norm_prev > 0.0) || !(norm_last > norm_prev))
    throw ExtrapolationError("blow-up extrapolation needs strictly increasing positive norms");
  return (t_last * norm_last - t_prev * norm_prev) / (norm_last - norm_prev);
}

double weighted_avg_dofs(std::span<const StepSummary> steps) {
  if (steps.empty()) return 0.0;
  double acc = 0.0, T = 0.0;
  for (const auto& s : steps) {
    acc += s.k * static_cast<double>(s.overlay_dofs);
    T += s.k;
  }
  return acc / T;
}

namespace {

// Sampled max |u(t) - (wa A + wb B)| over the leaves of `mesh`.
double sampled_error(const Mesh& mesh, const Field& A, const Field* B, double wa, double wb,
                     const SpaceTimeFunction& exact, double t) {
  const auto& pts = A.space().sample_rule().points;
  GridSamples ga, gb;
  double mx = 0.0;
  for (const CellId& c : mesh.leaves()) {
    A.sample_grid(c, pts, pts, kValue, ga);
    if (B) B->sample_grid(c, pts, pts, kValue, gb);
    const Box b = mesh.box(c);
    for (std::size_t j = 0; j < pts.size(); ++j)
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::size_t q = i + pts.size() * j;
        const double uh = wa * ga.v[q] + (B ? wb * gb.v[q] : 0.0);
        mx = std::max(mx, std::fabs(exact({b.x0 + pts[i] * b.hx, b.y0 + pts[j] * b.hy}, t) - uh));
      }
  }
  return mx;
}

std::size_t overlay_dofs(const Space& prev, const Space& next) {
  if (prev.mesh() == next.mesh()) return next.n_free();
  auto join = std::make_shared<const Mesh>(overlay_finest(prev.mesh(), next.mesh()));
  return Space(join, next.degree()).n_free();
}

// The time-marching state shared by the adaptive and uniform runners.
class Marcher {
 public:
  Marcher(const ProblemSpec& problem, double c_inf, int time_quad)
      : problem_(problem), c_inf_(c_inf), time_quad_(time_quad) {
    result_.ledger = EstimatorLedger(c_inf, problem.modulus.is_zero);
  }

  struct Attempt {
    SpacePtr space;
    double k = 0.0, t_next = 0.0;
    Field U;
    SlabEstimate est;
  };

  const ProblemSpec& problem() const { return problem_; }
  RunResult& result() { return result_; }
  double t() const { return t_; }
  const Field& U() const { return U_; }
  const SpaceEstimate& space_prev() const { return space_prev_; }

  void start(Field U0, const InitialEstimate& init, bool keep_trajectory) {
    U_ = std::move(U0);
    U_prev2_.reset();
    t_ = 0.0;
    space_prev_ = init.space;
    result_.ledger.set_initial(init.error, init.space.logged());
    result_.initial_norm = U_.linf_norm();
    result_.max_error.reset();
    if (keep_trajectory) result_.trajectory.emplace(U_, 0.0);
    if (problem_.exact) track_error(sampled_error(U_.space().mesh(), U_, nullptr, 1.0, 0.0, problem_.exact, 0.0));
  }

  Attempt attempt(SpacePtr space, double k, double final_time) {
    // A step leaving less than 1e-9 k before the final time lands on it instead.
    if (std::isfinite(final_time) && final_time - t_ - k <= 1e-9 * k) k = final_time - t_;
    Attempt a;
    a.space = space;
    a.k = k;
    a.t_next = std::isfinite(final_time) && t_ + k >= final_time ? final_time : t_ + k;
    a.U = imex_step(U_, space, k, t_, problem_);
    a.est = estimate_slab(slab_for(a), problem_, time_quad_);
    return a;
  }

  TimeSlab slab_for(const Attempt& a) const {
    TimeSlab s;
    s.m = result_.ledger.steps().size() + 1;
    s.t_prev = t_;
    s.t_next = a.t_next;
    s.U_prev = U_;
    s.U_next = a.U;
    if (U_prev2_) {
      s.U_prev2 = *U_prev2_;
      s.t_prev2 = t_prev2_;
    }
    return s;
  }

  // Evaluates psi, delta, r for an attempt and appends the record. Returns
  // true when delta exists and the step was accepted.
  bool commit(const Attempt& a, int adjustments, const StepCallback& on_step) {
    const LipschitzModulus& L = problem_.modulus;
    const double xi_m = xi(space_prev_, a.est.space_next);
    const double integral = integrate_modulus(L, a.est.profile, 0.0, c_inf_ * xi_m);
    EstimatorLedger& ledger = result_.ledger;
    StepRecord rec;
    rec.t = a.t_next;
    rec.k = a.k;
    rec.dofs = a.space->n_free();
    rec.linf_U = a.U.linf_norm();
    rec.eta_T = a.est.eta_T;
    rec.xi = xi_m;
    rec.xi_prime = a.est.derivative.xi_prime;
    rec.psi = ledger.next_psi(rec.eta_T, xi_m, rec.xi_prime, integral);
    rec.space_logged = a.est.space_next.logged();
    FixedPointData fp{&L, a.est.profile, rec.psi, xi_m, c_inf_};
    rec.delta = compute_delta(fp);
    if (rec.delta) rec.r = compute_r(fp, *rec.delta);
    const StepRecord& stored = ledger.push(rec);
    if (!stored.delta) {
      result_.rejected = stored;
      return false;
    }

    StepSummary sum;
    sum.m = stored.m;
    sum.t = a.t_next;
    sum.k = a.k;
    sum.dofs = stored.dofs;
    sum.overlay_dofs = overlay_dofs(U_.space(), *a.space);
    sum.cells = a.space->mesh().size();
    sum.linf_U = stored.linf_U;
    sum.step_adjustments = adjustments;
    result_.steps.push_back(sum);

    if (problem_.exact) {
      const Mesh& join = *a.est.derivative.join;
      track_error(sampled_error(join, U_, &a.U, 0.5, 0.5, problem_.exact, 0.5 * (t_ + a.t_next)));
      track_error(sampled_error(a.space->mesh(), a.U, nullptr, 1.0, 0.0, problem_.exact, a.t_next));
    }
    if (result_.trajectory) result_.trajectory->push(a.U, a.t_next);

    U_prev2_ = std::move(U_);
    t_prev2_ = t_;
    U_ = a.U;
    t_ = a.t_next;
    space_prev_ = a.est.space_next;
    if (on_step) on_step(StepEvent{result_.steps.back(), stored, U_});
    return true;
  }

  void finish(StopReason reason, std::string message) {
    result_.stop = reason;
    result_.message = std::move(message);
    result_.final_field = std::make_shared<const Field>(U_);
  }

 private:
  void track_error(double e) { result_.max_error = std::max(result_.max_error.value_or(0.0), e); }

  const ProblemSpec& problem_;
  double c_inf_;
  int time_quad_;
  RunResult result_;
  Field U_;
  std::optional<Field> U_prev2_;
  double t_ = 0.0, t_prev2_ = 0.0;
  SpaceEstimate space_prev_;
};

struct AdaptOutcome {
  std::shared_ptr<const Mesh> mesh;
  bool changed = false;
  bool capped = false;
};

AdaptOutcome adapt_mesh(const std::shared_ptr<const Mesh>& mesh, std::span<const double> ref, const Tolerances& tol,
                        std::uint32_t min_level, std::uint32_t max_level) {
  AdaptOutcome out;
  std::vector<CellId> up, down;
  const auto leaves = mesh->leaves();
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    if (ref[i] > tol.stol_plus) {
      if (leaves[i].level < max_level) {
        up.push_back(leaves[i]);
      } else {
        out.capped = true;
      }
    } else if (ref[i] < tol.stol_minus && leaves[i].level > min_level) {
      down.push_back(leaves[i]);
    }
  }
  Mesh m = *mesh;
  if (!up.empty()) m = refine(m, up);
  if (!down.empty()) m = coarsen(m, down, min_level);
  out.changed = !(m == *mesh);
  out.mesh = out.changed ? std::make_shared<const Mesh>(std::move(m)) : mesh;
  return out;
}

}  // namespace

RunResult run_adaptive(const ProblemSpec& problem, const Tolerances& tol_in, const DriverConfig& cfg,
                       const StepCallback& on_step) {
  tol_in.validate();
  if (!(cfg.k1 > 0.0)) throw DomainError("initial time step must be positive");
  const double T = problem.blowup ? std::numeric_limits<double>::infinity() : problem.final_time;
  const std::uint32_t min_level = cfg.min_level.value_or(cfg.initial_level);
  const std::uint32_t max_level = std::max(cfg.max_level, cfg.initial_level);
  Tolerances tol = tol_in;
  Marcher marcher(problem, cfg.c_inf, cfg.time_quad);
  RunResult& res = marcher.result();

  // First interval: adapt the initial mesh and k_1 together until both indicators pass.
  auto mesh = std::make_shared<const Mesh>(Mesh::uniform(problem.domain, cfg.initial_level));
  double k = std::isfinite(T) ? std::min(cfg.k1, T) : cfg.k1;
  std::optional<Marcher::Attempt> first;
  for (int pass = 0;; ++pass) {
    auto space = Space::make(mesh, cfg.degree);
    Field U0 = project_initial(problem, space);
    const InitialEstimate init = estimate_initial(problem, U0);
    marcher.start(std::move(U0), init, cfg.keep_trajectory);
    auto a = marcher.attempt(space, k, T);
    const double xi1 = xi(init.space, a.est.space_next);
    const double alpha = space_weight(problem.modulus, a.est.profile, xi1, 1.0);
    const auto eta_dot = restrict_max(*a.est.derivative.join, a.est.derivative.eta, *mesh);
    const auto refS = ref_space_first(init.error_per_cell, init.space.eta, a.est.space_next.eta, eta_dot, alpha);
    const double refT = ref_time(a.est.eta_T, 1.0);
    const bool time_ok = refT <= tol.ttol_plus;
    const bool space_ok = *std::max_element(refS.begin(), refS.end()) <= tol.stol_plus;
    if (time_ok && space_ok) {
      first = std::move(a);
      break;
    }
    if (pass + 1 >= cfg.first_interval_passes) {
      ++res.cap_hits;
      first = std::move(a);
      break;
    }
    if (!time_ok) k *= 0.5;
    bool mesh_changed = false;
    if (!space_ok) {
      const auto ad = adapt_mesh(mesh, refS, tol, min_level, max_level);
      if (ad.capped) ++res.cap_hits;
      mesh = ad.mesh;
      mesh_changed = ad.changed;
    }
    if (time_ok && !mesh_changed) {
      // Space indicator cannot be reduced further at the level cap.
      first = std::move(a);
      break;
    }
  }

  if (!marcher.commit(*first, 0, on_step)) {
    marcher.finish(StopReason::DeltaNonexistent, "delta-nonexistent at m=1");
    res.final_tolerances = tol;
    return std::move(res);
  }
  double k_prev = first->k;

  while (true) {
    const StepRecord& last = res.ledger.steps().back();
    if (cfg.scale_by_delta) tol = tol.scaled(*last.delta);
    if (std::isfinite(T) && marcher.t() >= T) {
      marcher.finish(StopReason::FinalTime, "reached final time");
      break;
    }
    if (res.steps.size() >= cfg.max_steps) {
      marcher.finish(StopReason::MaxSteps, "step limit reached");
      break;
    }
    const double r_tilde = res.ledger.r_tilde();
    const double remaining = T - marcher.t();
    k = std::min(k_prev, remaining);
    auto space = marcher.U().space_ptr();
    auto a = marcher.attempt(space, k, T);
    int adjustments = 0;
    for (;; ++adjustments) {
      const double refT = ref_time(a.est.eta_T, r_tilde);
      double k_new = k;
      if (refT > tol.ttol_plus) {
        k_new = 0.5 * k;
      } else if (refT < tol.ttol_minus && k < remaining) {
        k_new = std::min(2.0 * k, remaining);
      }
      if (k_new == k) break;
      if (adjustments >= cfg.step_adjust_cap) {
        ++res.cap_hits;
        break;
      }
      k = k_new;
      a = marcher.attempt(space, k, T);
    }

    // One spatial pass on the accepted step length.
    const double xi_m = xi(marcher.space_prev(), a.est.space_next);
    const double alpha = space_weight(problem.modulus, a.est.profile, xi_m, r_tilde);
    const Mesh& cur = space->mesh();
    const auto eta_dot = restrict_max(*a.est.derivative.join, a.est.derivative.eta, cur);
    const auto refS = ref_space(a.est.space_next.eta, eta_dot, alpha, r_tilde);
    const auto ad = adapt_mesh(space->mesh_ptr(), refS, tol, min_level, max_level);
    if (ad.capped) ++res.cap_hits;
    if (ad.changed) a = marcher.attempt(Space::make(ad.mesh, cfg.degree), k, T);

    if (!marcher.commit(a, adjustments, on_step)) {
      marcher.finish(StopReason::DeltaNonexistent, "delta-nonexistent at m=" + std::to_string(res.ledger.steps().size()));
      break;
    }
    k_prev = a.k;
  }
  res.final_tolerances = tol;
  return std::move(res);
}

RunResult run_uniform(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh, int degree, double k,
                      double final_time, double c_inf, int time_quad, bool keep_trajectory) {
  if (!(k > 0.0)) throw DomainError("time step must be positive");
  if (!(final_time > 0.0) || !std::isfinite(final_time)) throw DomainError("uniform runs need a finite final time");
  Marcher marcher(problem, c_inf, time_quad);
  RunResult& res = marcher.result();
  auto space = Space::make(std::move(mesh), degree);
  Field U0 = project_initial(problem, space);
  const InitialEstimate init = estimate_initial(problem, U0);
  marcher.start(std::move(U0), init, keep_trajectory);
  // Steps that would leave a sliver shorter than 1e-9 k are merged into the last one.
  while (marcher.t() < final_time) {
    double step = final_time - marcher.t() <= k * (1.0 + 1e-9) ? final_time - marcher.t() : k;
    auto a = marcher.attempt(space, step, final_time);
    if (!marcher.commit(a, 0, {})) {
      marcher.finish(StopReason::DeltaNonexistent,
                     "delta-nonexistent at m=" + std::to_string(res.ledger.steps().size()));
      return std::move(res);
    }
  }
  marcher.finish(StopReason::FinalTime, "reached final time");
  return std::move(res);
}

}  // namespace semiheat
