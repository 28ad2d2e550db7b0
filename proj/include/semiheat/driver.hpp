#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semiheat/estimators.hpp"
#include "semiheat/fespace.hpp"
#include "semiheat/problems.hpp"
#include "semiheat/scheme.hpp"

namespace semiheat {

struct Tolerances {
  double stol_plus = 1.0, stol_minus = 1.0 / 16.0;
  double ttol_plus = 1.0, ttol_minus = 1.0 / 16.0;

  // Minus tolerances default to plus / 16.
  static Tolerances from_plus(double stol_plus, double ttol_plus);
  // Throws DomainError unless all are positive and each plus/minus ratio is at least 8.
  void validate() const;
  Tolerances scaled(double s) const { return {stol_plus * s, stol_minus * s, ttol_plus * s, ttol_minus * s}; }
};

struct DriverConfig {
  int degree = 3;
  std::uint32_t initial_level = 3;
  // Coarsening never goes below this level; defaults to initial_level.
  std::optional<std::uint32_t> min_level;
  std::uint32_t max_level = 12;
  double k1 = 0.05;
  int time_quad = 3;
  double c_inf = 1.0;
  bool scale_by_delta = true;
  int first_interval_passes = 40;
  int step_adjust_cap = 30;
  std::size_t max_steps = 1000000;
  bool keep_trajectory = false;
};

enum class StopReason { FinalTime, DeltaNonexistent, MaxSteps };
std::string to_string(StopReason r);

struct StepSummary {
  std::size_t m = 0;
  double t = 0.0, k = 0.0;
  std::size_t dofs = 0;         // free unknowns on the step's mesh
  std::size_t overlay_dofs = 0;  // free unknowns on the common refinement with the previous mesh
  std::size_t cells = 0;
  double linf_U = 0.0;
  int step_adjustments = 0;
};

struct StepEvent {
  const StepSummary& summary;
  const StepRecord& record;
  const Field& U;
};

struct RunResult {
  StopReason stop = StopReason::FinalTime;
  std::string message;
  EstimatorLedger ledger{1.0, false};
  std::vector<StepSummary> steps;  // accepted steps only
  std::optional<StepRecord> rejected;  // the step whose delta did not exist
  std::optional<Trajectory> trajectory;
  std::shared_ptr<const Field> final_field;
  Tolerances final_tolerances;
  double initial_norm = 0.0;
  int cap_hits = 0;  // step-adjust, first-interval or max-level caps reached
  // Sampled max over step ends and midpoints of |u - U|, when the exact solution is known.
  std::optional<double> max_error;

  std::size_t accepted() const { return steps.size(); }
  double final_time() const { return steps.empty() ? 0.0 : steps.back().t; }
  double final_norm() const { return steps.empty() ? initial_norm : steps.back().linf_U; }
  // Bound after the last accepted step.
  double bound() const { return ledger.total_bound(steps.size()); }
};

using StepCallback = std::function<void(const StepEvent&)>;

// r_tilde^{-1} eta_T
double ref_time(double eta_T, double r_tilde_prev);

// max{alpha eta_S, eta_dot / r_tilde} per cell; all inputs on the same mesh.
std::vector<double> ref_space(std::span<const double> eta_S, std::span<const double> eta_dot, double alpha,
                              double r_tilde_prev);
// First interval: max{||e(0)||_K, alpha eta_S^0, alpha eta_S^1, eta_dot^1}.
std::vector<double> ref_space_first(std::span<const double> error0, std::span<const double> eta_S0,
                                    std::span<const double> eta_S1, std::span<const double> eta_dot, double alpha);

// max{1, r_tilde^{-1} k^{-1} int L(s, ||U||, ||U|| + xi) ds}
double space_weight(const LipschitzModulus& modulus, const NormProfile& profile, double xi, double r_tilde_prev);

// Max of per-cell values of `fine` over each leaf of `coarse`; fine must refine coarse.
std::vector<double> restrict_max(const Mesh& fine, std::span<const double> values, const Mesh& coarse);

RunResult run_adaptive(const ProblemSpec& problem, const Tolerances& tol, const DriverConfig& cfg,
                       const StepCallback& on_step = {});

// Fixed mesh and fixed step k (last step clipped to reach final_time).
RunResult run_uniform(const ProblemSpec& problem, std::shared_ptr<const Mesh> mesh, int degree, double k,
                      double final_time, double c_inf = 1.0, int time_quad = 3, bool keep_trajectory = false);

// (t_m ||U^m|| - t_{m-1} ||U^{m-1}||) / (||U^m|| - ||U^{m-1}||)
double extrapolate_blowup(double t_prev, double norm_prev, double t_last, double norm_last);

// (1/T) sum k_m lambda_m with lambda_m the overlay DOFs.
double weighted_avg_dofs(std::span<const StepSummary> steps);

}  // namespace semiheat
