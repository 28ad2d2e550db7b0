#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "semiheat/fespace.hpp"
#include "semiheat/problems.hpp"
#include "semiheat/scheme.hpp"

namespace semiheat {

// max(1, ln(1/h)).
double log_factor(double h);

// Per-leaf values of the primary space estimator on one mesh:
//   h_K^2 / a * ||A + a lap U||_{L^inf(K)} + h_K * ||[grad U]||_{L^inf(dK \ boundary)}.
struct SpaceEstimate {
  std::vector<double> eta;
  double max = 0.0;
  double h_min = 0.0;
  // log_factor(h_min) * max
  double logged() const { return max == 0.0 ? 0.0 : log_factor(h_min) * max; }
};

// Space-derivative estimator on the common refinement of both slab meshes,
// weighted by the cell sizes of their common coarsening.
struct DerivativeEstimate {
  std::shared_ptr<const Mesh> join;
  std::vector<double> eta;  // per leaf of join
  double max = 0.0;
  double xi_prime = 0.0;
};

// ||U(s)|| at the Gauss nodes of one slab.
struct NormProfile {
  double t0 = 0.0, k = 0.0;
  std::vector<double> s, w, norm;  // absolute nodes and weights (sum of w = k)
};

// Everything computed from one slab in a single pass over the finest overlay.
struct SlabEstimate {
  SpaceEstimate space_next;  // on the slab's new mesh
  DerivativeEstimate derivative;
  double eta_T = 0.0;
  NormProfile profile;
};

struct InitialEstimate {
  SpaceEstimate space;
  std::vector<double> error_per_cell;  // ||u0 - U0||_{L^inf(K)}
  double error = 0.0;                  // ||u0 - U0||
};

InitialEstimate estimate_initial(const ProblemSpec& problem, const Field& U0);
SlabEstimate estimate_slab(const TimeSlab& slab, const ProblemSpec& problem, int time_quad = 3);

// Single-quantity entry points built on the passes above.
SpaceEstimate eta_space(const TimeSlab& slab, const ProblemSpec& problem);
DerivativeEstimate eta_space_derivative(const TimeSlab& slab, const ProblemSpec& problem);
double eta_time(const TimeSlab& slab, const ProblemSpec& problem, int time_quad = 3);
double eta_initial(const InitialEstimate& init, double c_inf);

double xi(const SpaceEstimate& prev, const SpaceEstimate& next);

// Integral over the slab of L(s, ||U(s)|| + shift_a, ||U(s)|| + shift_b).
double integrate_modulus(const LipschitzModulus& modulus, const NormProfile& profile, double shift_a, double shift_b);

// Inputs that define phi_m(delta) = 1 + delta (int L(s, delta) ds - 1).
struct FixedPointData {
  const LipschitzModulus* modulus = nullptr;
  NormProfile profile;
  double psi = 0.0, xi = 0.0, c_inf = 1.0;
};

inline constexpr double kDeltaCeiling = 1e8;

double phi(const FixedPointData& d, double delta);
// int L(s, delta) ds
double phi_integral(const FixedPointData& d, double delta);

enum class DeltaMethod { Auto, ClosedForm, Scan };

// Smallest root of phi in [1, 1e8], or nullopt. Auto uses the quadratic
// formula when the modulus has the form c (a + b) and the bracket scan
// otherwise. The zero modulus returns exactly 1.
std::optional<double> compute_delta(const FixedPointData& d, DeltaMethod method = DeltaMethod::Auto);
// exp(int L(s, delta psi + ||U|| + C xi, ||U|| + C xi) ds); exactly 1 for the zero modulus.
double compute_r(const FixedPointData& d, double delta);

struct StepRecord {
  std::size_t m = 0;
  double t = 0.0, k = 0.0;
  std::size_t dofs = 0;
  double linf_U = 0.0;
  double eta_T = 0.0, xi = 0.0, xi_prime = 0.0, psi = 0.0;
  std::optional<double> delta;
  double r = 1.0, r_tilde = 1.0;
  double space_logged = 0.0;  // log_factor(h_min) * max eta_S on the step's mesh
  double bound = 0.0;         // NaN when delta is absent
};

class EstimatorLedger {
 public:
  EstimatorLedger(double c_inf, bool zero_modulus) : c_inf_(c_inf), zero_modulus_(zero_modulus) {}

  void set_initial(double error0, double space_logged0);
  double eta_I() const { return error0_ + c_inf_ * space_logged0_; }
  double error0() const { return error0_; }
  double c_inf() const { return c_inf_; }
  bool zero_modulus() const { return zero_modulus_; }

  // psi_m for a new step given the slab quantities.
  double next_psi(double eta_T, double xi, double xi_prime, double modulus_integral) const;
  // Appends a step; fills r_tilde and bound.
  const StepRecord& push(StepRecord rec);

  const std::vector<StepRecord>& steps() const { return steps_; }
  double r_tilde() const { return steps_.empty() ? 1.0 : steps_.back().r_tilde; }
  double last_r() const { return steps_.empty() ? 1.0 : steps_.back().r; }
  double last_psi() const { return steps_.empty() ? 0.0 : steps_.back().psi; }

  // Bound on max_{m <= M} ||e||; BoundInvalidError if some delta_m is absent.
  double total_bound(std::size_t M) const;
  double total_bound() const { return total_bound(steps_.size()); }

 private:
  double c_inf_;
  bool zero_modulus_;
  double error0_ = 0.0, space_logged0_ = 0.0;
  std::vector<StepRecord> steps_;
};

}  // namespace semiheat
