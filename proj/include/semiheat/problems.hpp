#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semiheat/mesh.hpp"

namespace semiheat {

// Local Lipschitz modulus: |f(x,t,v) - f(x,t,w)| <= L(t, |v|, |w|) |v - w|.
struct LipschitzModulus {
  std::function<double(double t, double a, double b)> eval;
  // f does not depend on u; every consumer short-circuits to L = 0.
  bool is_zero = false;
  // Set when L(t, a, b) = c (a + b); enables the closed-form fixed-point parameter.
  std::optional<double> linear_sum_coefficient;

  double operator()(double t, double a, double b) const { return is_zero ? 0.0 : eval(t, a, b); }

  static LipschitzModulus zero();
  static LipschitzModulus linear_sum(double c);
  static LipschitzModulus general(std::function<double(double, double, double)> fn);
};

using Reaction = std::function<double(Point x, double t, double u)>;
using SpaceTimeFunction = std::function<double(Point x, double t)>;

struct ProblemSpec {
  std::string name;
  Rectangle domain;
  double a = 1.0;
  Reaction f;
  LipschitzModulus modulus;
  std::function<double(Point)> u0;
  std::function<double(Point)> lap_u0;
  // Infinity in blow-up mode.
  double final_time = std::numeric_limits<double>::infinity();
  bool blowup = false;
  SpaceTimeFunction exact;  // empty unless known
};

std::vector<std::string> builtin_names();
// Throws CatalogError for unknown names.
ProblemSpec builtin(std::string_view name);

struct ModulusSample {
  double t, v, w;
  Point x;
  double lhs, rhs;
};

struct ModulusReport {
  std::size_t samples = 0;
  std::vector<ModulusSample> violations;
  bool ok() const { return violations.empty(); }
};

// Draws (x, t, v, w) uniformly with |v|, |w| <= value_bound and t in
// [0, min(T, 1)] and checks the Lipschitz inequality with a relative
// tolerance of 1e-12.
ModulusReport modulus_check(const ProblemSpec& spec, std::size_t n_samples, std::uint64_t seed = 20240611,
                            double value_bound = 1e3);

}  // namespace semiheat
