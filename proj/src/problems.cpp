#include "semiheat/problems.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "semiheat/errors.hpp"

namespace semiheat {

LipschitzModulus LipschitzModulus::zero() {
  LipschitzModulus m;
  m.eval = [](double, double, double) { return 0.0; };
  m.is_zero = true;
  return m;
}

LipschitzModulus LipschitzModulus::linear_sum(double c) {
  LipschitzModulus m;
  m.eval = [c](double, double a, double b) { return c * (a + b); };
  m.linear_sum_coefficient = c;
  return m;
}

LipschitzModulus LipschitzModulus::general(std::function<double(double, double, double)> fn) {
  LipschitzModulus m;
  m.eval = std::move(fn);
  return m;
}

std::vector<std::string> builtin_names() {
  return {"example1", "example2", "example3", "heat_decay", "manufactured_linear"};
}

namespace {

constexpr double pi = std::numbers::pi;

ProblemSpec example1() {
  ProblemSpec p;
  p.name = "example1";
  p.domain = Rectangle(-8, 8, -8, 8);
  p.a = 1.0;
  p.f = [](Point, double, double u) { return u * u; };
  p.modulus = LipschitzModulus::linear_sum(1.0);
  p.u0 = [](Point x) { return 10.0 * std::exp(-2.0 * (x.x * x.x + x.y * x.y)); };
  p.lap_u0 = [](Point x) {
    const double r2 = x.x * x.x + x.y * x.y;
    return 80.0 * (2.0 * r2 - 1.0) * std::exp(-2.0 * r2);
  };
  p.blowup = true;
  return p;
}

ProblemSpec example2() {
  ProblemSpec p = example1();
  p.name = "example2";
  p.u0 = [](Point x) {
    const double r2 = x.x * x.x + x.y * x.y;
    return 10.0 * r2 * std::exp(-0.5 * r2);
  };
  p.lap_u0 = [](Point x) {
    const double r2 = x.x * x.x + x.y * x.y;
    return 10.0 * (r2 * r2 - 6.0 * r2 + 4.0) * std::exp(-0.5 * r2);
  };
  return p;
}

ProblemSpec example3() {
  ProblemSpec p;
  p.name = "example3";
  p.domain = Rectangle(0, 1, 0, 1);
  p.a = 0.001;
  p.f = [](Point, double t, double u) { return std::sin(t) - u * u * u * u; };
  p.modulus = LipschitzModulus::general(
      [](double, double a, double b) { return a * a * a + a * a * b + a * b * b + b * b * b; });
  p.u0 = [](Point x) { return x.x * x.y * (x.x - 1.0) * (x.y - 1.0); };
  p.lap_u0 = [](Point x) { return 2.0 * x.y * (x.y - 1.0) + 2.0 * x.x * (x.x - 1.0); };
  p.final_time = 0.75;
  return p;
}

ProblemSpec heat_decay() {
  ProblemSpec p;
  p.name = "heat_decay";
  p.domain = Rectangle(0, 1, 0, 1);
  p.a = 1.0;
  p.f = [](Point, double, double) { return 0.0; };
  p.modulus = LipschitzModulus::zero();
  p.u0 = [](Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
  p.lap_u0 = [](Point x) { return -2.0 * pi * pi * std::sin(pi * x.x) * std::sin(pi * x.y); };
  p.final_time = 0.1;
  p.exact = [](Point x, double t) { return std::exp(-2.0 * pi * pi * t) * std::sin(pi * x.x) * std::sin(pi * x.y); };
  return p;
}

ProblemSpec manufactured_linear() {
  ProblemSpec p;
  p.name = "manufactured_linear";
  p.domain = Rectangle(0, 1, 0, 1);
  p.a = 1.0;
  p.f = [](Point x, double t, double) {
    return (2.0 * pi * pi - 1.0) * std::exp(-t) * std::sin(pi * x.x) * std::sin(pi * x.y);
  };
  p.modulus = LipschitzModulus::zero();
  p.u0 = [](Point x) { return std::sin(pi * x.x) * std::sin(pi * x.y); };
  p.lap_u0 = [](Point x) { return -2.0 * pi * pi * std::sin(pi * x.x) * std::sin(pi * x.y); };
  p.final_time = 0.1;
  p.exact = [](Point x, double t) { return std::exp(-t) * std::sin(pi * x.x) * std::sin(pi * x.y); };
  return p;
}

}  // namespace

ProblemSpec builtin(std::string_view name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  if (name == "example3") return example3();
  if (name == "heat_decay") return heat_decay();
  if (name == "manufactured_linear") return manufactured_linear();
  throw CatalogError("unknown problem '" + std::string(name) + "'");
}

ModulusReport modulus_check(const ProblemSpec& spec, std::size_t n_samples, std::uint64_t seed, double value_bound) {
  std::mt19937_64 rng(seed);
  const Rectangle& d = spec.domain;
  std::uniform_real_distribution<double> ux(d.x_min, d.x_max), uy(d.y_min, d.y_max);
  std::uniform_real_distribution<double> ut(0.0, std::min(std::isfinite(spec.final_time) ? spec.final_time : 1.0, 1.0));
  std::uniform_real_distribution<double> uv(-value_bound, value_bound);
  ModulusReport rep;
  rep.samples = n_samples;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Point x{ux(rng), uy(rng)};
    const double t = ut(rng), v = uv(rng), w = uv(rng);
    const double lhs = std::fabs(spec.f(x, t, v) - spec.f(x, t, w));
    const double rhs = spec.modulus(t, std::fabs(v), std::fabs(w)) * std::fabs(v - w);
    // Rounding in f itself scales with the magnitude of its values.
    const double slack = 1e-12 * (1.0 + rhs + std::fabs(spec.f(x, t, v)) + std::fabs(spec.f(x, t, w)));
    if (lhs > rhs + slack) rep.violations.push_back({t, v, w, x, lhs, rhs});
  }
  return rep;
}

}  // namespace semiheat
