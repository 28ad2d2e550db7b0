#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "semiheat/driver.hpp"
#include "semiheat/problems.hpp"

namespace semiheat::cli {

// Run configuration. The file format is line oriented:
//
//   # comment
//   [problem]
//   name = example1
//
// Sections and keys:
//   [problem]         name (required), a, final_time, blowup
//   [discretization]  degree (3), initial_level (3), min_level (= initial_level),
//                     max_level (12), k1 (0.05), time_quad (3), c_inf (1), max_steps
//   [tolerances]      stol_plus (0.1), stol_minus (stol_plus/16), ttol_plus (0.1),
//                     ttol_minus (ttol_plus/16), scale_by_delta (true),
//                     stol_ratio (unset: stol fixed across a sweep),
//                     sweep (comma list of ttol_plus values) or sweep_base + sweep_count
//   [output]          dir (out), dump_every (0 = never)
struct RunConfig {
  std::string problem;
  std::optional<double> a, final_time;
  std::optional<bool> blowup;

  int degree = 3;
  std::uint32_t initial_level = 3;
  std::optional<std::uint32_t> min_level;
  std::uint32_t max_level = 12;
  double k1 = 0.05;
  int time_quad = 3;
  double c_inf = 1.0;
  std::size_t max_steps = 1000000;

  double stol_plus = 0.1;
  std::optional<double> stol_minus;
  double ttol_plus = 0.1;
  std::optional<double> ttol_minus;
  bool scale_by_delta = true;
  std::optional<double> stol_ratio;
  std::vector<double> sweep;

  std::string out_dir = "out";
  std::size_t dump_every = 0;

  bool operator==(const RunConfig&) const = default;

  ProblemSpec make_problem() const;
  DriverConfig driver() const;
  Tolerances tolerances() const;
  // Tolerances for one sweep row with the given ttol_plus.
  Tolerances tolerances_for(double ttol_plus) const;
};

// Throws ConfigError carrying the offending line number.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);
std::string emit_config(const RunConfig& cfg);

}  // namespace semiheat::cli
