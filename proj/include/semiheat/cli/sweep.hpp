#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semiheat/cli/config.hpp"
#include "semiheat/driver.hpp"

namespace semiheat::cli {

struct SweepRow {
  double ttol_plus = 0.0;
  double stol_plus = 0.0;
  std::size_t steps = 0;
  double final_time = 0.0;
  double linf_U = 0.0;
  // From the run's own final two steps; absent when the norms do not increase.
  std::optional<double> t_inf;
  double avg_dofs = 0.0;
  std::string stop;   // StopReason string, or "error"
  std::string error;  // empty unless the run threw
};

struct SweepTable {
  std::vector<SweepRow> rows;
  // Extrapolated from the last row's final two steps.
  std::optional<double> t_inf;
};

// Called after each row with the finished run (null when the run threw).
using RowCallback = std::function<void(std::size_t index, const SweepRow&, const RunResult*)>;

// One adaptive run per entry of cfg.sweep, in order. Throws ConfigError when
// the sweep list is empty; a failing run is recorded in its row.
SweepTable run_sweep(const RunConfig& cfg, const RowCallback& on_row = {});

// Header: ttol_plus,stol_plus,steps,final_time,linf_U,t_inf,avg_dofs,stop,error
// followed by a trailing "# t_inf=<value>" comment line.
void write_sweep_csv(std::ostream& os, const SweepTable& table);
SweepTable read_sweep_csv(std::istream& is);

// Least-squares slope of log y against log x. Throws FitError for fewer than
// three points, nonpositive values or a degenerate spread in x.
double fit_slope(std::span<const double> xs, std::span<const double> ys);

// Slope of log|T_inf - T| against log N over rows that completed.
double blowup_rate_slope(const SweepTable& table, double t_inf);

// Slope of log ||U(t)|| against log|T_inf - t| over the last `count` steps.
double asymptotic_slope(std::span<const double> times, std::span<const double> norms, double t_inf,
                        std::size_t count = 10);

std::optional<double> extrapolate_last_two(std::span<const StepSummary> steps);

}  // namespace semiheat::cli
