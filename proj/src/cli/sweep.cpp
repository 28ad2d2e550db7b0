#include "semiheat/cli/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "semiheat/errors.hpp"

namespace semiheat::cli {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ' ';
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out(1);
  for (char c : line) {
    if (c == ',')
      out.emplace_back();
    else if (c != '\r')
      out.back().push_back(c);
  }
  return out;
}

}  // namespace

std::optional<double> extrapolate_last_two(std::span<const StepSummary> steps) {
  if (steps.size() < 2) return std::nullopt;
  const auto& a = steps[steps.size() - 2];
  const auto& b = steps.back();
  try {
    return extrapolate_blowup(a.t, a.linf_U, b.t, b.linf_U);
  } catch (const ExtrapolationError&) {
    return std::nullopt;
  }
}

SweepTable run_sweep(const RunConfig& cfg, const RowCallback& on_row) {
  if (cfg.sweep.empty()) throw ConfigError("sweep list is empty", 0);
  const ProblemSpec problem = cfg.make_problem();
  const DriverConfig dcfg = cfg.driver();
  SweepTable table;
  for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
    SweepRow row;
    const Tolerances tol = cfg.tolerances_for(cfg.sweep[i]);
    row.ttol_plus = tol.ttol_plus;
    row.stol_plus = tol.stol_plus;
    try {
      const RunResult res = run_adaptive(problem, tol, dcfg);
      row.steps = res.accepted();
      row.final_time = res.final_time();
      row.linf_U = res.final_norm();
      row.t_inf = extrapolate_last_two(res.steps);
      row.avg_dofs = weighted_avg_dofs(res.steps);
      row.stop = to_string(res.stop);
      table.rows.push_back(row);
      if (on_row) on_row(i, row, &res);
    } catch (const std::exception& e) {
      row.stop = "error";
      row.error = clean(e.what());
      table.rows.push_back(row);
      if (on_row) on_row(i, row, nullptr);
    }
  }
  table.t_inf = table.rows.back().t_inf;
  return table;
}

void write_sweep_csv(std::ostream& os, const SweepTable& t) {
  os << "ttol_plus,stol_plus,steps,final_time,linf_U,t_inf,avg_dofs,stop,error\n";
  for (const auto& r : t.rows)
    os << fmt(r.ttol_plus) << ',' << fmt(r.stol_plus) << ',' << r.steps << ',' << fmt(r.final_time) << ','
       << fmt(r.linf_U) << ',' << (r.t_inf ? fmt(*r.t_inf) : "") << ',' << fmt(r.avg_dofs) << ',' << r.stop << ','
       << clean(r.error) << '\n';
  os << "# t_inf=" << (t.t_inf ? fmt(*t.t_inf) : "") << '\n';
}

SweepTable read_sweep_csv(std::istream& is) {
  SweepTable t;
  std::string line;
  if (!std::getline(is, line)) throw Error("empty sweep file");
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("# t_inf=", 0) == 0) {
      const std::string v = line.substr(8);
      if (!v.empty() && v != "\r") t.t_inf = std::stod(v);
      continue;
    }
    const auto f = split(line);
    if (f.size() != 9) throw Error("sweep line " + std::to_string(lineno) + ": expected 9 columns");
    SweepRow r;
    r.ttol_plus = std::stod(f[0]);
    r.stol_plus = std::stod(f[1]);
    r.steps = std::stoul(f[2]);
    r.final_time = std::stod(f[3]);
    r.linf_U = std::stod(f[4]);
    if (!f[5].empty()) r.t_inf = std::stod(f[5]);
    r.avg_dofs = std::stod(f[6]);
    r.stop = f[7];
    r.error = f[8];
    t.rows.push_back(r);
  }
  return t;
}

double fit_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw FitError("x and y lengths differ");
  if (xs.size() < 3) throw FitError("at least three points are required");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0) || !(ys[i] > 0) || !std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw FitError("values must be positive and finite");
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = std::log(xs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(ys[i]) - my);
  }
  if (!(sxx > 1e-24 * n)) throw FitError("degenerate spread in x");
  return sxy / sxx;
}

double blowup_rate_slope(const SweepTable& table, double t_inf) {
  std::vector<double> xs, ys;
  for (const auto& r : table.rows) {
    if (!r.error.empty() || r.steps == 0) continue;
    xs.push_back(static_cast<double>(r.steps));
    ys.push_back(std::abs(t_inf - r.final_time));
  }
  return fit_slope(xs, ys);
}

double asymptotic_slope(std::span<const double> times, std::span<const double> norms, double t_inf,
                        std::size_t count) {
  if (times.size() != norms.size()) throw FitError("time and norm lengths differ");
  const std::size_t n = std::min(count, times.size());
  std::vector<double> xs, ys;
  for (std::size_t i = times.size() - n; i < times.size(); ++i) {
    xs.push_back(std::abs(t_inf - times[i]));
    ys.push_back(norms[i]);
  }
  return fit_slope(xs, ys);
}

}  // namespace semiheat::cli
