#include "semiheat/cli/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "semiheat/errors.hpp"

namespace semiheat::cli {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x))
    throw ConfigError("malformed real value '" + v + "'", line);
  return x;
}

long long parse_int(const std::string& v, int line) {
  errno = 0;
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE)
    throw ConfigError("malformed integer value '" + v + "'", line);
  return x;
}

std::size_t parse_count(const std::string& v, int line) {
  const long long x = parse_int(v, line);
  if (x < 0) throw ConfigError("value must be nonnegative", line);
  return static_cast<std::size_t>(x);
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  throw ConfigError("malformed boolean value '" + v + "'", line);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void validate(const RunConfig& c, int line) {
  if (c.problem.empty()) throw ConfigError("problem.name is required", line);
  if (c.degree < 1) throw ConfigError("degree must be at least 1", line);
  if (!(c.k1 > 0)) throw ConfigError("k1 must be positive", line);
  if (c.time_quad < 1) throw ConfigError("time_quad must be at least 1", line);
  if (!(c.c_inf > 0)) throw ConfigError("c_inf must be positive", line);
  if (c.a && !(*c.a > 0)) throw ConfigError("a must be positive", line);
  if (c.final_time && !(*c.final_time > 0)) throw ConfigError("final_time must be positive", line);
  if (c.max_level > CellId::max_level) throw ConfigError("max_level too large", line);
  if (c.initial_level > c.max_level) throw ConfigError("initial_level exceeds max_level", line);
  if (c.min_level && *c.min_level > c.initial_level) throw ConfigError("min_level exceeds initial_level", line);
  if (c.stol_ratio && !(*c.stol_ratio > 0)) throw ConfigError("stol_ratio must be positive", line);
  for (double s : c.sweep)
    if (!(s > 0)) throw ConfigError("sweep values must be positive", line);
  try {
    c.tolerances().validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what(), line);
  }
}

}  // namespace

ProblemSpec RunConfig::make_problem() const {
  ProblemSpec p = builtin(problem);
  if (a) p.a = *a;
  if (blowup) p.blowup = *blowup;
  if (final_time) {
    p.final_time = *final_time;
    if (!blowup) p.blowup = false;
  }
  return p;
}

DriverConfig RunConfig::driver() const {
  DriverConfig d;
  d.degree = degree;
  d.initial_level = initial_level;
  d.min_level = min_level;
  d.max_level = max_level;
  d.k1 = k1;
  d.time_quad = time_quad;
  d.c_inf = c_inf;
  d.scale_by_delta = scale_by_delta;
  d.max_steps = max_steps;
  return d;
}

Tolerances RunConfig::tolerances() const {
  return {stol_plus, stol_minus.value_or(stol_plus / 16.0), ttol_plus, ttol_minus.value_or(ttol_plus / 16.0)};
}

Tolerances RunConfig::tolerances_for(double ttol) const {
  const double ratio_t = ttol / ttol_plus;
  Tolerances t = tolerances();
  t.ttol_plus = ttol;
  t.ttol_minus *= ratio_t;
  if (stol_ratio) {
    const double sp = *stol_ratio * ttol;
    t.stol_minus *= sp / t.stol_plus;
    t.stol_plus = sp;
  }
  return t;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::string section;
  std::optional<double> sweep_base;
  std::optional<std::size_t> sweep_count;
  bool explicit_sweep = false;
  int lineno = 0, last_line = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    last_line = lineno;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", lineno);
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section != "problem" && section != "discretization" && section != "tolerances" && section != "output")
        throw ConfigError("unknown section [" + section + "]", lineno);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (section.empty()) throw ConfigError("key '" + key + "' outside any section", lineno);
    const std::string full = section + "." + key;
    if (full == "problem.name") {
      if (val.empty()) throw ConfigError("empty problem name", lineno);
      c.problem = val;
    } else if (full == "problem.a") {
      c.a = parse_real(val, lineno);
    } else if (full == "problem.final_time") {
      c.final_time = parse_real(val, lineno);
    } else if (full == "problem.blowup") {
      c.blowup = parse_bool(val, lineno);
    } else if (full == "discretization.degree") {
      c.degree = static_cast<int>(parse_int(val, lineno));
    } else if (full == "discretization.initial_level") {
      c.initial_level = static_cast<std::uint32_t>(parse_count(val, lineno));
    } else if (full == "discretization.min_level") {
      c.min_level = static_cast<std::uint32_t>(parse_count(val, lineno));
    } else if (full == "discretization.max_level") {
      c.max_level = static_cast<std::uint32_t>(parse_count(val, lineno));
    } else if (full == "discretization.k1") {
      c.k1 = parse_real(val, lineno);
    } else if (full == "discretization.time_quad") {
      c.time_quad = static_cast<int>(parse_int(val, lineno));
    } else if (full == "discretization.c_inf") {
      c.c_inf = parse_real(val, lineno);
    } else if (full == "discretization.max_steps") {
      c.max_steps = parse_count(val, lineno);
    } else if (full == "tolerances.stol_plus") {
      c.stol_plus = parse_real(val, lineno);
    } else if (full == "tolerances.stol_minus") {
      c.stol_minus = parse_real(val, lineno);
    } else if (full == "tolerances.ttol_plus") {
      c.ttol_plus = parse_real(val, lineno);
    } else if (full == "tolerances.ttol_minus") {
      c.ttol_minus = parse_real(val, lineno);
    } else if (full == "tolerances.scale_by_delta") {
      c.scale_by_delta = parse_bool(val, lineno);
    } else if (full == "tolerances.stol_ratio") {
      c.stol_ratio = parse_real(val, lineno);
    } else if (full == "tolerances.sweep") {
      c.sweep.clear();
      std::istringstream items(val);
      std::string item;
      while (std::getline(items, item, ',')) c.sweep.push_back(parse_real(trim(item), lineno));
      explicit_sweep = true;
    } else if (full == "tolerances.sweep_base") {
      sweep_base = parse_real(val, lineno);
    } else if (full == "tolerances.sweep_count") {
      sweep_count = parse_count(val, lineno);
    } else if (full == "output.dir") {
      c.out_dir = val;
    } else if (full == "output.dump_every") {
      c.dump_every = parse_count(val, lineno);
    } else {
      throw ConfigError("unknown key '" + key + "' in [" + section + "]", lineno);
    }
  }
  if (sweep_base || sweep_count) {
    if (!sweep_base || !sweep_count) throw ConfigError("sweep_base and sweep_count must be given together", last_line);
    if (explicit_sweep) throw ConfigError("give either sweep or sweep_base/sweep_count", last_line);
    if (!(*sweep_base > 0 && *sweep_base < 1)) throw ConfigError("sweep_base must lie in (0, 1)", last_line);
    double v = 1.0;
    for (std::size_t i = 0; i < *sweep_count; ++i) c.sweep.push_back(v *= *sweep_base);
  }
  validate(c, last_line);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream os;
  os << "[problem]\nname = " << c.problem << '\n';
  if (c.a) os << "a = " << fmt(*c.a) << '\n';
  if (c.final_time) os << "final_time = " << fmt(*c.final_time) << '\n';
  if (c.blowup) os << "blowup = " << (*c.blowup ? "true" : "false") << '\n';
  os << "\n[discretization]\n"
     << "degree = " << c.degree << '\n'
     << "initial_level = " << c.initial_level << '\n';
  if (c.min_level) os << "min_level = " << *c.min_level << '\n';
  os << "max_level = " << c.max_level << '\n'
     << "k1 = " << fmt(c.k1) << '\n'
     << "time_quad = " << c.time_quad << '\n'
     << "c_inf = " << fmt(c.c_inf) << '\n'
     << "max_steps = " << c.max_steps << '\n';
  os << "\n[tolerances]\n"
     << "stol_plus = " << fmt(c.stol_plus) << '\n';
  if (c.stol_minus) os << "stol_minus = " << fmt(*c.stol_minus) << '\n';
  os << "ttol_plus = " << fmt(c.ttol_plus) << '\n';
  if (c.ttol_minus) os << "ttol_minus = " << fmt(*c.ttol_minus) << '\n';
  os << "scale_by_delta = " << (c.scale_by_delta ? "true" : "false") << '\n';
  if (c.stol_ratio) os << "stol_ratio = " << fmt(*c.stol_ratio) << '\n';
  if (!c.sweep.empty()) {
    os << "sweep = ";
    for (std::size_t i = 0; i < c.sweep.size(); ++i) os << (i ? ", " : "") << fmt(c.sweep[i]);
    os << '\n';
  }
  os << "\n[output]\ndir = " << c.out_dir << '\n' << "dump_every = " << c.dump_every << '\n';
  return os.str();
}

}  // namespace semiheat::cli
