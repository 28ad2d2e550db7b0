#include "semiheat/io.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "semiheat/errors.hpp"
#include "semiheat/kernels.hpp"

namespace semiheat {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

void write_ledger_csv(std::ostream& os, const EstimatorLedger& ledger) {
  os << "m,t_m,k_m,dofs_m,linf_U_m,eta_T,xi,xi_prime,psi,delta,r,r_tilde,bound\n";
  for (const auto& s : ledger.steps()) {
    const bool ok = s.delta.has_value();
    os << s.m << ',' << fmt(s.t) << ',' << fmt(s.k) << ',' << s.dofs << ',' << fmt(s.linf_U) << ',' << fmt(s.eta_T)
       << ',' << fmt(s.xi) << ',' << fmt(s.xi_prime) << ',' << fmt(s.psi) << ',' << fmt_opt(s.delta) << ','
       << (ok ? fmt(s.r) : "") << ',' << (ok ? fmt(s.r_tilde) : "") << ',' << (ok ? fmt(s.bound) : "") << '\n';
  }
}

std::vector<LedgerRow> read_ledger_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("empty ledger file");
  std::vector<LedgerRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 13) throw Error("ledger line " + std::to_string(lineno) + ": expected 13 columns");
    LedgerRow r;
    r.m = std::stoul(f[0]);
    r.t = std::stod(f[1]);
    r.k = std::stod(f[2]);
    r.dofs = std::stoul(f[3]);
    r.linf_U = std::stod(f[4]);
    r.eta_T = std::stod(f[5]);
    r.xi = std::stod(f[6]);
    r.xi_prime = std::stod(f[7]);
    r.psi = std::stod(f[8]);
    r.delta = parse_opt(f[9]);
    r.r = parse_opt(f[10]);
    r.r_tilde = parse_opt(f[11]);
    r.bound = parse_opt(f[12]);
    rows.push_back(r);
  }
  return rows;
}

std::string run_summary(const RunResult& res) {
  std::ostringstream os;
  os << "steps=" << res.accepted() << " final_time=" << fmt(res.final_time()) << " linf_U=" << fmt(res.final_norm());
  std::string t_inf;
  if (res.steps.size() >= 2) {
    const auto& a = res.steps[res.steps.size() - 2];
    const auto& b = res.steps.back();
    try {
      t_inf = fmt(extrapolate_blowup(a.t, a.linf_U, b.t, b.linf_U));
    } catch (const ExtrapolationError&) {
    }
  }
  os << " t_inf=" << t_inf << " avg_dofs=" << fmt(weighted_avg_dofs(res.steps));
  std::string bound;
  try {
    bound = fmt(res.bound());
  } catch (const BoundInvalidError&) {
  }
  os << " bound=" << bound;
  os << " stop=" << to_string(res.stop);
  return os.str();
}

void write_vtk(std::ostream& os, const Field& field, const std::string& extra_name, std::span<const double> extra) {
  const Mesh& m = field.space().mesh();
  const std::size_t n = m.size();
  if (!extra.empty() && extra.size() != n) throw DomainError("cell scalar must have one value per leaf");
  os << "# vtk DataFile Version 3.0\nsemiheat field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << 4 * n << " double\n";
  const auto leaves = m.leaves();
  for (const auto& c : leaves) {
    const Box b = m.box(c);
    os << fmt(b.x0) << ' ' << fmt(b.y0) << " 0\n"
       << fmt(b.x0 + b.hx) << ' ' << fmt(b.y0) << " 0\n"
       << fmt(b.x0 + b.hx) << ' ' << fmt(b.y0 + b.hy) << " 0\n"
       << fmt(b.x0) << ' ' << fmt(b.y0 + b.hy) << " 0\n";
  }
  os << "CELLS " << n << ' ' << 5 * n << '\n';
  for (std::size_t i = 0; i < n; ++i)
    os << "4 " << 4 * i << ' ' << 4 * i + 1 << ' ' << 4 * i + 2 << ' ' << 4 * i + 3 << '\n';
  os << "CELL_TYPES " << n << '\n';
  for (std::size_t i = 0; i < n; ++i) os << "9\n";

  const double corners[2] = {0.0, 1.0};
  const auto& pts = field.space().sample_rule().points;
  GridSamples g;
  std::vector<double> cmax(n);
  os << "POINT_DATA " << 4 * n << "\nSCALARS U double 1\nLOOKUP_TABLE default\n";
  for (std::size_t i = 0; i < n; ++i) {
    field.sample_grid(leaves[i], corners, corners, kValue, g);
    os << fmt(g.v[0]) << '\n' << fmt(g.v[1]) << '\n' << fmt(g.v[3]) << '\n' << fmt(g.v[2]) << '\n';
    field.sample_grid(leaves[i], pts, pts, kValue, g);
    cmax[i] = kernels::max_abs(g.v);
  }
  os << "CELL_DATA " << n << "\nSCALARS level int 1\nLOOKUP_TABLE default\n";
  for (const auto& c : leaves) os << c.level << '\n';
  os << "SCALARS U_max double 1\nLOOKUP_TABLE default\n";
  for (double v : cmax) os << fmt(v) << '\n';
  if (!extra.empty()) {
    os << "SCALARS " << (extra_name.empty() ? "indicator" : extra_name) << " double 1\nLOOKUP_TABLE default\n";
    for (double v : extra) os << fmt(v) << '\n';
  }
}

}  // namespace semiheat
