// semiheat: adaptive solver front end.
//
//   semiheat solve --config FILE [--ttol X] [--stol X] [--degree P] [--out DIR]
//   semiheat sweep --config FILE [--out DIR]
//   semiheat report --in DIR
//
// Exit status: 0 completed, 2 stopped because the fixed-point parameter did
// not exist, 1 error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "semiheat/cli/config.hpp"
#include "semiheat/cli/sweep.hpp"
#include "semiheat/errors.hpp"
#include "semiheat/io.hpp"
#include "semiheat/kernels.hpp"

namespace fs = std::filesystem;
using namespace semiheat;

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

int exit_code(StopReason r) { return r == StopReason::DeltaNonexistent ? 2 : 0; }

int cmd_solve(cli::RunConfig cfg, std::optional<double> ttol, std::optional<double> stol,
              std::optional<int> degree, std::optional<std::string> out) {
  if (ttol) {
    cfg.ttol_plus = *ttol;
    cfg.ttol_minus.reset();
  }
  if (stol) {
    cfg.stol_plus = *stol;
    cfg.stol_minus.reset();
  }
  if (degree) cfg.degree = *degree;
  if (out) cfg.out_dir = *out;
  cfg = cli::parse_config(cli::emit_config(cfg));  // revalidate overrides

  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  const ProblemSpec problem = cfg.make_problem();
  const std::size_t every = cfg.dump_every;
  auto on_step = [&](const StepEvent& ev) {
    std::fprintf(stderr, "step %zu t=%.6g k=%.3g dofs=%zu |U|=%.6g eta_T=%.3g delta=%.6g\n", ev.summary.m,
                 ev.summary.t, ev.summary.k, ev.summary.dofs, ev.summary.linf_U, ev.record.eta_T,
                 ev.record.delta.value_or(NAN));
    if (every > 0 && ev.summary.m % every == 0) {
      char name[64];
      std::snprintf(name, sizeof name, "field_%06zu.vtk", ev.summary.m);
      auto f = open_out(dir / name);
      write_vtk(f, ev.U);
    }
  };
  const RunResult res = run_adaptive(problem, cfg.tolerances(), cfg.driver(), on_step);
  {
    auto f = open_out(dir / "ledger.csv");
    write_ledger_csv(f, res.ledger);
  }
  {
    auto f = open_out(dir / "steps.csv");
    f << "m,t_m,k_m,dofs_m,overlay_dofs_m,cells_m,linf_U_m\n";
    for (const auto& s : res.steps) {
      char line[256];
      std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%zu,%zu,%zu,%.17g\n", s.m, s.t, s.k, s.dofs,
                    s.overlay_dofs, s.cells, s.linf_U);
      f << line;
    }
  }
  if (res.final_field) {
    auto f = open_out(dir / "final.vtk");
    write_vtk(f, *res.final_field);
  }
  const std::string summary = run_summary(res);
  {
    auto f = open_out(dir / "summary.txt");
    f << summary << '\n';
    if (!res.message.empty()) f << res.message << '\n';
  }
  std::cout << summary << '\n';
  if (!res.message.empty()) std::cout << res.message << '\n';
  return exit_code(res.stop);
}

int cmd_sweep(cli::RunConfig cfg, std::optional<std::string> out) {
  if (out) cfg.out_dir = *out;
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  auto on_row = [&](std::size_t i, const cli::SweepRow& row, const RunResult* res) {
    std::fprintf(stderr, "row %zu ttol=%.6g steps=%zu T=%.6g |U|=%.6g stop=%s %s\n", i + 1, row.ttol_plus,
                 row.steps, row.final_time, row.linf_U, row.stop.c_str(), row.error.c_str());
    if (!res) return;
    char name[64];
    std::snprintf(name, sizeof name, "ledger_%02zu.csv", i + 1);
    auto f = open_out(dir / name);
    write_ledger_csv(f, res->ledger);
  };
  const cli::SweepTable table = cli::run_sweep(cfg, on_row);
  {
    auto f = open_out(dir / "sweep.csv");
    cli::write_sweep_csv(f, table);
  }
  cli::write_sweep_csv(std::cout, table);
  bool any_error = false;
  for (const auto& r : table.rows) any_error |= !r.error.empty();
  return any_error ? 1 : 0;
}

int cmd_report(const std::string& in) {
  const fs::path dir = in;
  bool found = false;
  if (fs::exists(dir / "summary.txt")) {
    std::ifstream f(dir / "summary.txt");
    std::cout << f.rdbuf();
    found = true;
  }
  if (fs::exists(dir / "ledger.csv")) {
    std::ifstream f(dir / "ledger.csv");
    const auto rows = read_ledger_csv(f);
    found = true;
    if (rows.size() >= 2) {
      const auto& a = rows[rows.size() - 2];
      const auto& b = rows.back();
      try {
        const double t_inf = extrapolate_blowup(a.t, a.linf_U, b.t, b.linf_U);
        std::vector<double> ts, us;
        for (const auto& r : rows) {
          if (!r.delta) continue;
          ts.push_back(r.t);
          us.push_back(r.linf_U);
        }
        std::printf("ledger t_inf=%.17g norm_vs_distance_slope=%.6g\n", t_inf,
                    cli::asymptotic_slope(ts, us, t_inf));
      } catch (const Error& e) {
        std::printf("ledger rows=%zu (no blow-up fit: %s)\n", rows.size(), e.what());
      }
    }
  }
  if (fs::exists(dir / "sweep.csv")) {
    std::ifstream f(dir / "sweep.csv");
    const auto table = cli::read_sweep_csv(f);
    found = true;
    cli::write_sweep_csv(std::cout, table);
    if (table.t_inf) {
      try {
        std::printf("sweep t_inf=%.17g rate_slope=%.6g\n", *table.t_inf, cli::blowup_rate_slope(table, *table.t_inf));
      } catch (const FitError& e) {
        std::printf("sweep t_inf=%.17g (no rate fit: %s)\n", *table.t_inf, e.what());
      }
    }
  }
  if (!found) throw Error("no summary.txt, ledger.csv or sweep.csv in " + in);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive space-time solver for semilinear heat equations"};
  app.require_subcommand(1);

  std::string config, in_dir;
  std::optional<double> ttol, stol;
  std::optional<int> degree;
  std::optional<std::string> out;

  auto* solve = app.add_subcommand("solve", "Run one adaptive solve");
  solve->add_option("--config", config, "Config file")->required();
  solve->add_option("--ttol", ttol, "Override ttol_plus");
  solve->add_option("--stol", stol, "Override stol_plus");
  solve->add_option("--degree", degree, "Override polynomial degree");
  solve->add_option("--out", out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run the tolerance sweep from the config");
  sweep->add_option("--config", config, "Config file")->required();
  sweep->add_option("--out", out, "Output directory");

  auto* report = app.add_subcommand("report", "Summarise an output directory");
  report->add_option("--in", in_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    std::fprintf(stderr, "kernels: %s\n", std::string(kernels::active_name()).c_str());
    if (*solve) return cmd_solve(cli::load_config(config), ttol, stol, degree, out);
    if (*sweep) return cmd_sweep(cli::load_config(config), out);
    if (*report) return cmd_report(in_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
