#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semiheat/cli/config.hpp"
#include "semiheat/cli/sweep.hpp"
#include "semiheat/errors.hpp"
#include "test_support.hpp"

using namespace semiheat;
using namespace semiheat::cli;

namespace {

int error_line(std::string_view text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("config parse examples") {
  CHECK_THROWS_AS(parse_config(""), ConfigError);
  const RunConfig d = parse_config("[problem]\nname = heat_decay\n");
  CHECK(d.degree == 3);
  CHECK(d.c_inf == 1.0);
  CHECK(d.time_quad == 3);
  CHECK(d.scale_by_delta);

  const RunConfig t = parse_config("[problem]\nname = example1\n[tolerances]\nttol_plus = 0.25  # comment\n");
  CHECK(t.tolerances().ttol_minus == doctest::Approx(0.25 / 16));
  CHECK(t.tolerances().stol_minus == doctest::Approx(0.1 / 16));

  const RunConfig p = load_config(SEMIHEAT_PRESET_DIR "/example1.cfg");
  CHECK(p.problem == "example1");
  CHECK(p.degree == 9);
  CHECK(p.k1 == 0.05375);
  REQUIRE(p.sweep.size() == 11);
  CHECK(p.sweep[0] == 0.25);
  CHECK(p.sweep[4] == doctest::Approx(std::pow(0.25, 5)));
  const ProblemSpec e1 = p.make_problem();
  CHECK(e1.blowup);
  CHECK(e1.domain.x_min == -8.0);
  CHECK(load_config(SEMIHEAT_PRESET_DIR "/example2.cfg").degree == 6);
  CHECK(load_config(SEMIHEAT_PRESET_DIR "/example3.cfg").make_problem().final_time == 0.75);
  CHECK(load_config(SEMIHEAT_PRESET_DIR "/example1_deg4.cfg").sweep.size() == 5);
  CHECK_THROWS_AS(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST_CASE("config errors carry line numbers") {
  CHECK(error_line("[problem]\nname = x\n\n[bogus]\n") == 4);
  CHECK(error_line("name = heat_decay\n") == 1);
  CHECK(error_line("[problem]\nname = heat_decay\n[discretization]\ndegree = two\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[discretization]\nk1 = 0.1x\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[tolerances]\ncolour = red\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[tolerances]\nscale_by_delta = maybe\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[tolerances]\nsweep_base = 0.5\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[tolerances]\nsweep_base = 2\nsweep_count = 3\n") == 5);
  CHECK(error_line("[problem]\nname = heat_decay\n[discretization]\ndegree = 0\n") == 4);
  CHECK(error_line("[problem]\nname = heat_decay\n[tolerances]\nttol_plus = 0.1\nttol_minus = 0.05\n") == 5);
  CHECK(error_line("[problem\n") == 1);
  CHECK(error_line("[problem]\nname\n") == 2);
}

TEST_CASE("property: emit then parse round-trips") {
  auto g = test::rng(71);
  const auto names = builtin_names();
  for (int trial = 0; trial < 200; ++trial) {
    RunConfig c;
    c.problem = names[g() % names.size()];
    if (g() % 2) c.a = test::uniform(g, 0.01, 3);
    if (g() % 2) c.final_time = test::uniform(g, 0.01, 3);
    if (g() % 2) c.blowup = g() % 2 == 0;
    c.degree = 1 + static_cast<int>(g() % 9);
    c.max_level = 4 + static_cast<std::uint32_t>(g() % 8);
    c.initial_level = static_cast<std::uint32_t>(g() % 4);
    if (g() % 2) c.min_level = c.initial_level;
    c.k1 = test::uniform(g, 1e-4, 0.5);
    c.time_quad = 1 + static_cast<int>(g() % 5);
    c.c_inf = test::uniform(g, 0.1, 4);
    c.max_steps = 1 + g() % 100000;
    c.stol_plus = test::uniform(g, 1e-4, 1);
    if (g() % 2) c.stol_minus = c.stol_plus / test::uniform(g, 8, 1e6);
    c.ttol_plus = test::uniform(g, 1e-4, 1);
    if (g() % 2) c.ttol_minus = c.ttol_plus / test::uniform(g, 8, 1e6);
    c.scale_by_delta = g() % 2;
    if (g() % 2) c.stol_ratio = test::uniform(g, 0.01, 10);
    for (std::size_t i = g() % 5; i > 0; --i) c.sweep.push_back(test::uniform(g, 1e-6, 1));
    c.out_dir = "out/run_" + std::to_string(trial);
    c.dump_every = g() % 10;
    CHECK(parse_config(emit_config(c)) == c);
  }
}

TEST_CASE("tolerances per sweep row") {
  RunConfig c = parse_config("[problem]\nname = example1\n[tolerances]\nttol_plus = 0.25\nttol_minus = 1e-7\n");
  const Tolerances t = c.tolerances_for(0.0625);
  CHECK(t.ttol_plus == 0.0625);
  CHECK(t.ttol_minus == doctest::Approx(0.25e-7));
  CHECK(t.stol_plus == c.stol_plus);
  c.stol_ratio = 0.5;
  CHECK(c.tolerances_for(0.0625).stol_plus == doctest::Approx(0.03125));
}

TEST_CASE("slope fit examples") {
  const std::vector<double> x = {1, 2, 4, 8};
  CHECK(fit_slope(x, x) == doctest::Approx(1.0));
  const std::vector<double> x3 = {1, 3, 10}, y3 = {1, 1.0 / 3, 0.1};
  CHECK(fit_slope(x3, y3) == doctest::Approx(-1.0));

  auto g = test::rng(72);
  std::vector<double> xs, ys;
  for (int i = 0; i < 8; ++i) {
    xs.push_back(std::pow(2.0, i + 1));
    ys.push_back(3.0 * std::pow(xs.back(), -0.75) * (1.0 + test::uniform(g, -0.05, 0.05)));
  }
  CHECK(fit_slope(xs, ys) == doctest::Approx(-0.75).epsilon(0.1 / 0.75));

  CHECK_THROWS_AS(fit_slope(std::vector<double>{1, 2}, std::vector<double>{1, 2}), FitError);
  CHECK_THROWS_AS(fit_slope(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), FitError);
  CHECK_THROWS_AS(fit_slope(std::vector<double>{1, 2, 3}, std::vector<double>{1, 0, 3}), FitError);
  CHECK_THROWS_AS(fit_slope(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), FitError);

  // Exact pole: ||U|| = (T - t)^{-1}.
  std::vector<double> ts, ns;
  for (int i = 0; i < 12; ++i) {
    ts.push_back(0.2 - std::pow(0.5, i + 3));
    ns.push_back(1.0 / (0.2 - ts.back()));
  }
  CHECK(asymptotic_slope(ts, ns, 0.2) == doctest::Approx(-1.0));
}

TEST_CASE("sweep CSV round trip") {
  SweepTable t;
  SweepRow a;
  a.ttol_plus = 0.25;
  a.stol_plus = 0.005;
  a.steps = 2;
  a.final_time = 0.05375;
  a.linf_U = 11.04;
  a.t_inf = 0.31;
  a.avg_dofs = 1234.5;
  a.stop = "delta-nonexistent";
  SweepRow b = a;
  b.t_inf.reset();
  b.stop = "error";
  b.error = "solver failed";
  t.rows = {a, b};
  t.t_inf = 0.22;
  std::stringstream ss;
  write_sweep_csv(ss, t);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "ttol_plus,stol_plus,steps,final_time,linf_U,t_inf,avg_dofs,stop,error");
  ss.seekg(0);
  const SweepTable r = read_sweep_csv(ss);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].final_time == a.final_time);
  CHECK(*r.rows[0].t_inf == 0.31);
  CHECK_FALSE(r.rows[1].t_inf.has_value());
  CHECK(r.rows[1].error == "solver failed");
  CHECK(*r.t_inf == 0.22);
  CHECK_THROWS_AS(blowup_rate_slope(t, 0.3), FitError);
}

TEST_CASE("heat decay sweep reaches the final time in every row") {
  RunConfig c = parse_config(
      "[problem]\nname = heat_decay\n[discretization]\ndegree = 2\ninitial_level = 2\nmax_level = 6\nk1 = 0.05\n"
      "[tolerances]\nstol_plus = 0.05\nsweep = 0.02, 0.005, 0.00125\n");
  std::size_t seen = 0;
  const SweepTable t = run_sweep(c, [&](std::size_t i, const SweepRow&, const RunResult* res) {
    CHECK(i == seen++);
    CHECK(res != nullptr);
  });
  REQUIRE(t.rows.size() == 3);
  for (const auto& r : t.rows) {
    CHECK(r.stop == "final-time");
    CHECK(r.final_time == 0.1);
  }
  CHECK(t.rows[0].steps < t.rows[1].steps);
  CHECK(t.rows[1].steps < t.rows[2].steps);
  c.sweep.clear();
  CHECK_THROWS_AS(run_sweep(c), ConfigError);
}
