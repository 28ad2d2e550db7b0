#include <doctest.h>

#include <cmath>
#include <sstream>

#include "semiheat/errors.hpp"
#include "semiheat/io.hpp"
#include "test_support.hpp"

using namespace semiheat;

TEST_CASE("ledger CSV round trip") {
  EstimatorLedger L(1.0, false);
  L.set_initial(0.01, 0.02);
  StepRecord a;
  a.t = 0.1;
  a.k = 0.1;
  a.dofs = 81;
  a.linf_U = 1.0 / 3.0;
  a.eta_T = 1e-3;
  a.xi = 2e-4;
  a.xi_prime = 3e-5;
  a.psi = 0.07;
  a.delta = 1.25;
  a.r = std::exp(0.1);
  L.push(a);
  StepRecord b = a;
  b.t = 0.15;
  b.delta.reset();
  L.push(b);

  std::stringstream ss;
  write_ledger_csv(ss, L);
  std::string header;
  std::getline(ss, header);
  CHECK(header == "m,t_m,k_m,dofs_m,linf_U_m,eta_T,xi,xi_prime,psi,delta,r,r_tilde,bound");
  ss.seekg(0);
  const auto rows = read_ledger_csv(ss);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].m == 1);
  CHECK(rows[0].linf_U == a.linf_U);
  CHECK(rows[0].r == a.r);
  CHECK(*rows[0].bound == L.steps()[0].bound);
  CHECK(rows[1].m == 2);
  CHECK_FALSE(rows[1].delta.has_value());
  CHECK_FALSE(rows[1].bound.has_value());

  std::istringstream bad("h\n1,2,3\n");
  CHECK_THROWS_AS(read_ledger_csv(bad), Error);
  std::istringstream empty("");
  CHECK_THROWS_AS(read_ledger_csv(empty), Error);
}

TEST_CASE("VTK structure") {
  auto g = test::rng(61);
  const Mesh m = test::random_mesh(g, {0, 1, 0, 1}, 1, 2, 0.4);
  const auto s = Space::make(test::share(m), 2);
  const Field U = Field::interpolate_function(s, [](Point x) { return x.x + 2 * x.y; });
  std::vector<double> extra(m.size(), 0.5);
  std::ostringstream os;
  write_vtk(os, U, "eta", extra);
  const std::string out = os.str();
  const std::size_t n = m.size();
  CHECK(out.find("POINTS " + std::to_string(4 * n) + " double") != std::string::npos);
  CHECK(out.find("CELLS " + std::to_string(n) + " " + std::to_string(5 * n)) != std::string::npos);
  CHECK(out.find("CELL_TYPES " + std::to_string(n)) != std::string::npos);
  CHECK(out.find("SCALARS eta double 1") != std::string::npos);
  CHECK(out.find("SCALARS level int 1") != std::string::npos);

  // Corner values match the linear field at the corner points.
  std::istringstream is(out);
  std::string line;
  while (std::getline(is, line) && line.rfind("POINTS", 0) != 0) {
  }
  std::vector<Point> pts(4 * n);
  for (auto& p : pts) {
    double z;
    is >> p.x >> p.y >> z;
  }
  while (std::getline(is, line) && line.rfind("LOOKUP_TABLE", 0) != 0) {
  }
  for (const auto& p : pts) {
    double v;
    is >> v;
    CHECK(v == doctest::Approx(p.x + 2 * p.y));
  }
  CHECK_THROWS_AS(write_vtk(os, U, "bad", std::vector<double>(n + 1)), DomainError);
}

TEST_CASE("run summary line") {
  const auto mesh = test::share(Mesh::uniform({0, 1, 0, 1}, 2));
  const RunResult res = run_uniform(builtin("heat_decay"), mesh, 1, 0.05, 0.1);
  const std::string s = run_summary(res);
  CHECK(s.find("steps=2 ") == 0);
  CHECK(s.find("final_time=0.10000000000000001") != std::string::npos);
  // Decaying norms give no extrapolated blow-up time.
  CHECK(s.find(" t_inf= ") != std::string::npos);
  CHECK(s.find("stop=final-time") != std::string::npos);
}
