#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semiheat/driver.hpp"
#include "semiheat/fespace.hpp"

namespace semiheat {

// Ledger CSV. Header:
//   m,t_m,k_m,dofs_m,linf_U_m,eta_T,xi,xi_prime,psi,delta,r,r_tilde,bound
// Reals use %.17g; delta, r, r_tilde and bound are empty for a step whose
// fixed-point parameter does not exist.
void write_ledger_csv(std::ostream& os, const EstimatorLedger& ledger);

struct LedgerRow {
  std::size_t m = 0;
  double t = 0, k = 0;
  std::size_t dofs = 0;
  double linf_U = 0, eta_T = 0, xi = 0, xi_prime = 0, psi = 0;
  std::optional<double> delta, r, r_tilde, bound;
};
std::vector<LedgerRow> read_ledger_csv(std::istream& is);

// One line: key=value pairs separated by spaces.
std::string run_summary(const RunResult& result);

// Legacy ASCII VTK unstructured grid of the leaves of the field's mesh:
// four points per leaf (corners, counter-clockwise from the south-west), one
// VTK_QUAD (type 9) per leaf, POINT_DATA "U" with the field at each corner,
// CELL_DATA "level", "U_max" (sampled max |U| on the leaf) and, when given,
// one extra cell scalar.
void write_vtk(std::ostream& os, const Field& field, const std::string& extra_name = {},
               std::span<const double> extra = {});

}  // namespace semiheat
