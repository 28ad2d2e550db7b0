#include "semiheat/kernels.hpp"

#include <cmath>

namespace semiheat::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void xpay_scalar(const double* x, double a, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + a * y[i];
}

void hadamard_scalar(const double* x, const double* y, double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

double max_abs_scalar(const double* x, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(x[i]));
  return m;
}

void csr_spmv_scalar(std::size_t n, const std::int32_t* row_ptr, const std::int32_t* cols,
                     const double* vals, const double* x, double* y) {
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::int32_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += vals[k] * x[cols[k]];
    y[r] = s;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar",        dot_scalar,     axpy_scalar,    xpay_scalar,
                                 hadamard_scalar, max_abs_scalar, csr_spmv_scalar};
  return table;
}

}  // namespace semiheat::kernels
