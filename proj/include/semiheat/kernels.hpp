#pragma once

// Vector kernels used by the linear solver and the sampled L-infinity norms.
//
// Every kernel has a portable scalar reference implementation. On x86-64 an
// AVX2/FMA variant is compiled separately and selected at first use when the
// CPU supports it. Setting SEMIHEAT_SIMD=scalar in the environment forces the
// reference path.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace semiheat::kernels {

struct KernelTable {
  const char* name;
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = x + a * y
  void (*xpay)(const double* x, double a, double* y, std::size_t n);
  // z = x * y (elementwise)
  void (*hadamard)(const double* x, const double* y, double* z, std::size_t n);
  double (*max_abs)(const double* x, std::size_t n);
  // y = A x for a CSR matrix with n rows
  void (*csr_spmv)(std::size_t n, const std::int32_t* row_ptr, const std::int32_t* cols,
                   const double* vals, const double* x, double* y);
};

const KernelTable& scalar_table();
// Present only when the variant was compiled in and the CPU supports it.
std::optional<KernelTable> avx2_table();

// The table chosen for this process.
const KernelTable& active();
std::string_view active_name();

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void xpay(std::span<const double> x, double a, std::span<double> y) {
  active().xpay(x.data(), a, y.data(), x.size());
}
inline void hadamard(std::span<const double> x, std::span<const double> y, std::span<double> z) {
  active().hadamard(x.data(), y.data(), z.data(), x.size());
}
inline double max_abs(std::span<const double> x) { return active().max_abs(x.data(), x.size()); }

}  // namespace semiheat::kernels
