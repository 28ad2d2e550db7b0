#include <cstdlib>
#include <cstring>

#include "semiheat/kernels.hpp"

namespace semiheat::kernels {

#if defined(SEMIHEAT_BUILD_AVX2)
namespace detail {
KernelTable make_avx2_table();
}
#endif

std::optional<KernelTable> avx2_table() {
#if defined(SEMIHEAT_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return detail::make_avx2_table();
#endif
  return std::nullopt;
}

namespace {

KernelTable select() {
  const char* env = std::getenv("SEMIHEAT_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return scalar_table();
  if (auto t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable table = select();
  return table;
}

std::string_view active_name() { return active().name; }

}  // namespace semiheat::kernels
