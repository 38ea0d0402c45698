#include <cstdlib>
#include <string_view>

#include "shapemc/simd/kernels.hpp"

namespace shapemc::simd {

bool cpu_supports_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable& select_table() {
  if (const char* forced = std::getenv("SHAPEMC_SIMD"); forced != nullptr && std::string_view(forced) == "scalar") {
    return scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels(); t != nullptr && cpu_supports_avx2()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace shapemc::simd
