#pragma once

// Data-parallel inner loops over level-set fields. Every kernel has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant. The variant
// is chosen once at first use from CPUID; SHAPEMC_SIMD=scalar in the
// environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace shapemc::simd {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i (a[i] - b[i])^2
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // out[i] = a[i] + alpha * b[i]
  void (*axpy)(double* out, const double* a, const double* b, double alpha, std::size_t n);
  // acc[i] += w * (target[i] - base[i])
  void (*accumulate_difference)(double* acc, const double* target, const double* base, double w, std::size_t n);
  // max_i |a[i]|
  double (*max_abs)(const double* a, std::size_t n);
};

const KernelTable& scalar_kernels();
// Null when the translation unit was built without AVX2 support.
const KernelTable* avx2_kernels();

bool cpu_supports_avx2();

// The table in use for this process.
const KernelTable& active();

std::string_view isa_name(Isa isa);

}  // namespace shapemc::simd
