#include "shapemc/simd/kernels.hpp"

#include <cmath>

namespace shapemc::simd {
namespace {

double squared_distance_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

void axpy_scalar(double* out, const double* a, const double* b, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + alpha * b[i];
}

void accumulate_difference_scalar(double* acc, const double* target, const double* base, double w,
                                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += w * (target[i] - base[i]);
}

double max_abs_scalar(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::fmax(m, std::fabs(a[i]));
  return m;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::scalar, squared_distance_scalar, axpy_scalar, accumulate_difference_scalar,
                                 max_abs_scalar};
  return table;
}

}  // namespace shapemc::simd
