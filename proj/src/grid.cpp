#include "shapemc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "shapemc/error.hpp"
#include "shapemc/simd/kernels.hpp"

namespace shapemc {

void validate(GridDims dims) {
  if (dims.height < 1 || dims.width < 1) {
    throw InvalidArgument("grid dims must be at least 1x1, got " + std::to_string(dims.height) + "x" +
                          std::to_string(dims.width));
  }
}

void require_same_dims(GridDims a, GridDims b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                            " vs " + std::to_string(b.height) + "x" + std::to_string(b.width));
  }
}

ScalarField::ScalarField(GridDims dims, double fill) : dims_(dims), values_(dims.size(), fill) { validate(dims); }

ScalarField::ScalarField(GridDims dims, std::vector<double> values) : dims_(dims), values_(std::move(values)) {
  validate(dims);
  if (values_.size() != dims.size()) throw InvalidArgument("scalar field value count does not match dims");
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

BinaryMask::BinaryMask(GridDims dims, bool fill) : dims_(dims), inside_(dims.size(), fill ? 1 : 0) {
  validate(dims);
}

BinaryMask::BinaryMask(GridDims dims, std::vector<std::uint8_t> inside) : dims_(dims), inside_(std::move(inside)) {
  validate(dims);
  if (inside_.size() != dims.size()) throw InvalidArgument("mask value count does not match dims");
  for (auto& v : inside_) v = v != 0 ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(inside_.begin(), inside_.end(), std::uint8_t{1}));
}

bool BinaryMask::non_degenerate() const {
  const std::size_t c = count();
  return c > 0 && c < inside_.size();
}

bool SignedDistanceField::has_both_signs() const {
  bool neg = false;
  bool pos = false;
  for (double v : phi_.values()) {
    neg = neg || v < 0.0;
    pos = pos || v >= 0.0;
  }
  return neg && pos;
}

namespace {

constexpr double kFar = 1e20;

// Lower envelope of parabolas for one line of n samples. v and z are
// scratch buffers of size n and n+1.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto intersect = [&](int q, int p) {
    return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
  };
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = static_cast<double>(q - v[k]);
    d[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

std::vector<double> squared_edt(GridDims dims, std::span<const std::uint8_t> feature) {
  validate(dims);
  if (feature.size() != dims.size()) throw InvalidArgument("feature map size does not match dims");
  const int h = dims.height;
  const int w = dims.width;
  const int longest = std::max(h, w);
  std::vector<double> grid(dims.size());
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = feature[i] != 0 ? 0.0 : kFar;

  std::vector<int> v(longest);
  std::vector<double> z(longest + 1);
  std::vector<double> in(longest);
  std::vector<double> out(longest);

  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) in[r] = grid[dims.index(r, c)];
    edt_1d(in.data(), out.data(), h, v, z);
    for (int r = 0; r < h; ++r) grid[dims.index(r, c)] = out[r];
  }
  for (int r = 0; r < h; ++r) {
    double* row = grid.data() + dims.index(r, 0);
    std::copy(row, row + w, in.begin());
    edt_1d(in.data(), row, w, v, z);
  }
  for (double& g : grid) {
    if (g >= kFar * 0.5) g = std::numeric_limits<double>::infinity();
  }
  return grid;
}

SignedDistanceField mask_to_sdf(const BinaryMask& mask) {
  if (!mask.non_degenerate()) {
    throw DegenerateShape("mask_to_sdf: mask needs at least one inside and one outside pixel");
  }
  const GridDims dims = mask.dims();
  std::vector<std::uint8_t> outside(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) outside[i] = mask[i] ? 0 : 1;
  const std::vector<double> to_inside = squared_edt(dims, mask.data());
  const std::vector<double> to_outside = squared_edt(dims, outside);

  ScalarField phi(dims);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    phi[i] = mask[i] ? -std::sqrt(to_outside[i]) : std::sqrt(to_inside[i]);
  }
  return SignedDistanceField(std::move(phi));
}

BinaryMask sdf_to_mask(const SignedDistanceField& sdf) {
  BinaryMask mask(sdf.dims());
  for (std::size_t i = 0; i < sdf.size(); ++i) mask.set(i, sdf[i] < 0.0);
  return mask;
}

SignedDistanceField reinitialize(const SignedDistanceField& sdf) {
  const BinaryMask mask = sdf_to_mask(sdf);
  if (!mask.non_degenerate()) throw DegenerateShape("reinitialize: field has a single sign");
  return mask_to_sdf(mask);
}

double squared_l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("squared_l2_distance: length mismatch");
  return simd::active().squared_distance(a.data(), b.data(), a.size());
}

double squared_l2_distance(std::span<const double> a, std::span<const double> b, GridDims dims, PixelRect rect) {
  if (a.size() != dims.size() || b.size() != dims.size()) {
    throw DimensionMismatch("squared_l2_distance: length mismatch");
  }
  if (rect.row < 0 || rect.col < 0 || rect.row + rect.height > dims.height || rect.col + rect.width > dims.width) {
    throw InvalidArgument("squared_l2_distance: rect outside the grid");
  }
  const auto& k = simd::active();
  if (rect.width == dims.width) {
    const std::size_t begin = dims.index(rect.row, 0);
    return k.squared_distance(a.data() + begin, b.data() + begin, rect.area());
  }
  double sum = 0.0;
  for (int r = rect.row; r < rect.row + rect.height; ++r) {
    const std::size_t begin = dims.index(r, rect.col);
    sum += k.squared_distance(a.data() + begin, b.data() + begin, static_cast<std::size_t>(rect.width));
  }
  return sum;
}

double l2_distance(const SignedDistanceField& a, const SignedDistanceField& b) {
  require_same_dims(a.dims(), b.dims(), "l2_distance");
  return std::sqrt(squared_l2_distance(a.values(), b.values()));
}

double gaussian_kernel(double d, KernelParams params) { return std::exp(log_gaussian_kernel(d, params)); }

double log_gaussian_kernel(double d, KernelParams params) {
  if (!(d >= 0.0)) throw InvalidArgument("gaussian_kernel: distance must be non-negative");
  return log_gaussian_kernel_sq(d * d, params.sigma);
}

double log_gaussian_kernel_sq(double d_squared, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("gaussian_kernel: sigma must be positive");
  return -d_squared / (2.0 * sigma * sigma) - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace shapemc
