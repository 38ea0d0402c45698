#pragma once

// Pixel-grid value types shared by every module: scalar fields, binary
// masks and signed distance fields, plus the shape-space distance and
// Gaussian kernel used by the Parzen shape prior.
//
// Sign convention: phi < 0 strictly inside the curve, phi > 0 outside.
// Distances are measured in pixels between pixel centers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shapemc {

struct GridDims {
  int height = 0;
  int width = 0;

  std::size_t size() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
  }
  bool contains(int row, int col) const { return row >= 0 && row < height && col >= 0 && col < width; }

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

// Throws InvalidArgument unless height, width >= 1.
void validate(GridDims dims);

// Throws DimensionMismatch naming `what` when a != b.
void require_same_dims(GridDims a, GridDims b, const char* what);

// Axis-aligned block of pixels [row, row+height) x [col, col+width).
struct PixelRect {
  int row = 0;
  int col = 0;
  int height = 0;
  int width = 0;

  std::size_t area() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  bool contains(int r, int c) const { return r >= row && r < row + height && c >= col && c < col + width; }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

inline PixelRect full_frame(GridDims dims) { return PixelRect{0, 0, dims.height, dims.width}; }

class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridDims dims, double fill = 0.0);
  ScalarField(GridDims dims, std::vector<double> values);

  GridDims dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int row, int col) { return values_[dims_.index(row, col)]; }
  double operator()(int row, int col) const { return values_[dims_.index(row, col)]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;

  friend bool operator==(const ScalarField&, const ScalarField&) = default;

 private:
  GridDims dims_{};
  std::vector<double> values_;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(GridDims dims, bool fill = false);
  BinaryMask(GridDims dims, std::vector<std::uint8_t> inside);

  GridDims dims() const { return dims_; }
  std::size_t size() const { return inside_.size(); }

  bool operator()(int row, int col) const { return inside_[dims_.index(row, col)] != 0; }
  bool operator[](std::size_t i) const { return inside_[i] != 0; }
  void set(int row, int col, bool v) { inside_[dims_.index(row, col)] = v ? 1 : 0; }
  void set(std::size_t i, bool v) { inside_[i] = v ? 1 : 0; }

  std::span<const std::uint8_t> data() const { return inside_; }

  std::size_t count() const;
  // Both an inside and an outside pixel exist.
  bool non_degenerate() const;

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  GridDims dims_{};
  std::vector<std::uint8_t> inside_;
};

class SignedDistanceField {
 public:
  SignedDistanceField() = default;
  explicit SignedDistanceField(ScalarField phi) : phi_(std::move(phi)) {}

  GridDims dims() const { return phi_.dims(); }
  std::size_t size() const { return phi_.size(); }

  double operator()(int row, int col) const { return phi_(row, col); }
  double operator[](std::size_t i) const { return phi_[i]; }

  const ScalarField& field() const { return phi_; }
  ScalarField& field() { return phi_; }
  std::span<const double> values() const { return phi_.values(); }

  bool has_both_signs() const;

  friend bool operator==(const SignedDistanceField&, const SignedDistanceField&) = default;

 private:
  ScalarField phi_;
};

struct KernelParams {
  double sigma = 1.0;
};

// Exact Euclidean distance transform (squared), separable two-pass
// lower-envelope algorithm. out[p] = min over q with feature[q] of |p-q|^2.
// Pixels with no feature pixel anywhere get +inf.
std::vector<double> squared_edt(GridDims dims, std::span<const std::uint8_t> feature);

SignedDistanceField mask_to_sdf(const BinaryMask& mask);
BinaryMask sdf_to_mask(const SignedDistanceField& sdf);

// Re-derives an exact signed distance field from the zero level set of an
// arbitrary field. Throws DegenerateShape for single-signed input.
SignedDistanceField reinitialize(const SignedDistanceField& sdf);

double squared_l2_distance(std::span<const double> a, std::span<const double> b);
double l2_distance(const SignedDistanceField& a, const SignedDistanceField& b);
// Squared L2 distance restricted to the pixels of `rect`. A rect spanning
// full rows is reduced as one contiguous block, so the full-frame rect
// gives exactly squared_l2_distance.
double squared_l2_distance(std::span<const double> a, std::span<const double> b, GridDims dims, PixelRect rect);

double gaussian_kernel(double d, KernelParams params);
double log_gaussian_kernel(double d, KernelParams params);
// Same kernel evaluated from a squared distance.
double log_gaussian_kernel_sq(double d_squared, double sigma);

}  // namespace shapemc
