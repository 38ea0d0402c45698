#pragma once

// Similarity-transform alignment of binary shapes and level-set fields.
//
// A Pose maps points of the moving frame into the reference frame:
//   T(x) = c + t + s * R(theta) * (x - c),   c = grid center, s = exp(log_scale)
// apply_pose resamples a field so that out(y) = in(T^-1(y)).

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shapemc/grid.hpp"

namespace shapemc {

struct Pose {
  double tx = 0.0;  // columns
  double ty = 0.0;  // rows
  double theta = 0.0;
  double log_scale = 0.0;

  double scale() const;
  Pose inverse() const;
  // Normalizes theta into (-pi, pi].
  Pose normalized() const;
};

struct AlignmentOptions {
  double min_scale = 0.25;
  double max_scale = 4.0;
  // Half-width of the coarse rotation sweep, radians; 0 disables rotation.
  double max_rotation = 0.7853981633974483;
  double rotation_step = 0.017453292519943295;
  bool estimate_scale = true;
};

// Number of pixels where the transformed moving mask and the fixed mask disagree.
std::size_t symmetric_difference(const BinaryMask& a, const BinaryMask& b);

Pose estimate_pose(const BinaryMask& moving, const BinaryMask& fixed, const AlignmentOptions& options = {});

// Nearest-neighbour resampling; outside the source frame reads as background.
BinaryMask apply_pose(const BinaryMask& mask, const Pose& pose);
// Bilinear resampling with values multiplied by the pose scale. Samples
// falling outside the source frame are extended by their distance to it.
SignedDistanceField apply_pose(const SignedDistanceField& sdf, const Pose& pose);

struct AlignedShape {
  std::string id;
  int class_id = 0;
  BinaryMask mask;
  SignedDistanceField sdf;
  Pose pose_from_raw;
};

struct ShapeClass {
  std::string name;
  std::vector<AlignedShape> shapes;
};

class TrainingSet {
 public:
  TrainingSet(GridDims dims, std::vector<ShapeClass> classes, KernelParams kernel, std::string reference_id);

  GridDims dims() const { return dims_; }
  const std::vector<ShapeClass>& classes() const { return classes_; }
  int class_count() const { return static_cast<int>(classes_.size()); }
  const ShapeClass& shape_class(int class_id) const;
  KernelParams kernel() const { return kernel_; }
  const std::string& reference_id() const { return reference_id_; }
  const AlignedShape& reference() const;

  // All shapes in class order; class i occupies [class_offset(i), class_offset(i+1)).
  std::size_t shape_count() const { return flat_.size(); }
  const AlignedShape& flat_shape(std::size_t k) const {
    return classes_[flat_[k].first].shapes[flat_[k].second];
  }
  std::size_t class_offset(int class_id) const { return offsets_.at(class_id); }

  // Same shapes, different kernel size.
  TrainingSet with_sigma(double sigma) const;

 private:
  GridDims dims_;
  std::vector<ShapeClass> classes_;
  KernelParams kernel_;
  std::string reference_id_;
  std::vector<std::pair<int, int>> flat_;
  std::vector<std::size_t> offsets_;

  void index();
};

struct RawShape {
  std::string id;
  std::string class_name;
  BinaryMask mask;
};

struct SigmaRule {
  // When set, used verbatim; otherwise the mean nearest-neighbour L2
  // distance between training SDFs, pooled across classes.
  std::optional<double> fixed_sigma;
};

double mean_nearest_neighbor_distance(const std::vector<SignedDistanceField>& fields);

// Classes are numbered in order of first appearance of their name. The
// reference is raw[reference_index]; every other shape is aligned to it.
TrainingSet align_training_set(const std::vector<RawShape>& raw, const SigmaRule& rule = {},
                               const AlignmentOptions& options = {}, std::size_t reference_index = 0);

struct AlignedCurve {
  SignedDistanceField sdf;  // in the training frame, reinitialized
  Pose pose;                // image frame -> training frame
};

AlignedCurve align_to_training(const SignedDistanceField& current, const TrainingSet& ts,
                               const AlignmentOptions& options = {});

}  // namespace shapemc
