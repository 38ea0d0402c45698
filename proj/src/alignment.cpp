#include "shapemc/alignment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "shapemc/error.hpp"

namespace shapemc {

double Pose::scale() const { return std::exp(log_scale); }

Pose Pose::inverse() const {
  // T^-1(y) = c + (1/s) R(-theta) (y - c - t)  =>  t' = -(1/s) R(-theta) t
  const double s = scale();
  const double c = std::cos(theta);
  const double sn = std::sin(theta);
  Pose inv;
  inv.tx = -(c * tx + sn * ty) / s;
  inv.ty = -(-sn * tx + c * ty) / s;
  inv.theta = -theta;
  inv.log_scale = -log_scale;
  return inv.normalized();
}

Pose Pose::normalized() const {
  Pose p = *this;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  p.theta = std::remainder(p.theta, two_pi);
  if (p.theta <= -std::numbers::pi) p.theta += two_pi;
  return p;
}

namespace {

struct Point {
  double col;
  double row;
};

Point grid_center(GridDims dims) { return {(dims.width - 1) * 0.5, (dims.height - 1) * 0.5}; }

// Source-frame location read by output pixel (row, col).
struct InverseMap {
  Point center;
  double tx, ty;
  double a, b;  // (1/s) R(-theta) = [[a, b], [-b, a]]

  explicit InverseMap(GridDims dims, const Pose& pose) : center(grid_center(dims)), tx(pose.tx), ty(pose.ty) {
    const double inv_s = 1.0 / pose.scale();
    a = std::cos(pose.theta) * inv_s;
    b = std::sin(pose.theta) * inv_s;
  }

  Point operator()(int row, int col) const {
    const double dx = col - center.col - tx;
    const double dy = row - center.row - ty;
    return {center.col + a * dx + b * dy, center.row - b * dx + a * dy};
  }
};

bool is_identity(const Pose& p) { return p.tx == 0.0 && p.ty == 0.0 && p.theta == 0.0 && p.log_scale == 0.0; }

Point centroid(const BinaryMask& mask) {
  double sr = 0.0;
  double sc = 0.0;
  std::size_t n = 0;
  const GridDims dims = mask.dims();
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      if (mask(r, c)) {
        sr += r;
        sc += c;
        ++n;
      }
    }
  }
  return {sc / static_cast<double>(n), sr / static_cast<double>(n)};
}

// Translation that carries the moving centroid onto the fixed one for a given rotation and scale.
void match_centroids(Pose& pose, Point moving, Point fixed, Point center) {
  const double s = pose.scale();
  const double c = std::cos(pose.theta);
  const double sn = std::sin(pose.theta);
  const double dx = moving.col - center.col;
  const double dy = moving.row - center.row;
  pose.tx = fixed.col - center.col - s * (c * dx - sn * dy);
  pose.ty = fixed.row - center.row - s * (sn * dx + c * dy);
}

}  // namespace

std::size_t symmetric_difference(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a.dims(), b.dims(), "symmetric_difference");
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i] ? 1 : 0;
  return n;
}

BinaryMask apply_pose(const BinaryMask& mask, const Pose& pose) {
  if (is_identity(pose)) return mask;
  const GridDims dims = mask.dims();
  const InverseMap map(dims, pose);
  BinaryMask out(dims);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const Point src = map(r, c);
      const long sr = std::lround(src.row);
      const long sc = std::lround(src.col);
      if (sr >= 0 && sr < dims.height && sc >= 0 && sc < dims.width) {
        out.set(r, c, mask(static_cast<int>(sr), static_cast<int>(sc)));
      }
    }
  }
  return out;
}

SignedDistanceField apply_pose(const SignedDistanceField& sdf, const Pose& pose) {
  if (is_identity(pose)) return sdf;
  const GridDims dims = sdf.dims();
  const InverseMap map(dims, pose);
  const double s = pose.scale();
  const double max_col = dims.width - 1;
  const double max_row = dims.height - 1;
  ScalarField out(dims);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const Point src = map(r, c);
      const double col = std::clamp(src.col, 0.0, max_col);
      const double row = std::clamp(src.row, 0.0, max_row);
      const double overshoot = std::hypot(src.col - col, src.row - row);
      const int c0 = std::min(static_cast<int>(col), dims.width - 1);
      const int r0 = std::min(static_cast<int>(row), dims.height - 1);
      const int c1 = std::min(c0 + 1, dims.width - 1);
      const int r1 = std::min(r0 + 1, dims.height - 1);
      const double fc = col - c0;
      const double fr = row - r0;
      const double top = sdf(r0, c0) * (1.0 - fc) + sdf(r0, c1) * fc;
      const double bottom = sdf(r1, c0) * (1.0 - fc) + sdf(r1, c1) * fc;
      out(r, c) = s * (top * (1.0 - fr) + bottom * fr + overshoot);
    }
  }
  return SignedDistanceField(std::move(out));
}

Pose estimate_pose(const BinaryMask& moving, const BinaryMask& fixed, const AlignmentOptions& options) {
  require_same_dims(moving.dims(), fixed.dims(), "estimate_pose");
  if (!moving.non_degenerate() || !fixed.non_degenerate()) {
    throw DegenerateShape("estimate_pose: both masks need inside and outside pixels");
  }
  const Point center = grid_center(moving.dims());
  const Point cm_moving = centroid(moving);
  const Point cm_fixed = centroid(fixed);
  const double min_log = std::log(options.min_scale);
  const double max_log = std::log(options.max_scale);

  auto objective = [&](const Pose& p) { return symmetric_difference(apply_pose(moving, p), fixed); };

  const std::size_t identity_cost = objective(Pose{});

  Pose seed;
  if (options.estimate_scale) {
    const double ratio = static_cast<double>(fixed.count()) / static_cast<double>(moving.count());
    seed.log_scale = std::clamp(0.5 * std::log(ratio), min_log, max_log);
  }

  Pose best = seed;
  match_centroids(best, cm_moving, cm_fixed, center);
  std::size_t best_cost = objective(best);
  if (options.max_rotation > 0.0 && options.rotation_step > 0.0) {
    const int steps = static_cast<int>(std::floor(options.max_rotation / options.rotation_step + 1e-9));
    for (int k = -steps; k <= steps; ++k) {
      if (k == 0) continue;
      Pose p = seed;
      p.theta = k * options.rotation_step;
      match_centroids(p, cm_moving, cm_fixed, center);
      const std::size_t cost = objective(p);
      if (cost < best_cost) {
        best_cost = cost;
        best = p;
      }
    }
  }

  // Pattern search on (tx, ty, theta, log_scale) with step halving.
  std::array<double, 4> step{1.0, 1.0, options.max_rotation > 0.0 ? options.rotation_step : 0.0,
                             options.estimate_scale ? 0.02 : 0.0};
  const std::array<double, 4> min_step{1.0 / 32, 1.0 / 32, options.rotation_step / 32, 0.02 / 32};
  auto coordinate = [](Pose& p, int k) -> double& {
    switch (k) {
      case 0:
        return p.tx;
      case 1:
        return p.ty;
      case 2:
        return p.theta;
      default:
        return p.log_scale;
    }
  };
  for (int round = 0; round < 200; ++round) {
    bool improved = false;
    for (int k = 0; k < 4; ++k) {
      if (step[k] <= 0.0) continue;
      for (double dir : {1.0, -1.0}) {
        Pose p = best;
        coordinate(p, k) += dir * step[k];
        if (k == 2 && std::fabs(p.theta) > options.max_rotation + options.rotation_step) continue;
        if (k == 3 && (p.log_scale < min_log || p.log_scale > max_log)) continue;
        const std::size_t cost = objective(p);
        if (cost < best_cost) {
          best_cost = cost;
          best = p;
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      bool any = false;
      for (int k = 0; k < 4; ++k) {
        step[k] *= 0.5;
        any = any || step[k] >= min_step[k];
      }
      if (!any) break;
    }
  }

  if (identity_cost <= best_cost) return Pose{};
  return best.normalized();
}

TrainingSet::TrainingSet(GridDims dims, std::vector<ShapeClass> classes, KernelParams kernel,
                         std::string reference_id)
    : dims_(dims), classes_(std::move(classes)), kernel_(kernel), reference_id_(std::move(reference_id)) {
  validate(dims_);
  if (classes_.empty()) throw InvalidArgument("training set needs at least one class");
  if (!(kernel_.sigma > 0.0)) throw InvalidArgument("training set kernel size must be positive");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].shapes.empty()) throw InvalidArgument("training class '" + classes_[i].name + "' is empty");
    for (const AlignedShape& s : classes_[i].shapes) {
      require_same_dims(s.sdf.dims(), dims_, "training shape");
      if (s.class_id != static_cast<int>(i)) throw InvalidArgument("training shape class id out of place");
    }
  }
  index();
}

void TrainingSet::index() {
  flat_.clear();
  offsets_.clear();
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    offsets_.push_back(flat_.size());
    for (std::size_t j = 0; j < classes_[i].shapes.size(); ++j) {
      flat_.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  offsets_.push_back(flat_.size());
}

const ShapeClass& TrainingSet::shape_class(int class_id) const {
  if (class_id < 0 || class_id >= class_count()) {
    throw InvalidArgument("class id " + std::to_string(class_id) + " out of range");
  }
  return classes_[class_id];
}

const AlignedShape& TrainingSet::reference() const {
  for (const ShapeClass& c : classes_) {
    for (const AlignedShape& s : c.shapes) {
      if (s.id == reference_id_) return s;
    }
  }
  return classes_.front().shapes.front();
}

TrainingSet TrainingSet::with_sigma(double sigma) const {
  return TrainingSet(dims_, classes_, KernelParams{sigma}, reference_id_);
}

double mean_nearest_neighbor_distance(const std::vector<SignedDistanceField>& fields) {
  if (fields.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (i != j) nearest = std::min(nearest, l2_distance(fields[i], fields[j]));
    }
    total += nearest;
  }
  return total / static_cast<double>(fields.size());
}

TrainingSet align_training_set(const std::vector<RawShape>& raw, const SigmaRule& rule,
                               const AlignmentOptions& options, std::size_t reference_index) {
  if (raw.empty()) throw InvalidArgument("align_training_set: no shapes");
  if (reference_index >= raw.size()) throw InvalidArgument("align_training_set: reference index out of range");
  const GridDims dims = raw.front().mask.dims();
  for (const RawShape& s : raw) require_same_dims(s.mask.dims(), dims, ("training shape '" + s.id + "'").c_str());

  const BinaryMask& reference = raw[reference_index].mask;
  std::vector<ShapeClass> classes;
  std::unordered_map<std::string, int> class_ids;
  std::vector<SignedDistanceField> all_fields;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    const RawShape& s = raw[k];
    auto [it, inserted] = class_ids.try_emplace(s.class_name, static_cast<int>(classes.size()));
    if (inserted) classes.push_back(ShapeClass{s.class_name, {}});
    const Pose pose = k == reference_index ? Pose{} : estimate_pose(s.mask, reference, options);
    BinaryMask aligned = apply_pose(s.mask, pose);
    if (!aligned.non_degenerate()) throw DegenerateShape("shape '" + s.id + "' left the frame during alignment");
    SignedDistanceField sdf = mask_to_sdf(aligned);
    all_fields.push_back(sdf);
    classes[it->second].shapes.push_back(AlignedShape{s.id, it->second, std::move(aligned), std::move(sdf), pose});
  }

  double sigma = 0.0;
  if (rule.fixed_sigma) {
    sigma = *rule.fixed_sigma;
  } else {
    sigma = mean_nearest_neighbor_distance(all_fields);
    // A lone shape (or only duplicates) has no neighbour scale; fall back to
    // one pixel of RMS field difference.
    if (!(sigma > 0.0)) sigma = std::sqrt(static_cast<double>(dims.size()));
  }
  return TrainingSet(dims, std::move(classes), KernelParams{sigma}, raw[reference_index].id);
}

AlignedCurve align_to_training(const SignedDistanceField& current, const TrainingSet& ts,
                               const AlignmentOptions& options) {
  require_same_dims(current.dims(), ts.dims(), "align_to_training");
  const BinaryMask mask = sdf_to_mask(current);
  if (!mask.non_degenerate()) throw DegenerateShape("align_to_training: current curve is empty or fills the frame");
  const Pose pose = estimate_pose(mask, ts.reference().mask, options);
  return AlignedCurve{reinitialize(apply_pose(current, pose)), pose};
}

}  // namespace shapemc
