#include "shapemc/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "shapemc/error.hpp"
#include "shapemc/simd/kernels.hpp"

namespace shapemc {
namespace {

// Keeps |grad phi| differentiable where the field is locally flat.
constexpr double kGradientFloor = 1e-8;

double smoothed_delta_derivative(double z, double epsilon) {
  const double q = epsilon * epsilon + z * z;
  return -2.0 * epsilon * z / (std::numbers::pi * q * q);
}

struct ForwardDiff {
  double dx;
  double dy;
  double norm;
};

ForwardDiff forward_diff(const SignedDistanceField& sdf, int r, int c) {
  const GridDims dims = sdf.dims();
  const double here = sdf(r, c);
  const double dx = c + 1 < dims.width ? sdf(r, c + 1) - here : 0.0;
  const double dy = r + 1 < dims.height ? sdf(r + 1, c) - here : 0.0;
  return {dx, dy, std::sqrt(dx * dx + dy * dy + kGradientFloor * kGradientFloor)};
}

double length_energy(const SignedDistanceField& sdf, double epsilon) {
  const GridDims dims = sdf.dims();
  double total = 0.0;
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      total += smoothed_delta(sdf(r, c), epsilon) * forward_diff(sdf, r, c).norm;
    }
  }
  return total;
}

// Exact derivative of length_energy with respect to every pixel.
void add_length_gradient(ScalarField& grad, const SignedDistanceField& sdf, double epsilon, double mu) {
  const GridDims dims = sdf.dims();
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      const double phi = sdf(r, c);
      const ForwardDiff here = forward_diff(sdf, r, c);
      const double delta = smoothed_delta(phi, epsilon);
      double g = smoothed_delta_derivative(phi, epsilon) * here.norm;
      // this pixel is the tail of its own forward differences
      double own = 0.0;
      if (c + 1 < dims.width) own -= here.dx;
      if (r + 1 < dims.height) own -= here.dy;
      g += delta * own / here.norm;
      if (c > 0) {
        const ForwardDiff left = forward_diff(sdf, r, c - 1);
        g += smoothed_delta(sdf(r, c - 1), epsilon) * left.dx / left.norm;
      }
      if (r > 0) {
        const ForwardDiff up = forward_diff(sdf, r - 1, c);
        g += smoothed_delta(sdf(r - 1, c), epsilon) * up.dy / up.norm;
      }
      grad(r, c) += mu * g;
    }
  }
}

void require_class(const TrainingSet& ts, int class_id) {
  if (class_id < 0 || class_id >= ts.class_count()) {
    throw InvalidArgument("class id " + std::to_string(class_id) + " out of range");
  }
}

}  // namespace

double smoothed_delta(double z, double epsilon) {
  return epsilon / (std::numbers::pi * (epsilon * epsilon + z * z));
}

double inside_weight(double phi, const ChanVeseParams& p) {
  if (p.heaviside == Heaviside::hard) return phi < 0.0 ? 1.0 : 0.0;
  return 0.5 * (1.0 + (2.0 / std::numbers::pi) * std::atan(-phi / p.epsilon));
}

RegionMeans region_means(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p) {
  require_same_dims(image.dims(), sdf.dims(), "region_means");
  double w_in = 0.0;
  double s_in = 0.0;
  double w_out = 0.0;
  double s_out = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double h = inside_weight(sdf[i], p);
    w_in += h;
    s_in += h * image[i];
    w_out += 1.0 - h;
    s_out += (1.0 - h) * image[i];
  }
  RegionMeans m;
  m.inside = w_in > 0.0 ? s_in / w_in : 0.0;
  m.outside = w_out > 0.0 ? s_out / w_out : 0.0;
  return m;
}

double chan_vese_energy(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p) {
  const RegionMeans m = region_means(image, sdf, p);
  double e = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double h = inside_weight(sdf[i], p);
    const double di = image[i] - m.inside;
    const double dout = image[i] - m.outside;
    e += p.lambda1 * h * di * di + p.lambda2 * (1.0 - h) * dout * dout;
  }
  if (p.mu_length > 0.0) e += p.mu_length * length_energy(sdf, p.epsilon);
  return e;
}

ScalarField chan_vese_gradient(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p) {
  const RegionMeans m = region_means(image, sdf, p);
  ScalarField grad(image.dims());
  if (p.heaviside == Heaviside::smooth) {
    // The region means are stationary points of E in c1, c2, so only the
    // explicit dependence through H(-phi) contributes.
    for (std::size_t i = 0; i < image.size(); ++i) {
      const double di = image[i] - m.inside;
      const double dout = image[i] - m.outside;
      grad[i] = -smoothed_delta(sdf[i], p.epsilon) * (p.lambda1 * di * di - p.lambda2 * dout * dout);
    }
  }
  if (p.mu_length > 0.0) add_length_gradient(grad, sdf, p.epsilon, p.mu_length);
  return grad;
}

double log_sum_exp(std::span<const double> values) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (!std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - hi);
  return hi + std::log(sum);
}

std::vector<double> shape_distances_sq(const SignedDistanceField& sdf, const TrainingSet& ts) {
  require_same_dims(sdf.dims(), ts.dims(), "shape_distances_sq");
  std::vector<double> d(ts.shape_count());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = squared_l2_distance(sdf.values(), ts.flat_shape(k).sdf.values());
  return d;
}

std::vector<double> log_class_densities(std::span<const double> d_sq, const TrainingSet& ts) {
  return log_class_densities(d_sq, ts, ts.kernel().sigma);
}

std::vector<double> log_class_densities(std::span<const double> d_sq, const TrainingSet& ts, double sigma) {
  if (d_sq.size() != ts.shape_count()) throw InvalidArgument("log_class_densities: distance count mismatch");
  std::vector<double> out(ts.class_count());
  std::vector<double> logk;
  for (int i = 0; i < ts.class_count(); ++i) {
    const std::size_t begin = ts.class_offset(i);
    const std::size_t end = ts.class_offset(i + 1);
    logk.clear();
    for (std::size_t k = begin; k < end; ++k) logk.push_back(log_gaussian_kernel_sq(d_sq[k], sigma));
    out[i] = log_sum_exp(logk) - std::log(static_cast<double>(end - begin));
  }
  return out;
}

double log_shape_prior(std::span<const double> d_sq, const TrainingSet& ts) {
  return log_shape_prior(d_sq, ts, ts.kernel().sigma);
}

double log_shape_prior(std::span<const double> d_sq, const TrainingSet& ts, double sigma) {
  const std::vector<double> per_class = log_class_densities(d_sq, ts, sigma);
  return log_sum_exp(per_class) - std::log(static_cast<double>(per_class.size()));
}

double shape_prior_density(const SignedDistanceField& sdf, const TrainingSet& ts) {
  return std::exp(log_shape_prior(shape_distances_sq(sdf, ts), ts));
}

double class_conditional_density(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id) {
  require_class(ts, class_id);
  return std::exp(log_class_densities(shape_distances_sq(sdf, ts), ts)[class_id]);
}

std::vector<double> log_shape_similarities(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id) {
  require_class(ts, class_id);
  require_same_dims(sdf.dims(), ts.dims(), "shape_similarities");
  const ShapeClass& cls = ts.shape_class(class_id);
  std::vector<double> out;
  out.reserve(cls.shapes.size());
  for (const AlignedShape& s : cls.shapes) {
    out.push_back(log_gaussian_kernel_sq(squared_l2_distance(sdf.values(), s.sdf.values()), ts.kernel().sigma));
  }
  return out;
}

std::vector<double> shape_similarities(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id) {
  std::vector<double> out = log_shape_similarities(sdf, ts, class_id);
  for (double& v : out) v = std::exp(v);
  return out;
}

void accumulate_shape_term(std::span<double> acc, const SignedDistanceField& sdf, const TrainingSet& ts,
                           const SelectionRecord& selection, std::span<const double> d_sq, double sigma,
                           double scale) {
  if (selection.shape_indices.empty()) throw InvalidArgument("shape term: empty selection");
  if (d_sq.size() != selection.shape_indices.size()) throw InvalidArgument("shape term: distance count mismatch");
  if (acc.size() != sdf.size()) throw DimensionMismatch("shape term: accumulator size");
  const ShapeClass& cls = ts.shape_class(selection.class_id);
  std::vector<double> logk(d_sq.size());
  for (std::size_t j = 0; j < d_sq.size(); ++j) logk[j] = log_gaussian_kernel_sq(d_sq[j], sigma);
  const double lse = log_sum_exp(logk);
  const double inv_var = 1.0 / (sigma * sigma);
  const auto& kernels = simd::active();
  for (std::size_t j = 0; j < d_sq.size(); ++j) {
    const int idx = selection.shape_indices[j];
    if (idx < 0 || static_cast<std::size_t>(idx) >= cls.shapes.size()) {
      throw InvalidArgument("shape term: selection index out of range");
    }
    const double w = std::exp(logk[j] - lse) * inv_var * scale;
    kernels.accumulate_difference(acc.data(), cls.shapes[idx].sdf.values().data(), sdf.values().data(), w,
                                  acc.size());
  }
}

void accumulate_full_prior_term(std::span<double> acc, const SignedDistanceField& sdf, const TrainingSet& ts,
                                std::span<const double> d_sq, double scale) {
  if (d_sq.size() != ts.shape_count()) throw InvalidArgument("full prior term: distance count mismatch");
  if (acc.size() != sdf.size()) throw DimensionMismatch("full prior term: accumulator size");
  const double sigma = ts.kernel().sigma;
  std::vector<double> logw(d_sq.size());
  for (int i = 0; i < ts.class_count(); ++i) {
    const std::size_t begin = ts.class_offset(i);
    const std::size_t end = ts.class_offset(i + 1);
    const double log_m = std::log(static_cast<double>(end - begin));
    for (std::size_t k = begin; k < end; ++k) logw[k] = log_gaussian_kernel_sq(d_sq[k], sigma) - log_m;
  }
  const double lse = log_sum_exp(logw);
  const double inv_var = 1.0 / (sigma * sigma);
  const auto& kernels = simd::active();
  for (std::size_t k = 0; k < d_sq.size(); ++k) {
    const double w = std::exp(logw[k] - lse) * inv_var * scale;
    kernels.accumulate_difference(acc.data(), ts.flat_shape(k).sdf.values().data(), sdf.values().data(), w,
                                  acc.size());
  }
}

ScalarField shape_term(const SignedDistanceField& sdf, const SelectionRecord& selection, const TrainingSet& ts) {
  require_same_dims(sdf.dims(), ts.dims(), "shape_term");
  const ShapeClass& cls = ts.shape_class(selection.class_id);
  std::vector<double> d_sq;
  d_sq.reserve(selection.shape_indices.size());
  for (int idx : selection.shape_indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= cls.shapes.size()) {
      throw InvalidArgument("shape term: selection index out of range");
    }
    d_sq.push_back(squared_l2_distance(sdf.values(), cls.shapes[idx].sdf.values()));
  }
  ScalarField out(sdf.dims());
  accumulate_shape_term(out.values(), sdf, ts, selection, d_sq, ts.kernel().sigma);
  return out;
}

ScalarField perturbation_field(const SignedDistanceField& sdf, const SelectionRecord& selection,
                               const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                               double beta_shape) {
  require_same_dims(image.dims(), sdf.dims(), "perturbation_field");
  const ScalarField shape = shape_term(sdf, selection, ts);
  ScalarField f = chan_vese_gradient(image, sdf, p);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = -f[i] + beta_shape * shape[i];
  return f;
}

EnergyBreakdown combine_energy(double e_data, double log_prior, double beta_shape, TargetMode mode) {
  EnergyBreakdown e;
  e.e_data = e_data;
  e.e_shape = -log_prior;
  e.beta_shape = beta_shape;
  e.e_total = mode == TargetMode::full ? e.e_data + beta_shape * e.e_shape : e.e_shape;
  return e;
}

EnergyBreakdown total_energy(const ScalarField& image, const SignedDistanceField& sdf, const TrainingSet& ts,
                             const ChanVeseParams& p, double beta_shape, TargetMode mode) {
  require_same_dims(image.dims(), sdf.dims(), "total_energy");
  require_same_dims(sdf.dims(), ts.dims(), "total_energy");
  return combine_energy(chan_vese_energy(image, sdf, p), log_shape_prior(shape_distances_sq(sdf, ts), ts),
                        beta_shape, mode);
}

}  // namespace shapemc
