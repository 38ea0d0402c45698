#include "shapemc/local_priors.hpp"

#include <algorithm>
#include <cmath>

#include "shapemc/error.hpp"
#include "shapemc/selection.hpp"

namespace shapemc {

PatchLayout make_patch_layout(GridDims dims, int rows, int cols) {
  validate(dims);
  if (rows < 1 || cols < 1 || rows > dims.height || cols > dims.width) {
    throw InvalidArgument("patch grid " + std::to_string(rows) + "x" + std::to_string(cols) + " does not fit a " +
                          std::to_string(dims.height) + "x" + std::to_string(dims.width) + " frame");
  }
  PatchLayout layout{dims, rows, cols, {}};
  const int base_h = dims.height / rows;
  const int base_w = dims.width / cols;
  for (int i = 0; i < rows; ++i) {
    const int h = i + 1 == rows ? dims.height - base_h * (rows - 1) : base_h;
    for (int j = 0; j < cols; ++j) {
      const int w = j + 1 == cols ? dims.width - base_w * (cols - 1) : base_w;
      layout.rects.push_back(PixelRect{i * base_h, j * base_w, h, w});
    }
  }
  return layout;
}

double patch_sigma(const PatchLayout& layout, std::size_t patch, double sigma) {
  return sigma * std::sqrt(static_cast<double>(layout.rects.at(patch).area()) /
                           static_cast<double>(layout.dims.size()));
}

PatchDistances patch_distances_sq(const SignedDistanceField& sdf, const TrainingSet& ts, const PatchLayout& layout) {
  require_same_dims(sdf.dims(), ts.dims(), "patch_distances_sq");
  require_same_dims(sdf.dims(), layout.dims, "patch layout");
  PatchDistances d(layout.patch_count(), std::vector<double>(ts.shape_count()));
  for (std::size_t p = 0; p < layout.patch_count(); ++p) {
    for (std::size_t k = 0; k < ts.shape_count(); ++k) {
      d[p][k] = squared_l2_distance(sdf.values(), ts.flat_shape(k).sdf.values(), layout.dims, layout.rects[p]);
    }
  }
  return d;
}

std::vector<std::vector<double>> log_patch_similarities(const PatchDistances& d_sq, const TrainingSet& ts,
                                                        int class_id, const PatchLayout& layout) {
  const ShapeClass& cls = ts.shape_class(class_id);
  const std::size_t begin = ts.class_offset(class_id);
  std::vector<std::vector<double>> out(layout.patch_count(), std::vector<double>(cls.shapes.size()));
  for (std::size_t p = 0; p < layout.patch_count(); ++p) {
    const double sigma = patch_sigma(layout, p, ts.kernel().sigma);
    for (std::size_t j = 0; j < cls.shapes.size(); ++j) out[p][j] = log_gaussian_kernel_sq(d_sq[p][begin + j], sigma);
  }
  return out;
}

std::vector<std::vector<double>> patch_similarities(const SignedDistanceField& sdf, const TrainingSet& ts,
                                                    int class_id, const PatchLayout& layout) {
  auto out = log_patch_similarities(patch_distances_sq(sdf, ts, layout), ts, class_id, layout);
  for (auto& patch : out) {
    for (double& v : patch) v = std::exp(v);
  }
  return out;
}

double PatchSelection::log_prob() const {
  double total = 0.0;
  for (const SelectionRecord& r : patches) total += r.log_prob;
  return total;
}

bool PatchSelection::any_fallback() const {
  return std::any_of(patches.begin(), patches.end(), [](const SelectionRecord& r) { return r.fallback; });
}

PatchSelection select_patch_sources(Rng& rng, const std::vector<std::vector<double>>& log_similarities, int gamma,
                                    int class_id) {
  PatchSelection sel;
  sel.patches.reserve(log_similarities.size());
  for (const auto& sims : log_similarities) sel.patches.push_back(select_subset_log(rng, sims, gamma, class_id));
  return sel;
}

double patch_selection_log_prob(const PatchSelection& selection,
                                const std::vector<std::vector<double>>& log_similarities) {
  if (selection.patches.size() != log_similarities.size()) throw InvalidArgument("patch count mismatch");
  double total = 0.0;
  for (std::size_t p = 0; p < selection.patches.size(); ++p) {
    total += selection_log_prob(selection.patches[p].shape_indices, log_similarities[p]);
  }
  return total;
}

namespace {

// Unnormalized 1-D weight of the segment [start, start+len) at pixel
// coordinate x, ramping over `band` pixels centred on each inner border.
double segment_weight(double x, int start, int len, int extent, double band) {
  double w = 1.0;
  if (start > 0) {
    const double border = start - 0.5;
    w *= band > 0.0 ? std::clamp(0.5 + (x - border) / band, 0.0, 1.0) : (x > border ? 1.0 : 0.0);
  }
  if (start + len < extent) {
    const double border = start + len - 0.5;
    w *= band > 0.0 ? std::clamp(0.5 - (x - border) / band, 0.0, 1.0) : (x < border ? 1.0 : 0.0);
  }
  return w;
}

}  // namespace

std::vector<ScalarField> patch_blend_weights(const PatchLayout& layout, double band) {
  const GridDims dims = layout.dims;
  std::vector<ScalarField> weights(layout.patch_count(), ScalarField(dims));
  std::vector<double> raw(layout.patch_count());
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) {
      double total = 0.0;
      for (std::size_t p = 0; p < layout.patch_count(); ++p) {
        const PixelRect& rect = layout.rects[p];
        raw[p] = segment_weight(r, rect.row, rect.height, dims.height, band) *
                 segment_weight(c, rect.col, rect.width, dims.width, band);
        total += raw[p];
      }
      for (std::size_t p = 0; p < layout.patch_count(); ++p) weights[p](r, c) = raw[p] / total;
    }
  }
  return weights;
}

ScalarField composite_perturbation(const SignedDistanceField& sdf, const PatchSelection& selection,
                                   const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                                   double beta_shape, const PatchLayout& layout,
                                   const std::vector<ScalarField>& blend, const PatchDistances& d_sq) {
  require_same_dims(image.dims(), sdf.dims(), "composite_perturbation");
  require_same_dims(layout.dims, sdf.dims(), "composite_perturbation layout");
  if (selection.patches.size() != layout.patch_count() || blend.size() != layout.patch_count() ||
      d_sq.size() != layout.patch_count()) {
    throw InvalidArgument("composite_perturbation: patch count mismatch");
  }
  ScalarField shape(sdf.dims());
  ScalarField patch_term(sdf.dims());
  std::vector<double> selected;
  for (std::size_t q = 0; q < layout.patch_count(); ++q) {
    const SelectionRecord& rec = selection.patches[q];
    const std::size_t begin = ts.class_offset(rec.class_id);
    const std::size_t class_size = ts.shape_class(rec.class_id).shapes.size();
    selected.clear();
    for (int idx : rec.shape_indices) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= class_size) {
        throw InvalidArgument("composite_perturbation: selection index out of range");
      }
      selected.push_back(d_sq[q][begin + idx]);
    }
    std::fill(patch_term.values().begin(), patch_term.values().end(), 0.0);
    accumulate_shape_term(patch_term.values(), sdf, ts, rec, selected, patch_sigma(layout, q, ts.kernel().sigma));
    const ScalarField& w = blend[q];
    for (std::size_t i = 0; i < shape.size(); ++i) {
      if (w[i] != 0.0) shape[i] += w[i] * patch_term[i];
    }
  }
  ScalarField f = chan_vese_gradient(image, sdf, p);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = -f[i] + beta_shape * shape[i];
  return f;
}

ScalarField composite_perturbation(const SignedDistanceField& sdf, const PatchSelection& selection,
                                   const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                                   double beta_shape, const PatchLayout& layout) {
  return composite_perturbation(sdf, selection, image, ts, p, beta_shape, layout, patch_blend_weights(layout, 3.0),
                                patch_distances_sq(sdf, ts, layout));
}

double local_log_prior(const PatchDistances& d_sq, const TrainingSet& ts, const PatchLayout& layout) {
  if (d_sq.size() != layout.patch_count()) throw InvalidArgument("local_log_prior: patch count mismatch");
  double total = 0.0;
  for (std::size_t p = 0; p < layout.patch_count(); ++p) {
    total += log_shape_prior(d_sq[p], ts, patch_sigma(layout, p, ts.kernel().sigma));
  }
  return total;
}

}  // namespace shapemc
