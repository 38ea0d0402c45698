#pragma once

// Local shape priors: the frame is tiled into rectangular patches and each
// patch draws its own training sources, so object parts can follow
// different exemplars. A 1x1 layout reproduces the global prior exactly.

#include <span>
#include <vector>

#include "shapemc/alignment.hpp"
#include "shapemc/energy.hpp"
#include "shapemc/grid.hpp"
#include "shapemc/rng.hpp"

namespace shapemc {

struct PatchLayout {
  GridDims dims;
  int rows = 1;
  int cols = 1;
  std::vector<PixelRect> rects;  // row-major over the patch grid

  std::size_t patch_count() const { return rects.size(); }
};

// Near-equal tiling; the last row/column absorbs the remainder.
PatchLayout make_patch_layout(GridDims dims, int rows, int cols);

// sigma_P = sigma * sqrt(|P| / |frame|).
double patch_sigma(const PatchLayout& layout, std::size_t patch, double sigma);

// d_sq[P][k]: squared distance restricted to patch P, to flat training shape k.
using PatchDistances = std::vector<std::vector<double>>;
PatchDistances patch_distances_sq(const SignedDistanceField& sdf, const TrainingSet& ts, const PatchLayout& layout);

// log k(d_P(phi, phi_rj), sigma_P) per patch, for the shapes of class r.
std::vector<std::vector<double>> log_patch_similarities(const PatchDistances& d_sq, const TrainingSet& ts,
                                                        int class_id, const PatchLayout& layout);
std::vector<std::vector<double>> patch_similarities(const SignedDistanceField& sdf, const TrainingSet& ts,
                                                    int class_id, const PatchLayout& layout);

struct PatchSelection {
  std::vector<SelectionRecord> patches;

  double log_prob() const;
  bool any_fallback() const;
  friend bool operator==(const PatchSelection&, const PatchSelection&) = default;
};

PatchSelection select_patch_sources(Rng& rng, const std::vector<std::vector<double>>& log_similarities, int gamma,
                                    int class_id);

// Sum over patches of the log-probability of redrawing `selection`'s
// indices under the given per-patch log-similarities.
double patch_selection_log_prob(const PatchSelection& selection,
                                const std::vector<std::vector<double>>& log_similarities);

// Per-patch blending weights (one field per patch, summing to 1 at each
// pixel), cross-fading linearly over `band` pixels at patch borders.
std::vector<ScalarField> patch_blend_weights(const PatchLayout& layout, double band);

// -dE_data/dphi + beta * (per-patch shape terms, blended). `d_sq` are the
// patch distances of `sdf` to all training shapes.
ScalarField composite_perturbation(const SignedDistanceField& sdf, const PatchSelection& selection,
                                   const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                                   double beta_shape, const PatchLayout& layout,
                                   const std::vector<ScalarField>& blend, const PatchDistances& d_sq);

// Convenience overload computing distances and blend weights (band 3 px).
ScalarField composite_perturbation(const SignedDistanceField& sdf, const PatchSelection& selection,
                                   const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                                   double beta_shape, const PatchLayout& layout);

// sum_P log p_P(phi), each p_P the Parzen prior on patch P with sigma_P.
double local_log_prior(const PatchDistances& d_sq, const TrainingSet& ts, const PatchLayout& layout);

}  // namespace shapemc
