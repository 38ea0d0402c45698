#pragma once

// Energy terms of the segmentation posterior and their gradients:
//
//   E(phi) = E_data(phi) + beta * E_shape(phi)
//
// E_data is the two-phase piecewise-constant region functional with an
// optional length penalty; E_shape = -log p(phi) where p is the Parzen
// density over aligned training SDFs,
//
//   p(phi) = 1/n sum_i 1/m_i sum_j k(|phi - phi_ij|, sigma).
//
// All kernel arithmetic is carried out in the log domain.

#include <span>
#include <vector>

#include "shapemc/alignment.hpp"
#include "shapemc/grid.hpp"

namespace shapemc {

enum class Heaviside { smooth, hard };

struct ChanVeseParams {
  double epsilon = 1.5;
  // Region weights are per squared intensity unit on a 0..255 scale, so
  // the defaults put the region term on a unit dynamic range.
  double lambda1 = 1.0 / 65025.0;
  double lambda2 = 1.0 / 65025.0;
  double mu_length = 0.1;
  Heaviside heaviside = Heaviside::smooth;
};

enum class TargetMode { full, shape_only };

struct EnergyBreakdown {
  double e_data = 0.0;
  double e_shape = 0.0;
  double e_total = 0.0;
  double beta_shape = 1.0;

  friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

// Training shapes drawn for one perturbation: `gamma` indices into class
// `class_id`, with the summed log of their normalized selection
// probabilities.
struct SelectionRecord {
  int class_id = 0;
  std::vector<int> shape_indices;
  double log_prob = 0.0;
  bool fallback = false;  // similarities underflowed; drawn uniformly

  friend bool operator==(const SelectionRecord&, const SelectionRecord&) = default;
};

// Weight on the interior region, H_eps(-phi).
double inside_weight(double phi, const ChanVeseParams& p);
// d/dz H_eps(z).
double smoothed_delta(double z, double epsilon);

struct RegionMeans {
  double inside = 0.0;
  double outside = 0.0;
};
RegionMeans region_means(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p);

double chan_vese_energy(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p);
// dE_data/dphi at every pixel (the ascent direction).
ScalarField chan_vese_gradient(const ScalarField& image, const SignedDistanceField& sdf, const ChanVeseParams& p);

// Squared distances from `sdf` to every training shape in flat order.
std::vector<double> shape_distances_sq(const SignedDistanceField& sdf, const TrainingSet& ts);

// log of (1/m_i) sum_j k(d_ij, sigma) for every class, from flat squared distances.
std::vector<double> log_class_densities(std::span<const double> d_sq, const TrainingSet& ts);
std::vector<double> log_class_densities(std::span<const double> d_sq, const TrainingSet& ts, double sigma);
double log_shape_prior(std::span<const double> d_sq, const TrainingSet& ts);
double log_shape_prior(std::span<const double> d_sq, const TrainingSet& ts, double sigma);

double shape_prior_density(const SignedDistanceField& sdf, const TrainingSet& ts);
double class_conditional_density(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id);
// k(d(phi, phi_rj), sigma) for each shape j of class r.
std::vector<double> shape_similarities(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id);
std::vector<double> log_shape_similarities(const SignedDistanceField& sdf, const TrainingSet& ts, int class_id);

double log_sum_exp(std::span<const double> values);

// acc += scale * (1/sigma^2) * sum_j w_j (phi_Rj - phi), w = softmax over j
// of log k(d_j, sigma). `d_sq` holds the squared distances of the selected
// shapes (restricted to whatever region they were measured on).
void accumulate_shape_term(std::span<double> acc, const SignedDistanceField& sdf, const TrainingSet& ts,
                           const SelectionRecord& selection, std::span<const double> d_sq, double sigma,
                           double scale = 1.0);

// Full-set version of the shape term used by deterministic gradient flow:
// acc += scale * (1/sigma^2) * sum_ij w_ij (phi_ij - phi), w_ij proportional
// to k(d_ij, sigma) / m_i.
void accumulate_full_prior_term(std::span<double> acc, const SignedDistanceField& sdf, const TrainingSet& ts,
                                std::span<const double> d_sq, double scale = 1.0);

// -dE_shape/dphi restricted to the selected subset: the gradient of
// -log (1/gamma) sum_j k(d(phi, phi_Rj), sigma).
ScalarField shape_term(const SignedDistanceField& sdf, const SelectionRecord& selection, const TrainingSet& ts);

// f = -dE_data/dphi + beta * shape_term.
ScalarField perturbation_field(const SignedDistanceField& sdf, const SelectionRecord& selection,
                               const ScalarField& image, const TrainingSet& ts, const ChanVeseParams& p,
                               double beta_shape);

EnergyBreakdown total_energy(const ScalarField& image, const SignedDistanceField& sdf, const TrainingSet& ts,
                             const ChanVeseParams& p, double beta_shape, TargetMode mode);
// Same, from an already evaluated data energy and shape log-density.
EnergyBreakdown combine_energy(double e_data, double log_prior, double beta_shape, TargetMode mode);

}  // namespace shapemc
