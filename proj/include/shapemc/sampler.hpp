#pragma once

// Metropolis-Hastings shape sampler.
//
// One chain: segment with the data term only, align the result to the
// training frame, draw the chain's class once from the class-conditional
// densities, then run N MH iterations whose proposals move the level set
// along the energy gradient built from randomly selected training shapes.
// The chain's final curve, mapped back to the image frame, is its sample.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "shapemc/alignment.hpp"
#include "shapemc/energy.hpp"
#include "shapemc/local_priors.hpp"
#include "shapemc/rng.hpp"
#include "shapemc/selection.hpp"

namespace shapemc {

// Which curve the reverse selection probabilities are conditioned on.
enum class ReverseEval {
  candidate,           // similarities at the proposed curve
  literal_prev_curve,  // the previous selection's own recorded probability
};

struct ChainConfig {
  int n_iters = 300;
  int gamma = 5;
  // Step size; each step is additionally clamped so max |alpha f| <= max_step_px.
  double alpha = 1.0e6;
  double max_step_px = 1.0;
  int data_only_iters = 300;
  int reinit_period = 10;
  TargetMode target_mode = TargetMode::full;
  double beta_shape = 1.0;
  std::uint64_t seed = 0;
  ReverseEval reverse_eval = ReverseEval::candidate;
  // The length penalty applies to the data-only phase; sampling uses mu = 0.
  ChanVeseParams chan_vese{};
  bool align_test = true;
  AlignmentOptions alignment{};
  bool local_priors = false;
  int patch_rows = 2;
  int patch_cols = 4;
  double blend_band_px = 3.0;
};

struct RunConfig {
  int n_samples = 1;
  ChainConfig chain{};
  // 0 = one worker per hardware thread. Never affects results.
  int threads = 0;
};

void validate(const ChainConfig& cfg);

struct ChainState {
  int t = 0;
  SignedDistanceField sdf;  // training frame
  int class_id = 0;
  std::optional<PatchSelection> prev_selection;
  std::optional<PatchSelection> curr_selection;
  EnergyBreakdown energy;
  PatchDistances d_sq;  // distances of sdf to every training shape, per patch
  Rng rng;
  int accept_count = 0;
  int accepted_since_reinit = 0;
  bool flagged = false;
};

struct StepInfo {
  bool accepted = false;
  bool forced = false;      // first iteration, accepted without the ratio
  bool degenerate = false;  // candidate had a single sign
  bool non_finite = false;
  double log_ratio = 0.0;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  double alpha_used = 0.0;
  EnergyBreakdown candidate_energy;
};

struct TraceEntry {
  int iteration = 0;
  EnergyBreakdown energy;
  bool accepted = false;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct SampleRecord {
  int chain_id = 0;
  std::uint64_t seed = 0;
  BinaryMask final_mask;  // image frame
  SignedDistanceField final_sdf_aligned;
  int class_id = 0;
  std::vector<TraceEntry> energy_trace;
  int accept_count = 0;
  std::uint64_t selection_digest = 0;
  std::vector<std::uint64_t> patch_digests;  // same hash, one per patch
  bool class_fallback = false;
  bool flagged = false;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

// Everything a chain needs that does not depend on the chain's seed.
struct ChainContext {
  const ScalarField* image = nullptr;
  const TrainingSet* ts = nullptr;
  ChainConfig cfg;
  ChanVeseParams sampling_params;  // chan_vese with mu = 0
  SignedDistanceField initial_sdf;  // data-driven segmentation, image frame
  AlignedCurve aligned;
  PatchLayout layout;
  std::vector<ScalarField> blend;
  std::vector<double> log_class_densities;  // at the aligned initial curve
};

ChainContext prepare_chain_context(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg);

SignedDistanceField default_initial_curve(GridDims dims);
SignedDistanceField data_driven_init(const ScalarField& image, const ChainConfig& cfg);

// Candidate phi + alpha * f, unreinitialized.
SignedDistanceField propose(const SignedDistanceField& sdf, const ScalarField& field, double alpha);
// min(alpha, max_step / max|f|).
double clamped_step(const ScalarField& field, double alpha, double max_step_px);

ChainState initial_state(const ChainContext& ctx, int class_id, Rng rng);
EnergyBreakdown state_energy(const ChainContext& ctx, const SignedDistanceField& sdf, const PatchDistances& d_sq);

// log MH ratio = -E(candidate) + E(current) + log q_reverse - log q_forward.
double log_mh_ratio(double e_current, double e_candidate, double log_q_forward, double log_q_reverse);

ChainState mh_step(ChainState state, const ChainContext& ctx, StepInfo* info = nullptr);

SampleRecord run_chain(const ChainContext& ctx, int chain_id);
SampleRecord run_chain(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg, int chain_id);

std::vector<SampleRecord> run_sampling(const ScalarField& image, const TrainingSet& ts, const RunConfig& cfg);
std::vector<SampleRecord> run_sampling(const ChainContext& ctx, int n_samples, int threads);

}  // namespace shapemc
