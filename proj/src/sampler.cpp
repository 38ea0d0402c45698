#include "shapemc/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "shapemc/error.hpp"
#include "shapemc/simd/kernels.hpp"

namespace shapemc {

void validate(const ChainConfig& cfg) {
  if (cfg.n_iters < 1) throw InvalidArgument("n_iters must be at least 1");
  if (cfg.gamma < 1) throw InvalidArgument("gamma must be at least 1");
  if (!(cfg.alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  if (!(cfg.max_step_px > 0.0)) throw InvalidArgument("max_step_px must be positive");
  if (cfg.data_only_iters < 0) throw InvalidArgument("data_only_iters must be non-negative");
  if (cfg.reinit_period < 1) throw InvalidArgument("reinit_period must be at least 1");
  if (!(cfg.beta_shape >= 0.0)) throw InvalidArgument("beta_shape must be non-negative");
  if (!(cfg.chan_vese.epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(cfg.chan_vese.lambda1 > 0.0) || !(cfg.chan_vese.lambda2 > 0.0)) {
    throw InvalidArgument("region weights must be positive");
  }
  if (!(cfg.chan_vese.mu_length >= 0.0)) throw InvalidArgument("mu_length must be non-negative");
}

SignedDistanceField default_initial_curve(GridDims dims) {
  validate(dims);
  const double radius = std::min(dims.height, dims.width) / 4.0;
  const double cr = (dims.height - 1) * 0.5;
  const double cc = (dims.width - 1) * 0.5;
  BinaryMask mask(dims);
  for (int r = 0; r < dims.height; ++r) {
    for (int c = 0; c < dims.width; ++c) mask.set(r, c, std::hypot(r - cr, c - cc) <= radius);
  }
  if (!mask.non_degenerate()) {
    // tiny frames: a single center pixel
    mask = BinaryMask(dims);
    mask.set(dims.height / 2, dims.width / 2, true);
  }
  return mask_to_sdf(mask);
}

double clamped_step(const ScalarField& field, double alpha, double max_step_px) {
  const double peak = simd::active().max_abs(field.values().data(), field.size());
  if (!(peak > 0.0)) return alpha;
  return std::min(alpha, max_step_px / peak);
}

SignedDistanceField propose(const SignedDistanceField& sdf, const ScalarField& field, double alpha) {
  require_same_dims(sdf.dims(), field.dims(), "propose");
  if (!field.all_finite()) throw InvalidArgument("propose: perturbation field has non-finite values");
  ScalarField out(sdf.dims());
  simd::active().axpy(out.values().data(), sdf.values().data(), field.values().data(), alpha, out.size());
  return SignedDistanceField(std::move(out));
}

SignedDistanceField data_driven_init(const ScalarField& image, const ChainConfig& cfg) {
  if (!image.all_finite()) throw InvalidArgument("data_driven_init: image has non-finite values");
  SignedDistanceField phi = default_initial_curve(image.dims());
  if (cfg.data_only_iters == 0) return phi;
  SignedDistanceField last_valid = phi;
  for (int it = 1; it <= cfg.data_only_iters; ++it) {
    const ScalarField grad = chan_vese_gradient(image, phi, cfg.chan_vese);
    const double step = clamped_step(grad, cfg.alpha, cfg.max_step_px);
    ScalarField next(phi.dims());
    simd::active().axpy(next.values().data(), phi.values().data(), grad.values().data(), -step, next.size());
    phi = SignedDistanceField(std::move(next));
    if (it % cfg.reinit_period == 0 || it == cfg.data_only_iters) {
      if (!phi.has_both_signs()) break;
      phi = reinitialize(phi);
      last_valid = phi;
    }
  }
  return last_valid;
}

ChainContext prepare_chain_context(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg) {
  validate(cfg);
  require_same_dims(image.dims(), ts.dims(), "image vs training set");
  ChainContext ctx;
  ctx.image = &image;
  ctx.ts = &ts;
  ctx.cfg = cfg;
  ctx.sampling_params = cfg.chan_vese;
  ctx.sampling_params.mu_length = 0.0;
  ctx.initial_sdf = data_driven_init(image, cfg);
  if (cfg.align_test) {
    ctx.aligned = align_to_training(ctx.initial_sdf, ts, cfg.alignment);
  } else {
    ctx.aligned = AlignedCurve{reinitialize(ctx.initial_sdf), Pose{}};
  }
  ctx.layout = cfg.local_priors ? make_patch_layout(image.dims(), cfg.patch_rows, cfg.patch_cols)
                                : make_patch_layout(image.dims(), 1, 1);
  ctx.blend = patch_blend_weights(ctx.layout, cfg.blend_band_px);
  ctx.log_class_densities = log_class_densities(shape_distances_sq(ctx.aligned.sdf, ts), ts);
  return ctx;
}

EnergyBreakdown state_energy(const ChainContext& ctx, const SignedDistanceField& sdf, const PatchDistances& d_sq) {
  const double e_data = chan_vese_energy(*ctx.image, sdf, ctx.sampling_params);
  return combine_energy(e_data, local_log_prior(d_sq, *ctx.ts, ctx.layout), ctx.cfg.beta_shape,
                        ctx.cfg.target_mode);
}

ChainState initial_state(const ChainContext& ctx, int class_id, Rng rng) {
  ChainState s;
  s.sdf = ctx.aligned.sdf;
  s.class_id = class_id;
  s.d_sq = patch_distances_sq(s.sdf, *ctx.ts, ctx.layout);
  s.energy = state_energy(ctx, s.sdf, s.d_sq);
  s.rng = std::move(rng);
  return s;
}

double log_mh_ratio(double e_current, double e_candidate, double log_q_forward, double log_q_reverse) {
  return (e_current - e_candidate) + (log_q_reverse - log_q_forward);
}

ChainState mh_step(ChainState state, const ChainContext& ctx, StepInfo* info) {
  StepInfo local;
  StepInfo& out = info != nullptr ? *info : local;
  out = StepInfo{};
  const TrainingSet& ts = *ctx.ts;
  const ChainConfig& cfg = ctx.cfg;

  const auto forward_sims = log_patch_similarities(state.d_sq, ts, state.class_id, ctx.layout);
  PatchSelection drawn = select_patch_sources(state.rng, forward_sims, cfg.gamma, state.class_id);
  out.log_q_forward = drawn.log_prob();
  if (drawn.any_fallback()) state.flagged = true;

  const ScalarField field = composite_perturbation(state.sdf, drawn, *ctx.image, ts, ctx.sampling_params,
                                                   cfg.beta_shape, ctx.layout, ctx.blend, state.d_sq);
  // One uniform per iteration regardless of the branch taken keeps the
  // random stream aligned across accept/reject histories.
  const double eta = uniform01(state.rng);
  const bool first = state.t + 1 == 1;

  bool accept = false;
  SignedDistanceField candidate;
  PatchDistances candidate_d_sq;
  if (!field.all_finite()) {
    out.non_finite = true;
    state.flagged = true;
  } else {
    out.alpha_used = clamped_step(field, cfg.alpha, cfg.max_step_px);
    candidate = propose(state.sdf, field, out.alpha_used);
    if (!candidate.has_both_signs()) {
      out.degenerate = true;
      state.flagged = true;
    } else {
      candidate_d_sq = patch_distances_sq(candidate, ts, ctx.layout);
      out.candidate_energy = state_energy(ctx, candidate, candidate_d_sq);
      if (!std::isfinite(out.candidate_energy.e_total)) {
        out.non_finite = true;
        state.flagged = true;
      } else if (first) {
        accept = true;
        out.forced = true;
      } else {
        if (cfg.reverse_eval == ReverseEval::candidate) {
          const auto reverse_sims = log_patch_similarities(candidate_d_sq, ts, state.class_id, ctx.layout);
          out.log_q_reverse = patch_selection_log_prob(*state.curr_selection, reverse_sims);
        } else {
          out.log_q_reverse = state.curr_selection->log_prob();
        }
        out.log_ratio =
            log_mh_ratio(state.energy.e_total, out.candidate_energy.e_total, out.log_q_forward, out.log_q_reverse);
        accept = std::log(eta) < out.log_ratio;
      }
    }
  }

  if (accept) {
    state.sdf = std::move(candidate);
    state.d_sq = std::move(candidate_d_sq);
    state.energy = out.candidate_energy;
    ++state.accept_count;
    if (++state.accepted_since_reinit >= cfg.reinit_period) {
      state.accepted_since_reinit = 0;
      state.sdf = reinitialize(state.sdf);
      state.d_sq = patch_distances_sq(state.sdf, ts, ctx.layout);
      state.energy = state_energy(ctx, state.sdf, state.d_sq);
    }
  }
  out.accepted = accept;
  state.prev_selection = std::move(state.curr_selection);
  state.curr_selection = std::move(drawn);
  ++state.t;
  return state;
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) {
    h ^= (v >> (8 * b)) & 0xffU;
    h *= kFnvPrime;
  }
}

}  // namespace

SampleRecord run_chain(const ChainContext& ctx, int chain_id) {
  SampleRecord rec;
  rec.chain_id = chain_id;
  rec.seed = chain_seed(ctx.cfg.seed, static_cast<std::uint64_t>(chain_id));
  Rng rng(rec.seed);

  const ClassDecision decision = select_class_log(rng, ctx.log_class_densities);
  rec.class_id = decision.class_id;
  rec.class_fallback = decision.fallback;

  ChainState state = initial_state(ctx, decision.class_id, std::move(rng));
  rec.energy_trace.reserve(ctx.cfg.n_iters);
  std::uint64_t digest = kFnvOffset;
  std::vector<std::uint64_t> patch_digests(ctx.layout.patch_count(), kFnvOffset);
  StepInfo info;
  for (int it = 0; it < ctx.cfg.n_iters; ++it) {
    state = mh_step(std::move(state), ctx, &info);
    rec.energy_trace.push_back(TraceEntry{state.t, state.energy, info.accepted});
    const auto& patches = state.curr_selection->patches;
    for (std::size_t p = 0; p < patches.size(); ++p) {
      for (int idx : patches[p].shape_indices) {
        fnv_mix(digest, static_cast<std::uint64_t>(idx));
        fnv_mix(patch_digests[p], static_cast<std::uint64_t>(idx));
      }
    }
  }
  rec.accept_count = state.accept_count;
  rec.selection_digest = digest;
  rec.patch_digests = std::move(patch_digests);
  rec.flagged = state.flagged || decision.fallback;
  rec.final_sdf_aligned = state.sdf;
  const SignedDistanceField image_frame = apply_pose(state.sdf, ctx.aligned.pose.inverse());
  rec.final_mask = sdf_to_mask(image_frame);
  return rec;
}

SampleRecord run_chain(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg, int chain_id) {
  return run_chain(prepare_chain_context(image, ts, cfg), chain_id);
}

std::vector<SampleRecord> run_sampling(const ChainContext& ctx, int n_samples, int threads) {
  if (n_samples < 1) throw InvalidArgument("number of samples must be at least 1");
  std::vector<SampleRecord> out(n_samples);
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, n_samples);
  if (workers == 1) {
    for (int i = 0; i < n_samples; ++i) out[i] = run_chain(ctx, i);
    return out;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next.fetch_add(1); i < n_samples; i = next.fetch_add(1)) {
          try {
            out[i] = run_chain(ctx, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<SampleRecord> run_sampling(const ScalarField& image, const TrainingSet& ts, const RunConfig& cfg) {
  const ChainContext ctx = prepare_chain_context(image, ts, cfg.chain);
  return run_sampling(ctx, cfg.n_samples, cfg.threads);
}

}  // namespace shapemc
