#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "mh_oracle.hpp"
#include "oracles.hpp"
#include "shapemc/error.hpp"
#include "shapemc/sampler.hpp"

using namespace shapemc;

namespace {

// Context assembled directly, bypassing the data-driven initialization.
ChainContext hand_context(const ScalarField& image, const TrainingSet& ts, const ChainConfig& cfg,
                          const SignedDistanceField& init) {
  ChainContext ctx;
  ctx.image = &image;
  ctx.ts = &ts;
  ctx.cfg = cfg;
  ctx.sampling_params = cfg.chan_vese;
  ctx.sampling_params.mu_length = 0.0;
  ctx.initial_sdf = init;
  ctx.aligned = AlignedCurve{init, Pose{}};
  ctx.layout = make_patch_layout(image.dims(), 1, 1);
  ctx.blend = patch_blend_weights(ctx.layout, cfg.blend_band_px);
  ctx.log_class_densities = log_class_densities(shape_distances_sq(init, ts), ts);
  return ctx;
}

struct Tiny {
  GridDims d{4, 4};
  TrainingSet ts = fixture::training_set({{oracle::rect({4, 4}, 1, 1, 2, 2), oracle::rect({4, 4}, 0, 0, 2, 3)}}, 1.5);
  ScalarField image = fixture::noisy_image(oracle::rect({4, 4}, 1, 0, 2, 3), 200, 50, 30, 4);
  SignedDistanceField init = mask_to_sdf(oracle::rect({4, 4}, 1, 1, 2, 3));
};

ChainConfig tiny_config(ReverseEval rev, TargetMode mode) {
  ChainConfig cfg;
  cfg.gamma = 3;
  cfg.max_step_px = 1.0;
  cfg.reinit_period = 1000;
  cfg.beta_shape = 5.0;
  cfg.reverse_eval = rev;
  cfg.target_mode = mode;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  ChainConfig ok;
  CHECK_NOTHROW(validate(ok));
  auto bad = [&](auto mutate) {
    ChainConfig c;
    mutate(c);
    CHECK_THROWS_AS(validate(c), InvalidArgument);
  };
  bad([](ChainConfig& c) { c.n_iters = 0; });
  bad([](ChainConfig& c) { c.gamma = 0; });
  bad([](ChainConfig& c) { c.alpha = 0; });
  bad([](ChainConfig& c) { c.max_step_px = -1; });
  bad([](ChainConfig& c) { c.reinit_period = 0; });
  bad([](ChainConfig& c) { c.beta_shape = -0.1; });
  bad([](ChainConfig& c) { c.chan_vese.epsilon = 0; });
  bad([](ChainConfig& c) { c.chan_vese.lambda2 = 0; });
}

TEST_CASE("initial curve and step helpers") {
  const auto c = default_initial_curve({32, 32});
  CHECK(sdf_to_mask(c) == oracle::disk({32, 32}, 15.5, 15.5, 8.0));
  CHECK(default_initial_curve({1, 2}).has_both_signs());

  ScalarField f({1, 3}, std::vector<double>{0.5, -4.0, 1.0});
  CHECK(clamped_step(f, 10.0, 1.0) == 0.25);
  CHECK(clamped_step(f, 0.1, 1.0) == 0.1);
  CHECK(clamped_step(ScalarField({1, 3}), 3.0, 1.0) == 3.0);
  const SignedDistanceField phi(ScalarField({1, 3}, std::vector<double>{-1.0, 0.0, 1.0}));
  const auto cand = propose(phi, f, 0.25);
  CHECK(cand[0] == doctest::Approx(-0.875));
  CHECK(cand[1] == doctest::Approx(-1.0));
  ScalarField nan({1, 3}, std::vector<double>{0, std::nan(""), 0});
  CHECK_THROWS_AS(propose(phi, nan, 1.0), InvalidArgument);
}

TEST_CASE("data-only descent segments a clean image") {
  const GridDims d{32, 32};
  const auto truth = oracle::disk(d, 12, 18, 7);
  const auto img = fixture::noisy_image(truth, 200, 50, 0, 0);
  const auto seg = sdf_to_mask(data_driven_init(img, ChainConfig{}));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < d.size(); ++i) wrong += seg[i] != truth[i];
  CHECK(wrong <= 6u);
  ChainConfig none;
  none.data_only_iters = 0;
  CHECK(data_driven_init(img, none) == default_initial_curve(d));
}

TEST_CASE("first iteration is accepted without the ratio") {
  Tiny t;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ctx = hand_context(t.image, t.ts, tiny_config(ReverseEval::candidate, TargetMode::full), t.init);
    StepInfo info;
    const auto s = mh_step(initial_state(ctx, 0, Rng(seed)), ctx, &info);
    CHECK(info.forced);
    CHECK(info.accepted);
    CHECK(info.log_ratio == 0.0);
    CHECK(s.accept_count == 1);
    CHECK(s.t == 1);
    CHECK_FALSE(s.prev_selection.has_value());
    CHECK(s.curr_selection.has_value());
  }
}

TEST_CASE("acceptance ratio matches an independent replay") {
  Tiny t;
  int compared = 0, accepted = 0, rejected = 0;
  for (auto rev : {ReverseEval::candidate, ReverseEval::literal_prev_curve}) {
    for (auto mode : {TargetMode::full, TargetMode::shape_only}) {
      const auto ctx = hand_context(t.image, t.ts, tiny_config(rev, mode), t.init);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto s = mh_step(initial_state(ctx, 0, Rng(seed)), ctx);
        for (int it = 0; it < 8; ++it) {
          const auto expect = oracle::replay_mh(ctx, s);
          StepInfo info;
          const auto prev_curr = s.curr_selection;
          s = mh_step(std::move(s), ctx, &info);
          CHECK(s.curr_selection->patches[0].shape_indices == expect.drawn);
          CHECK(s.prev_selection == prev_curr);
          if (info.degenerate || info.non_finite) continue;
          ++compared;
          CHECK(std::abs(info.log_q_forward - expect.log_q_forward) <= 1e-10);
          CHECK(std::abs(info.log_q_reverse - expect.log_q_reverse) <= 1e-10);
          CHECK(std::abs(info.log_ratio - expect.log_ratio) <= 1e-10);
          CHECK(info.accepted == expect.accept);
          (info.accepted ? accepted : rejected)++;
        }
      }
    }
  }
  CHECK(compared >= 100);
  // both branches are exercised
  CHECK(accepted > 0);
  CHECK(rejected > 0);
}

TEST_CASE("log ratio formula") {
  CHECK(log_mh_ratio(5.0, 3.0, -1.0, -2.5) == doctest::Approx(0.5));
  CHECK(log_mh_ratio(1.0, 1.0, -3.0, -3.0) == 0.0);
}

TEST_CASE("each iteration consumes gamma + 1 uniforms") {
  Tiny t;
  const auto ctx = hand_context(t.image, t.ts, tiny_config(ReverseEval::candidate, TargetMode::full), t.init);
  auto s = initial_state(ctx, 0, Rng(99));
  Rng shadow(99);
  for (int it = 0; it < 6; ++it) {
    s = mh_step(std::move(s), ctx);
    for (int k = 0; k < ctx.cfg.gamma + 1; ++k) shadow();
    Rng a = s.rng, b = shadow;
    CHECK(a() == b());
  }
}

TEST_CASE("reinitialization every reinit_period acceptances") {
  Tiny t;
  auto cfg = tiny_config(ReverseEval::candidate, TargetMode::full);
  cfg.reinit_period = 1;
  const auto ctx = hand_context(t.image, t.ts, cfg, t.init);
  StepInfo info;
  auto s = mh_step(initial_state(ctx, 0, Rng(1)), ctx, &info);
  REQUIRE(info.accepted);
  CHECK(s.sdf == reinitialize(s.sdf));
  CHECK(s.accepted_since_reinit == 0);
  CHECK(s.energy == state_energy(ctx, s.sdf, patch_distances_sq(s.sdf, t.ts, ctx.layout)));
}

namespace {

struct Scene {
  GridDims d{24, 24};
  std::vector<RawShape> raw;
  TrainingSet ts;
  ScalarField image;
  Scene()
      : raw{{"a/0", "a", oracle::disk(d, 11.5, 11.5, 6)},
            {"a/1", "a", oracle::disk(d, 11.5, 11.5, 7)},
            {"b/0", "b", oracle::rect(d, 6, 6, 12, 12)},
            {"b/1", "b", oracle::rect(d, 5, 7, 14, 10)}},
        ts(align_training_set(raw)),
        image(fixture::noisy_image(oracle::disk(d, 11, 12, 6), 200, 50, 40, 3)) {}
};

ChainConfig scene_config() {
  ChainConfig cfg;
  cfg.n_iters = 25;
  cfg.data_only_iters = 40;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_CASE("chains are deterministic and thread count does not matter") {
  Scene sc;
  RunConfig rc{6, scene_config(), 1};
  const auto serial = run_sampling(sc.image, sc.ts, rc);
  rc.threads = 3;
  const auto parallel = run_sampling(sc.image, sc.ts, rc);
  CHECK(serial == parallel);
  CHECK(serial[2] == run_chain(sc.image, sc.ts, rc.chain, 2));
  for (const auto& s : serial) {
    CHECK(s.energy_trace.size() == 25u);
    CHECK(s.energy_trace.front().accepted);
    CHECK(s.seed == chain_seed(17, s.chain_id));
    CHECK(s.accept_count == std::count_if(s.energy_trace.begin(), s.energy_trace.end(),
                                          [](const TraceEntry& e) { return e.accepted; }));
    CHECK(s.final_mask.dims() == sc.d);
  }
  CHECK(serial[0].selection_digest != serial[1].selection_digest);
  CHECK_THROWS_AS(run_sampling(sc.image, sc.ts, RunConfig{0, scene_config(), 1}), InvalidArgument);
}

TEST_CASE("a 1x1 local layout is the global sampler") {
  Scene sc;
  auto cfg = scene_config();
  const auto global = run_sampling(sc.image, sc.ts, RunConfig{3, cfg, 1});
  cfg.local_priors = true;
  cfg.patch_rows = 1;
  cfg.patch_cols = 1;
  CHECK(run_sampling(sc.image, sc.ts, RunConfig{3, cfg, 1}) == global);
  cfg.patch_rows = 2;
  cfg.patch_cols = 2;
  const auto local = run_sampling(sc.image, sc.ts, RunConfig{3, cfg, 1});
  CHECK(local[0].energy_trace.size() == 25u);
}

TEST_CASE("context preparation") {
  Scene sc;
  const auto ctx = prepare_chain_context(sc.image, sc.ts, scene_config());
  CHECK(ctx.sampling_params.mu_length == 0.0);
  CHECK(ctx.log_class_densities.size() == 2u);
  // the disk image prefers the disk class
  CHECK(ctx.log_class_densities[0] > ctx.log_class_densities[1]);
  CHECK(ctx.aligned.sdf.has_both_signs());
  ScalarField wrong({8, 8});
  CHECK_THROWS_AS(prepare_chain_context(wrong, sc.ts, scene_config()), DimensionMismatch);
}

TEST_CASE("energy trace records the state after each step") {
  Scene sc;
  auto cfg = scene_config();
  cfg.target_mode = TargetMode::shape_only;
  const auto ctx = prepare_chain_context(sc.image, sc.ts, cfg);
  const auto rec = run_chain(ctx, 0);
  for (const auto& e : rec.energy_trace) CHECK(e.energy.e_total == e.energy.e_shape);
  CHECK(rec.energy_trace.back().iteration == cfg.n_iters);
}
