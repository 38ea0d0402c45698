#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shapemc/error.hpp"
#include "shapemc/local_priors.hpp"
#include "shapemc/selection.hpp"

using namespace shapemc;

namespace {

const GridDims kD{16, 20};

TrainingSet two_class_set() {
  return fixture::training_set({{oracle::disk(kD, 7, 9, 4), oracle::disk(kD, 8, 10, 5), oracle::rect(kD, 4, 5, 8, 9)},
                                {oracle::rect(kD, 2, 2, 12, 6), oracle::disk(kD, 9, 12, 3)}},
                               8.0);
}

}  // namespace

TEST_CASE("layout tiles the frame") {
  const auto l = make_patch_layout(kD, 3, 4);
  CHECK(l.patch_count() == 12u);
  std::vector<int> cover(kD.size());
  for (const auto& r : l.rects)
    for (int i = r.row; i < r.row + r.height; ++i)
      for (int j = r.col; j < r.col + r.width; ++j) cover[kD.index(i, j)]++;
  for (int c : cover) CHECK(c == 1);
  // the last row absorbs the remainder: 16 = 5 + 5 + 6
  CHECK(l.rects[8].height == 6);
  CHECK(l.rects[0] == PixelRect{0, 0, 5, 5});
  CHECK(make_patch_layout(kD, 1, 1).rects[0] == full_frame(kD));
  CHECK_THROWS_AS(make_patch_layout(kD, 0, 2), InvalidArgument);
  CHECK_THROWS_AS(make_patch_layout(kD, 17, 1), InvalidArgument);
}

TEST_CASE("patch sigma scales with area") {
  const auto l = make_patch_layout(kD, 2, 2);
  CHECK(patch_sigma(l, 0, 10.0) == doctest::Approx(10.0 * std::sqrt(80.0 / 320.0)));
  CHECK(patch_sigma(make_patch_layout(kD, 1, 1), 0, 10.0) == 10.0);
}

TEST_CASE("patch distances sum to the full distance") {
  const auto ts = two_class_set();
  const auto sdf = mask_to_sdf(oracle::disk(kD, 8, 9, 4));
  const auto l = make_patch_layout(kD, 2, 3);
  const auto d = patch_distances_sq(sdf, ts, l);
  const auto full = shape_distances_sq(sdf, ts);
  for (std::size_t k = 0; k < ts.shape_count(); ++k) {
    double s = 0;
    for (std::size_t p = 0; p < l.patch_count(); ++p) s += d[p][k];
    CHECK(s == doctest::Approx(full[k]).epsilon(1e-12));
  }
}

TEST_CASE("blend weights partition unity and are local") {
  const auto l = make_patch_layout(kD, 2, 2);
  const auto w = patch_blend_weights(l, 3.0);
  for (std::size_t i = 0; i < kD.size(); ++i) {
    double s = 0;
    for (const auto& f : w) {
      CHECK(f[i] >= 0.0);
      s += f[i];
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(w[0](0, 0) == 1.0);
  CHECK(w[3](15, 19) == 1.0);
  // the border between rows 7 and 8 is crossed halfway
  CHECK(w[0](7, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(w[2](8, 0) == doctest::Approx(2.0 / 3.0));
  const auto hard = patch_blend_weights(l, 0.0);
  CHECK(hard[0](7, 9) == 1.0);
  CHECK(hard[0](8, 9) == 0.0);
}

TEST_CASE("one patch reproduces the global prior exactly") {
  const auto ts = two_class_set();
  const auto sdf = mask_to_sdf(oracle::disk(kD, 8, 9, 4));
  const auto img = fixture::noisy_image(oracle::disk(kD, 8, 9, 5), 200, 50, 20, 2);
  const auto l = make_patch_layout(kD, 1, 1);
  const auto d = patch_distances_sq(sdf, ts, l);
  CHECK(d[0] == shape_distances_sq(sdf, ts));
  CHECK(local_log_prior(d, ts, l) == log_shape_prior(shape_distances_sq(sdf, ts), ts));
  CHECK(log_patch_similarities(d, ts, 1, l)[0] == log_shape_similarities(sdf, ts, 1));

  Rng a(5), b(5);
  const auto sel = select_patch_sources(a, log_patch_similarities(d, ts, 0, l), 4, 0);
  const auto rec = select_subset_log(b, log_shape_similarities(sdf, ts, 0), 4, 0);
  CHECK(sel.patches.size() == 1u);
  CHECK(sel.patches[0] == rec);
  CHECK(sel.log_prob() == rec.log_prob);

  ChanVeseParams p;
  p.mu_length = 0.0;
  const auto f1 = composite_perturbation(sdf, sel, img, ts, p, 1.7, l);
  const auto f2 = perturbation_field(sdf, rec, img, ts, p, 1.7);
  CHECK(f1 == f2);
}

TEST_CASE("local prior sums per-patch priors") {
  const auto ts = two_class_set();
  const auto sdf = mask_to_sdf(oracle::disk(kD, 8, 9, 4));
  const auto l = make_patch_layout(kD, 2, 2);
  const auto d = patch_distances_sq(sdf, ts, l);
  double ref = 0;
  for (std::size_t p = 0; p < 4; ++p) {
    const double s = patch_sigma(l, p, 8.0);
    // 1/2 [ 1/3 sum_class0 k + 1/2 sum_class1 k ]
    double c0 = 0, c1 = 0;
    for (int k = 0; k < 3; ++k) c0 += gaussian_kernel(std::sqrt(d[p][k]), {s}) / 3;
    for (int k = 3; k < 5; ++k) c1 += gaussian_kernel(std::sqrt(d[p][k]), {s}) / 2;
    ref += std::log(0.5 * (c0 + c1));
  }
  CHECK(local_log_prior(d, ts, l) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("patch selection probability") {
  const auto ts = two_class_set();
  const auto sdf = mask_to_sdf(oracle::disk(kD, 8, 9, 4));
  const auto l = make_patch_layout(kD, 2, 1);
  const auto sims = log_patch_similarities(patch_distances_sq(sdf, ts, l), ts, 0, l);
  Rng rng(8);
  const auto sel = select_patch_sources(rng, sims, 3, 0);
  CHECK(sel.patches.size() == 2u);
  CHECK(patch_selection_log_prob(sel, sims) == doctest::Approx(sel.log_prob()).epsilon(1e-14));
  CHECK_FALSE(sel.any_fallback());
  CHECK_THROWS_AS(patch_selection_log_prob(sel, {sims[0]}), InvalidArgument);
}

TEST_CASE("composite shape term stays inside its patch when unblended") {
  const auto ts = two_class_set();
  const auto sdf = mask_to_sdf(oracle::disk(kD, 8, 9, 4));
  const auto img = fixture::noisy_image(oracle::disk(kD, 8, 9, 5), 200, 50, 0, 0);
  const auto l = make_patch_layout(kD, 2, 1);
  const auto w = patch_blend_weights(l, 0.0);
  const auto d = patch_distances_sq(sdf, ts, l);
  PatchSelection sel{{SelectionRecord{0, {0}, 0, false}, SelectionRecord{0, {2}, 0, false}}};
  ChanVeseParams p;
  p.mu_length = 0.0;
  const auto f = composite_perturbation(sdf, sel, img, ts, p, 1.0, l, w, d);
  const auto g = chan_vese_gradient(img, sdf, p);
  const double s0 = patch_sigma(l, 0, 8.0), s1 = patch_sigma(l, 1, 8.0);
  for (int r = 0; r < kD.height; ++r) {
    for (int c = 0; c < kD.width; ++c) {
      const auto& src = ts.shape_class(0).shapes[r < 8 ? 0 : 2].sdf;
      const double s = r < 8 ? s0 : s1;
      CHECK(f(r, c) == doctest::Approx(-g(r, c) + (src(r, c) - sdf(r, c)) / (s * s)).epsilon(1e-12));
    }
  }
}
