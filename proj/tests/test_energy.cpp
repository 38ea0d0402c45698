#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "shapemc/energy.hpp"
#include "shapemc/error.hpp"

using namespace shapemc;

namespace {

const GridDims kD{16, 16};

// Relative error of an analytic directional derivative against a central difference.
double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-12});
}

SignedDistanceField smooth_field(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto base = mask_to_sdf(oracle::disk(kD, 7.3, 8.1, 4.6));
  std::normal_distribution<double> n(0.0, 0.3);
  ScalarField f(kD);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = base[i] + n(rng);
  return SignedDistanceField(f);
}

}  // namespace

TEST_CASE("heaviside and delta") {
  ChanVeseParams p;
  CHECK(inside_weight(0.0, p) == 0.5);
  CHECK(inside_weight(-1e9, p) == doctest::Approx(1.0));
  CHECK(inside_weight(1e9, p) == doctest::Approx(0.0));
  CHECK(smoothed_delta(0.0, 1.5) == doctest::Approx(1.0 / (1.5 * std::numbers::pi)));
  // delta is the derivative of the outside weight
  const double h = 1e-6;
  CHECK(smoothed_delta(0.7, 1.5) ==
        doctest::Approx(((1 - inside_weight(0.7 + h, p)) - (1 - inside_weight(0.7 - h, p))) / (2 * h)).epsilon(1e-8));
  p.heaviside = Heaviside::hard;
  CHECK(inside_weight(-0.1, p) == 1.0);
  CHECK(inside_weight(0.0, p) == 0.0);
}

TEST_CASE("region means and energy against the written-out functional") {
  const auto m = oracle::disk(kD, 7.5, 7.5, 4.0);
  const auto img = fixture::noisy_image(m, 200, 50, 20, 1);
  const auto sdf = mask_to_sdf(m);
  ChanVeseParams p;
  p.mu_length = 0.0;
  const std::vector<double> phi(sdf.values().begin(), sdf.values().end());
  const std::vector<double> im(img.values().begin(), img.values().end());
  CHECK(chan_vese_energy(img, sdf, p) ==
        doctest::Approx(oracle::chan_vese(im, phi, p.epsilon, p.lambda1, p.lambda2)).epsilon(1e-12));
  p.mu_length = 0.25;
  CHECK(chan_vese_energy(img, sdf, p) ==
        doctest::Approx(oracle::chan_vese(im, phi, p.epsilon, p.lambda1, p.lambda2) +
                        0.25 * oracle::curve_length(phi, kD, p.epsilon))
            .epsilon(1e-10));

  ChanVeseParams hard;
  hard.heaviside = Heaviside::hard;
  const auto means = region_means(fixture::noisy_image(m, 200, 50, 0, 0), sdf, hard);
  CHECK(means.inside == 200.0);
  CHECK(means.outside == 50.0);
}

TEST_CASE("data gradient matches central differences") {
  std::mt19937_64 rng(21);
  ChanVeseParams p;
  for (double mu : {0.0, 0.1}) {
    p.mu_length = mu;
    const auto sdf = smooth_field(3);
    const auto img = fixture::noisy_image(oracle::disk(kD, 8, 7, 5), 200, 50, 25, 4);
    const auto grad = chan_vese_gradient(img, sdf, p);
    const std::vector<double> x(sdf.values().begin(), sdf.values().end());
    const std::vector<double> g(grad.values().begin(), grad.values().end());
    auto energy = [&](const std::vector<double>& v) {
      return chan_vese_energy(img, SignedDistanceField(ScalarField(kD, v)), p);
    };
    for (int k = 0; k < 5; ++k) {
      const auto v = fixture::random_direction(rng, kD.size());
      CHECK(rel_err(oracle::dot(g, v), oracle::directional_fd(energy, x, v, 1e-5)) <= 1e-5);
    }
  }
}

TEST_CASE("shape term is minus the gradient of the subset energy") {
  const auto ts = fixture::training_set(
      {{oracle::disk(kD, 7, 7, 4), oracle::disk(kD, 8, 9, 5), oracle::rect(kD, 3, 4, 9, 8)}}, 6.0);
  SelectionRecord sel{0, {0, 2, 2, 1}, 0.0, false};
  const auto sdf = smooth_field(8);
  const auto term = shape_term(sdf, sel, ts);
  std::vector<std::vector<double>> chosen;
  for (int i : sel.shape_indices) {
    const auto v = ts.shape_class(0).shapes[i].sdf.values();
    chosen.emplace_back(v.begin(), v.end());
  }
  auto energy = [&](const std::vector<double>& v) { return oracle::neg_log_parzen(v, chosen, 6.0); };
  const std::vector<double> x(sdf.values().begin(), sdf.values().end());
  const std::vector<double> t(term.values().begin(), term.values().end());
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const auto v = fixture::random_direction(rng, kD.size());
    CHECK(rel_err(-oracle::dot(t, v), oracle::directional_fd(energy, x, v, 1e-5)) <= 1e-4);
  }
}

TEST_CASE("full prior term and prior value over several classes") {
  const auto ts = fixture::training_set({{oracle::disk(kD, 7, 7, 4), oracle::disk(kD, 8, 9, 5)},
                                         {oracle::rect(kD, 3, 4, 9, 8)}},
                                        7.0);
  const auto sdf = smooth_field(5);
  // -log( 1/2 [ 1/2 (k00 + k01) + k10 ] )
  auto energy = [&](const std::vector<double>& v) {
    double per[2] = {0, 0};
    for (int c = 0; c < 2; ++c) {
      const auto& shapes = ts.shape_class(c).shapes;
      for (const auto& s : shapes) {
        const std::vector<double> ref(s.sdf.values().begin(), s.sdf.values().end());
        per[c] += std::exp(-oracle::neg_log_parzen(v, {ref}, 7.0)) / shapes.size();
      }
    }
    return -std::log(0.5 * (per[0] + per[1]));
  };
  const std::vector<double> x(sdf.values().begin(), sdf.values().end());
  const auto d_sq = shape_distances_sq(sdf, ts);
  CHECK(-log_shape_prior(d_sq, ts) == doctest::Approx(energy(x)).epsilon(1e-12));
  CHECK(shape_prior_density(sdf, ts) == doctest::Approx(std::exp(-energy(x))).epsilon(1e-10));

  ScalarField acc(kD);
  accumulate_full_prior_term(acc.values(), sdf, ts, d_sq);
  const std::vector<double> t(acc.values().begin(), acc.values().end());
  std::mt19937_64 rng(6);
  for (int k = 0; k < 5; ++k) {
    const auto v = fixture::random_direction(rng, kD.size());
    CHECK(rel_err(-oracle::dot(t, v), oracle::directional_fd(energy, x, v, 1e-5)) <= 1e-4);
  }
}

TEST_CASE("class densities and similarities") {
  const auto ts = fixture::training_set({{oracle::disk(kD, 7, 7, 4), oracle::disk(kD, 8, 9, 5)},
                                         {oracle::rect(kD, 3, 4, 9, 8)}},
                                        9.0);
  const auto sdf = mask_to_sdf(oracle::disk(kD, 7, 8, 4));
  const auto sims = shape_similarities(sdf, ts, 0);
  const auto d0 = l2_distance(sdf, ts.shape_class(0).shapes[0].sdf);
  CHECK(sims[0] == doctest::Approx(gaussian_kernel(d0, {9.0})).epsilon(1e-12));
  CHECK(class_conditional_density(sdf, ts, 0) == doctest::Approx((sims[0] + sims[1]) / 2).epsilon(1e-12));
  CHECK(class_conditional_density(sdf, ts, 1) == doctest::Approx(shape_similarities(sdf, ts, 1)[0]).epsilon(1e-12));
  CHECK_THROWS_AS(shape_similarities(sdf, ts, 2), InvalidArgument);
  CHECK_THROWS_AS(log_class_densities(std::vector<double>{1.0}, ts), InvalidArgument);
}

TEST_CASE("log domain survives kernel underflow") {
  const auto ts = fixture::training_set({{oracle::disk(kD, 4, 4, 2)}, {oracle::disk(kD, 11, 11, 3)}}, 0.05);
  const auto sdf = mask_to_sdf(oracle::disk(kD, 7, 7, 3));
  const auto d_sq = shape_distances_sq(sdf, ts);
  CHECK(shape_prior_density(sdf, ts) == 0.0);
  const double lp = log_shape_prior(d_sq, ts);
  CHECK(std::isfinite(lp));
  const auto per = log_class_densities(d_sq, ts);
  CHECK(lp == doctest::Approx(std::max(per[0], per[1]) - std::log(2.0) +
                              std::log1p(std::exp(-std::abs(per[0] - per[1]))))
                  .epsilon(1e-12));
  ScalarField acc(kD);
  accumulate_full_prior_term(acc.values(), sdf, ts, d_sq);
  CHECK(acc.all_finite());
}

TEST_CASE("log_sum_exp") {
  const std::vector<double> v{-1000.0, -1000.0};
  CHECK(log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)));
  const std::vector<double> none{-std::numeric_limits<double>::infinity()};
  CHECK(log_sum_exp(none) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("energy combination") {
  const auto full = combine_energy(2.0, -3.0, 0.5, TargetMode::full);
  CHECK(full.e_data == 2.0);
  CHECK(full.e_shape == 3.0);
  CHECK(full.e_total == 3.5);
  const auto shape_only = combine_energy(2.0, -3.0, 0.5, TargetMode::shape_only);
  CHECK(shape_only.e_total == 3.0);
  CHECK(shape_only.e_data == 2.0);
}

TEST_CASE("perturbation field combines both terms") {
  const auto ts = fixture::training_set({{oracle::disk(kD, 7, 7, 4), oracle::disk(kD, 8, 9, 5)}}, 6.0);
  const auto sdf = mask_to_sdf(oracle::disk(kD, 7, 8, 3));
  const auto img = fixture::noisy_image(oracle::disk(kD, 7, 7, 5), 200, 50, 10, 3);
  SelectionRecord sel{0, {1, 0}, 0.0, false};
  ChanVeseParams p;
  p.mu_length = 0;
  const auto f = perturbation_field(sdf, sel, img, ts, p, 2.5);
  const auto g = chan_vese_gradient(img, sdf, p);
  const auto s = shape_term(sdf, sel, ts);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == doctest::Approx(-g[i] + 2.5 * s[i]).epsilon(1e-14));
  CHECK_THROWS_AS(shape_term(sdf, SelectionRecord{0, {5}, 0, false}, ts), InvalidArgument);
}
