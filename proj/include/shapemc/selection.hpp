#pragma once

// Random class decision and similarity-weighted training-shape selection.
// Weights may be given linearly or as logs; draws use one uniform variate
// each, by inverse CDF over the normalized weights.

#include <span>
#include <vector>

#include "shapemc/energy.hpp"
#include "shapemc/rng.hpp"

namespace shapemc {

// exp(w - logsumexp(w)); uniform (and `*fallback` set) if every weight is -inf.
std::vector<double> normalize_log_weights(std::span<const double> log_weights, bool* fallback = nullptr);

// Index drawn from normalized probabilities.
int draw_index(Rng& rng, std::span<const double> probabilities);

struct ClassDecision {
  int class_id = 0;
  bool fallback = false;
};

ClassDecision select_class_log(Rng& rng, std::span<const double> log_densities);
ClassDecision select_class(Rng& rng, std::span<const double> densities);

// gamma independent draws with replacement. The record's class_id is left
// at `class_id`.
SelectionRecord select_subset_log(Rng& rng, std::span<const double> log_similarities, int gamma, int class_id = 0);
SelectionRecord select_subset(Rng& rng, std::span<const double> similarities, int gamma, int class_id = 0);

// sum over the record's indices of log normalized probability.
double selection_log_prob(std::span<const int> indices, std::span<const double> log_similarities);

std::vector<double> to_log(std::span<const double> linear);

}  // namespace shapemc
