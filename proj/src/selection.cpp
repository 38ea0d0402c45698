#include "shapemc/selection.hpp"

#include <cmath>
#include <limits>

#include "shapemc/error.hpp"

namespace shapemc {

std::vector<double> to_log(std::span<const double> linear) {
  std::vector<double> out(linear.size());
  for (std::size_t i = 0; i < linear.size(); ++i) {
    if (!(linear[i] >= 0.0)) throw InvalidArgument("weights must be non-negative");
    out[i] = linear[i] > 0.0 ? std::log(linear[i]) : -std::numeric_limits<double>::infinity();
  }
  return out;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights, bool* fallback) {
  if (log_weights.empty()) throw InvalidArgument("cannot normalize an empty weight vector");
  const double lse = log_sum_exp(log_weights);
  std::vector<double> p(log_weights.size());
  const bool degenerate = !std::isfinite(lse);
  if (fallback != nullptr) *fallback = degenerate;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = degenerate ? 1.0 / static_cast<double>(p.size()) : std::exp(log_weights[i] - lse);
  }
  return p;
}

int draw_index(Rng& rng, std::span<const double> probabilities) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] <= 0.0) continue;
    cumulative += probabilities[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return last_positive;
  }
  // rounding left the total just below 1
  return last_positive;
}

ClassDecision select_class_log(Rng& rng, std::span<const double> log_densities) {
  ClassDecision d;
  const std::vector<double> p = normalize_log_weights(log_densities, &d.fallback);
  d.class_id = draw_index(rng, p);
  return d;
}

ClassDecision select_class(Rng& rng, std::span<const double> densities) {
  return select_class_log(rng, to_log(densities));
}

double selection_log_prob(std::span<const int> indices, std::span<const double> log_similarities) {
  const std::vector<double> p = normalize_log_weights(log_similarities);
  double total = 0.0;
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= p.size()) throw InvalidArgument("selection index out of range");
    total += std::log(p[idx]);
  }
  return total;
}

SelectionRecord select_subset_log(Rng& rng, std::span<const double> log_similarities, int gamma, int class_id) {
  if (gamma < 1) throw InvalidArgument("gamma must be at least 1");
  if (log_similarities.empty()) throw InvalidArgument("cannot select from an empty class");
  SelectionRecord rec;
  rec.class_id = class_id;
  const std::vector<double> p = normalize_log_weights(log_similarities, &rec.fallback);
  rec.shape_indices.reserve(gamma);
  for (int g = 0; g < gamma; ++g) {
    const int idx = draw_index(rng, p);
    rec.shape_indices.push_back(idx);
    rec.log_prob += std::log(p[idx]);
  }
  return rec;
}

SelectionRecord select_subset(Rng& rng, std::span<const double> similarities, int gamma, int class_id) {
  return select_subset_log(rng, to_log(similarities), gamma, class_id);
}

}  // namespace shapemc
