#include "gatenet/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "gatenet/error.hpp"

namespace gatenet::metrics {

namespace {

void check_inputs(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("metric inputs differ in length: " + std::to_string(scores.size()) +
                    " scores vs " + std::to_string(labels.size()) + " labels");
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const double> labels) {
  std::size_t pos = 0;
  for (double y : labels) pos += y > 0.5 ? 1 : 0;
  return {pos, labels.size() - pos};
}

void require_both_classes(std::size_t pos, std::size_t neg) {
  if (pos == 0 || neg == 0) {
    throw DataError("auc undefined: labels contain a single class");
  }
}

}  // namespace

double auc(std::span<const double> scores, std::span<const double> labels) {
  check_inputs(scores, labels);
  const auto [n_pos, n_neg] = class_counts(labels);
  require_both_classes(n_pos, n_neg);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of positive ranks, with tied groups sharing their average rank.
  // Ranks are doubled so tied averages stay integral.
  std::uint64_t pos_rank_x2 = 0;
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) ++end;
    const std::uint64_t rank_x2 = start + 1 + end;  // (start+1) + end
    for (std::size_t i = start; i < end; ++i) {
      if (labels[order[i]] > 0.5) pos_rank_x2 += rank_x2;
    }
    start = end;
  }
  const double u = static_cast<double>(pos_rank_x2) / 2.0 -
                   static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_bruteforce(std::span<const double> scores, std::span<const double> labels) {
  check_inputs(scores, labels);
  const auto [n_pos, n_neg] = class_counts(labels);
  require_both_classes(n_pos, n_neg);
  double wins = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] <= 0.5) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] > 0.5) continue;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double logloss(std::span<const double> predictions, std::span<const double> labels) {
  check_inputs(predictions, labels);
  if (predictions.empty()) throw DataError("logloss of an empty set");
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double p =
        std::clamp(predictions[i], kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    const double y = labels[i];
    sum += y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return -sum / static_cast<double>(predictions.size());
}

EvalResult evaluate(std::span<const double> predictions, std::span<const double> labels) {
  EvalResult r;
  std::tie(r.n_pos, r.n_neg) = class_counts(labels);
  r.logloss = logloss(predictions, labels);
  if (r.n_pos > 0 && r.n_neg > 0) r.auc = auc(predictions, labels);
  return r;
}

}  // namespace gatenet::metrics
