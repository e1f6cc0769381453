#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace gatenet {

inline constexpr double kProbabilityEpsilon = 1e-7;

struct EvalResult {
  std::optional<double> auc;  // empty when the labels hold a single class
  double logloss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

namespace metrics {

// Mann-Whitney AUC: average ranks for tied scores, O(N log N).
// Throws DataError when all labels share one class.
double auc(std::span<const double> scores, std::span<const double> labels);
// Explicit pair count with half credit per tie, O(n_pos·n_neg).
double auc_bruteforce(std::span<const double> scores, std::span<const double> labels);

// Mean binary cross-entropy with predictions clamped to [ε, 1-ε].
double logloss(std::span<const double> predictions, std::span<const double> labels);

EvalResult evaluate(std::span<const double> predictions, std::span<const double> labels);

}  // namespace metrics
}  // namespace gatenet
