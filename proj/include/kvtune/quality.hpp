#pragma once

#include <cstddef>
#include <span>
#include <string>

namespace kvtune {

struct QualityReport {
  double mae = 0.0;      // target units
  double mae_pct = 0.0;  // 100 * mae / mean(actual)
  double rmse = 0.0;     // target units
  std::size_t n_test = 0;

  /// {"mae":..,"mae_pct":..,"rmse":..,"n_test":..} on one line.
  std::string to_json() const;
};

/// Throws ValidationError on empty or mismatched inputs.
QualityReport evaluate_predictions(std::span<const double> predicted, std::span<const double> actual);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

double median(std::span<const double> values);

}  // namespace kvtune
