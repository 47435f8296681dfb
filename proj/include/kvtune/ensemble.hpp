#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/tree.hpp"

namespace kvtune {

enum class Algorithm { random_forest, gbdt };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);

struct HyperParams {
  Algorithm algorithm = Algorithm::random_forest;
  std::optional<int> max_depth;
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  int n_trees = 200;
  std::size_t max_features = 0;  // RF only; 0 = ceil(d / 3)
  double learning_rate = 0.1;    // GBDT only
  double subsample = 1.0;        // GBDT only
  std::uint64_t seed = 0;

  /// RF: 200 trees, max_features ceil(d/3), leaf 1, unlimited depth.
  /// GBDT: 400 trees, rate 0.1, depth 4, leaf 5, subsample 1.
  static HyperParams defaults(Algorithm algorithm, std::uint64_t seed = 0);

  /// Throws ValidationError on out-of-range values.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

/// Feature count considered per RF split for a d-column matrix.
std::size_t resolve_max_features(const HyperParams& hp, std::size_t d);

struct ForestOptions {
  bool bootstrap = true;  // false only for diagnostics
  unsigned threads = 1;
};

class RandomForestModel {
 public:
  RandomForestModel() = default;
  RandomForestModel(std::vector<RegressionTree> trees, std::size_t max_features);

  /// Arithmetic mean of the member trees.
  double predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  std::size_t max_features() const noexcept { return max_features_; }
  std::size_t n_features() const noexcept { return trees_.empty() ? 0 : trees_.front().n_features(); }

  bool operator==(const RandomForestModel&) const = default;

 private:
  std::vector<RegressionTree> trees_;
  std::size_t max_features_ = 0;
};

/// Tree i is grown on a bootstrap sample drawn from
/// SplitMix64(derive_seed(hp.seed, i)), which also drives its feature
/// subsampling; results do not depend on `threads`.
RandomForestModel fit_random_forest(const FeatureMatrix& features, std::span<const double> targets,
                                    const HyperParams& hp, const ForestOptions& options = {});

class GbdtModel {
 public:
  GbdtModel() = default;
  GbdtModel(double init_value, double learning_rate, std::vector<RegressionTree> trees, std::size_t n_features);

  /// init + rate * sum of trees.
  double predict(std::span<const double> x) const;
  /// Prediction using only the first `rounds` trees.
  double predict_staged(std::span<const double> x, std::size_t rounds) const;

  double init_value() const noexcept { return init_value_; }
  double learning_rate() const noexcept { return learning_rate_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }
  std::size_t n_features() const noexcept { return n_features_; }

  bool operator==(const GbdtModel&) const = default;

 private:
  double init_value_ = 0.0;
  double learning_rate_ = 0.1;
  std::vector<RegressionTree> trees_;
  std::size_t n_features_ = 0;
};

/// Squared-loss boosting: each round fits a tree to the current residuals
/// (on a seeded row subsample when hp.subsample < 1) and adds rate * tree.
GbdtModel fit_gbdt(const FeatureMatrix& features, std::span<const double> targets, const HyperParams& hp);

}  // namespace kvtune
