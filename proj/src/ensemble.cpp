#include "kvtune/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

std::string_view to_string(Algorithm a) { return a == Algorithm::random_forest ? "rf" : "gbdt"; }

Algorithm parse_algorithm(std::string_view text) {
  if (text == "rf") return Algorithm::random_forest;
  if (text == "gbdt") return Algorithm::gbdt;
  throw ValidationError("unknown algorithm '" + std::string(text) + "' (expected rf or gbdt)");
}

HyperParams HyperParams::defaults(Algorithm algorithm, std::uint64_t seed) {
  HyperParams hp;
  hp.algorithm = algorithm;
  hp.seed = seed;
  if (algorithm == Algorithm::gbdt) {
    hp.n_trees = 400;
    hp.learning_rate = 0.1;
    hp.max_depth = 4;
    hp.min_samples_leaf = 5;
    hp.subsample = 1.0;
  }
  return hp;
}

void HyperParams::validate() const {
  if (min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
  if (min_samples_split < 2) throw ValidationError("min_samples_split must be >= 2");
  if (max_depth && *max_depth < 1) throw ValidationError("max_depth must be >= 1");
  if (algorithm == Algorithm::random_forest && n_trees < 1) throw ValidationError("n_trees must be >= 1");
  if (algorithm == Algorithm::gbdt && n_trees < 0) throw ValidationError("n_trees must be >= 0");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ValidationError("learning_rate must lie in (0, 1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw ValidationError("subsample must lie in (0, 1]");
}

std::size_t resolve_max_features(const HyperParams& hp, std::size_t d) {
  if (hp.max_features == 0) return std::max<std::size_t>(1, (d + 2) / 3);
  return std::min(hp.max_features, d);
}

namespace {

void check_inputs(const FeatureMatrix& features, std::span<const double> targets) {
  if (features.rows == 0) throw ValidationError("cannot fit a model to zero examples");
  if (features.cols == 0) throw ValidationError("feature matrix has no columns");
  if (targets.size() != features.rows) throw ValidationError("target count does not match feature rows");
}

TreeParams tree_params(const HyperParams& hp) {
  TreeParams p;
  p.max_depth = hp.max_depth;
  p.min_samples_leaf = hp.min_samples_leaf;
  p.min_samples_split = hp.min_samples_split;
  return p;
}

}  // namespace

RandomForestModel::RandomForestModel(std::vector<RegressionTree> trees, std::size_t max_features)
    : trees_(std::move(trees)), max_features_(max_features) {
  if (trees_.empty()) throw ValidationError("random forest needs at least one tree");
  for (const auto& t : trees_)
    if (t.n_features() != trees_.front().n_features()) throw ValidationError("forest trees disagree on width");
}

double RandomForestModel::predict(std::span<const double> x) const {
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

RandomForestModel fit_random_forest(const FeatureMatrix& features, std::span<const double> targets,
                                    const HyperParams& hp, const ForestOptions& options) {
  hp.validate();
  check_inputs(features, targets);
  const BinnedMatrix binned(features);
  TreeParams params = tree_params(hp);
  params.max_features = resolve_max_features(hp, features.cols);
  const std::size_t n = features.rows;
  const auto n_trees = static_cast<std::size_t>(hp.n_trees);
  std::vector<RegressionTree> trees(n_trees);

  auto fit_one = [&](std::size_t i) {
    SplitMix64 rng(derive_seed(hp.seed, i));
    std::vector<std::size_t> samples(n);
    if (options.bootstrap) {
      for (auto& s : samples) s = rng.below(n);
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    trees[i] = fit_tree(binned, targets, samples, params, &rng);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_trees)));
  if (threads == 1) {
    for (std::size_t i = 0; i < n_trees; ++i) fit_one(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n_trees; i += threads) fit_one(i);
      });
  }
  return RandomForestModel(std::move(trees), params.max_features);
}

GbdtModel::GbdtModel(double init_value, double learning_rate, std::vector<RegressionTree> trees,
                     std::size_t n_features)
    : init_value_(init_value), learning_rate_(learning_rate), trees_(std::move(trees)), n_features_(n_features) {
  for (const auto& t : trees_)
    if (t.n_features() != n_features_) throw ValidationError("boosted trees disagree on width");
}

double GbdtModel::predict(std::span<const double> x) const { return predict_staged(x, trees_.size()); }

double GbdtModel::predict_staged(std::span<const double> x, std::size_t rounds) const {
  if (x.size() != n_features_)
    throw ValidationError("feature vector width " + std::to_string(x.size()) + " does not match model width " +
                          std::to_string(n_features_));
  double boost = 0.0;
  const std::size_t k = std::min(rounds, trees_.size());
  for (std::size_t i = 0; i < k; ++i) boost += trees_[i].predict(x);
  return init_value_ + learning_rate_ * boost;
}

GbdtModel fit_gbdt(const FeatureMatrix& features, std::span<const double> targets, const HyperParams& hp) {
  hp.validate();
  check_inputs(features, targets);
  const std::size_t n = features.rows;
  const double init = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
  const BinnedMatrix binned(features);
  const TreeParams params = tree_params(hp);

  std::vector<double> predictions(n, init);
  std::vector<double> residuals(n);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto sub_n = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hp.subsample * static_cast<double>(n))));
  SplitMix64 rng(hp.seed);

  std::vector<RegressionTree> trees;
  trees.reserve(static_cast<std::size_t>(hp.n_trees));
  for (int round = 0; round < hp.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) residuals[i] = targets[i] - predictions[i];
    std::vector<std::size_t> rows = all;
    if (sub_n < n) {
      // Partial Fisher-Yates: the first sub_n entries are a uniform subset.
      for (std::size_t i = 0; i < sub_n; ++i) std::swap(rows[i], rows[i + rng.below(n - i)]);
      rows.resize(sub_n);
      std::sort(rows.begin(), rows.end());
    }
    auto tree = fit_tree(binned, residuals, rows, params);
    for (std::size_t i = 0; i < n; ++i) predictions[i] += hp.learning_rate * tree.predict(features.row(i));
    trees.push_back(std::move(tree));
  }
  return GbdtModel(init, hp.learning_rate, std::move(trees), features.cols);
}

}  // namespace kvtune
