#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

struct TreeParams {
  std::optional<int> max_depth;  // nullopt = unlimited
  int min_samples_leaf = 1;
  int min_samples_split = 2;
  std::size_t max_features = 0;  // features tried per node; 0 = all
};

/// Per-column sorted unique values and the rank of every cell, shared by all
/// trees fitted on the same matrix. Split search over ranks is exact: the
/// candidate thresholds are midpoints between consecutive distinct values
/// present in the node.
class BinnedMatrix {
 public:
  explicit BinnedMatrix(const FeatureMatrix& features);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::span<const std::uint32_t> column_bins(std::size_t c) const {
    return {bins_.data() + c * rows_, rows_};
  }
  const std::vector<double>& column_values(std::size_t c) const { return uniques_[c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint32_t> bins_;  // column-major
  std::vector<std::vector<double>> uniques_;
};

class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
    std::uint32_t samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  RegressionTree() = default;
  /// Checks structural consistency (children in range, features < n_features).
  RegressionTree(std::vector<Node> nodes, std::size_t n_features);

  /// Goes left iff x[feature] <= threshold.
  double predict(std::span<const double> x) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  bool operator==(const RegressionTree&) const = default;

 private:
  friend class TreeBuilder;
  std::vector<Node> nodes_;
  std::size_t n_features_ = 0;
};

/// Greedy CART with squared-error splits. `samples` lists training rows and
/// may repeat rows (bootstrap). `rng` is only consumed when
/// params.max_features is below the column count.
RegressionTree fit_tree(const BinnedMatrix& features, std::span<const double> targets,
                        std::span<const std::size_t> samples, const TreeParams& params,
                        SplitMix64* rng = nullptr);

/// Convenience overload over every row.
RegressionTree fit_tree(const FeatureMatrix& features, std::span<const double> targets,
                        const TreeParams& params, SplitMix64* rng = nullptr);

}  // namespace kvtune
