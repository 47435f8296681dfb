#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "kvtune/errors.hpp"
#include "kvtune/quality.hpp"
#include "kvtune/tree.hpp"
#include "split_oracle.hpp"

using namespace kvtune;

namespace {

void check_against_oracle(const RegressionTree& tree, const FeatureMatrix& x, const std::vector<double>& y,
                          const std::vector<std::size_t>& rows, std::size_t max_depth) {
  EXPECT_EQ(fixtures::compare_with_brute_force(tree, x, y, rows, max_depth), "");
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng, int levels) {
  FeatureMatrix m(rows, cols);
  for (auto& v : m.data) v = levels > 0 ? static_cast<double>(rng.below(static_cast<std::size_t>(levels))) : rng.uniform01();
  return m;
}

}  // namespace

TEST(Tree, SingleExampleIsLeaf) {
  FeatureMatrix x(1, 3);
  const std::vector<double> y{7.3};
  const auto t = fit_tree(x, y, {});
  ASSERT_EQ(t.nodes().size(), 1u);
  const std::vector<double> q{1, 2, 3};
  EXPECT_EQ(t.predict(q), 7.3);
}

TEST(Tree, EmptyInputRejected) {
  FeatureMatrix x(0, 3);
  const std::vector<double> y;
  EXPECT_THROW(fit_tree(x, y, {}), ValidationError);
}

TEST(Tree, WidthMismatchRejected) {
  SplitMix64 rng(1);
  const auto x = random_matrix(20, 3, rng, 0);
  std::vector<double> y(20, 1.0);
  const auto t = fit_tree(x, y, {});
  const std::vector<double> q{1, 2};
  EXPECT_THROW(t.predict(q), ValidationError);
}

TEST(Tree, MemorizesDistinctPoints) {
  SplitMix64 rng(5);
  const auto x = random_matrix(500, 4, rng, 0);
  std::vector<double> y(500);
  for (auto& v : y) v = rng.normal();
  const auto t = fit_tree(x, y, {});
  std::vector<double> p(500);
  for (std::size_t i = 0; i < 500; ++i) p[i] = t.predict(x.row(i));
  EXPECT_EQ(evaluate_predictions(p, y).mae, 0.0);
}

TEST(Tree, DepthTwoMatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SplitMix64 rng(seed);
    const auto x = random_matrix(50, 5, rng, seed % 2 ? 6 : 0);
    std::vector<double> y(50);
    for (auto& v : y) v = rng.normal() * 3 + x.data[0];
    TreeParams p;
    p.max_depth = 2;
    const auto t = fit_tree(x, y, p);
    std::vector<std::size_t> rows(50);
    std::iota(rows.begin(), rows.end(), 0);
    check_against_oracle(t, x, y, rows, 2);
    EXPECT_LE(t.depth(), 2u);
  }
}

TEST(Tree, SparseNodeUsesSortedScanCorrectly) {
  // A node much smaller than its columns' value sets.
  SplitMix64 rng(17);
  const auto x = random_matrix(2000, 4, rng, 0);
  std::vector<double> y(2000);
  for (auto& v : y) v = rng.normal();
  const BinnedMatrix bm(x);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < 2000; i += 40) rows.push_back(i);
  TreeParams p;
  p.max_depth = 3;
  const auto t = fit_tree(bm, y, rows, p);
  check_against_oracle(t, x, y, rows, 3);
}

TEST(Tree, RoutingIsLessOrEqual) {
  FeatureMatrix x(2, 1);
  x(0, 0) = 1.0;
  x(1, 0) = 3.0;
  const std::vector<double> y{10, 20};
  const auto t = fit_tree(x, y, {});
  ASSERT_EQ(t.nodes()[0].threshold, 2.0);
  const std::vector<double> at{2.0}, above{2.0000001};
  EXPECT_EQ(t.predict(at), 10.0);
  EXPECT_EQ(t.predict(above), 20.0);
}

TEST(Tree, TieBreaksToLowerFeatureThenThreshold) {
  // Features 0 and 2 are identical, so both give the same best split.
  FeatureMatrix x(4, 3);
  const double f[4] = {0, 1, 2, 3};
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = f[i];
    x(i, 1) = 0.0;
    x(i, 2) = f[i];
  }
  const std::vector<double> y{0, 0, 1, 1};
  TreeParams p;
  p.max_depth = 1;
  const auto t = fit_tree(x, y, p);
  EXPECT_EQ(t.nodes()[0].feature, 0);
  EXPECT_EQ(t.nodes()[0].threshold, 1.5);

  // Symmetric targets: thresholds 0.5 and 2.5 tie; the lower wins.
  const std::vector<double> y2{1, 0, 0, 1};
  FeatureMatrix x2(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x2(i, 0) = f[i];
  const auto t2 = fit_tree(x2, y2, p);
  EXPECT_EQ(t2.nodes()[0].threshold, 0.5);
}

TEST(Tree, StoppingRules) {
  SplitMix64 rng(3);
  const auto x = random_matrix(300, 3, rng, 0);
  std::vector<double> y(300);
  for (auto& v : y) v = rng.normal();
  TreeParams p;
  p.min_samples_leaf = 7;
  p.min_samples_split = 20;
  p.max_depth = 6;
  const auto t = fit_tree(x, y, p);
  EXPECT_LE(t.depth(), 6u);
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) {
      EXPECT_GE(n.samples, 7u);
    } else {
      EXPECT_GE(n.samples, 20u);
    }
  }

  std::vector<double> flat(300, 4.0);
  const auto c = fit_tree(x, flat, {});
  EXPECT_EQ(c.nodes().size(), 1u);
  EXPECT_EQ(c.leaf_count(), 1u);
}

TEST(Tree, LeafValueIsMean) {
  FeatureMatrix x(3, 1);
  const std::vector<double> y{1, 2, 6};
  TreeParams p;
  p.max_depth = 0;
  const auto t = fit_tree(x, y, p);
  const std::vector<double> q{0};
  EXPECT_DOUBLE_EQ(t.predict(q), 3.0);
}

TEST(Tree, BootstrapDuplicatesCount) {
  FeatureMatrix x(2, 1);
  x(0, 0) = 0;
  x(1, 0) = 1;
  const std::vector<double> y{0, 3};
  const BinnedMatrix bm(x);
  const std::vector<std::size_t> rows{0, 1, 1};
  TreeParams p;
  p.max_depth = 0;
  const auto t = fit_tree(bm, y, rows, p);
  const std::vector<double> q{0};
  EXPECT_DOUBLE_EQ(t.predict(q), 2.0);
}

TEST(Tree, StructuralValidation) {
  using N = RegressionTree::Node;
  EXPECT_THROW(RegressionTree({N{0, 0.5, 1, 5, 0, 2}, N{}, N{}}, 1), ValidationError);
  EXPECT_THROW(RegressionTree({N{3, 0.5, 1, 2, 0, 2}, N{}, N{}}, 1), ValidationError);
  EXPECT_NO_THROW(RegressionTree({N{0, 0.5, 1, 2, 0, 2}, N{}, N{}}, 1));
}
