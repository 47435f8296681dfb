#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "kvtune/ensemble.hpp"
#include "kvtune/errors.hpp"
#include "kvtune/quality.hpp"
#include "support.hpp"

using namespace kvtune;

namespace {

struct Problem {
  FeatureMatrix x;
  std::vector<double> y;
};

Problem oracle_problem(std::size_t n, std::uint64_t seed, const SubdomainSpec& sd, TargetMetric t) {
  const auto d = fixtures::oracle_dataset(std::max<std::size_t>(n, 24), seed);
  auto proj = filter_and_project(d, sd);
  return {proj.features, proj.examples.targets(t)};
}

double mse_at(const GbdtModel& m, const Problem& p, std::size_t rounds) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.x.rows; ++i) {
    const double e = m.predict_staged(p.x.row(i), rounds) - p.y[i];
    s += e * e;
  }
  return s / static_cast<double>(p.x.rows);
}

}  // namespace

TEST(HyperParams, DefaultsAndValidation) {
  const auto rf = HyperParams::defaults(Algorithm::random_forest);
  EXPECT_EQ(rf.n_trees, 200);
  EXPECT_FALSE(rf.max_depth.has_value());
  EXPECT_EQ(rf.min_samples_leaf, 1);
  EXPECT_EQ(resolve_max_features(rf, 11), 4u);
  EXPECT_EQ(resolve_max_features(rf, 7), 3u);
  const auto gb = HyperParams::defaults(Algorithm::gbdt);
  EXPECT_EQ(gb.n_trees, 400);
  EXPECT_EQ(gb.learning_rate, 0.1);
  EXPECT_EQ(gb.max_depth, 4);
  EXPECT_EQ(gb.min_samples_leaf, 5);
  EXPECT_EQ(gb.subsample, 1.0);

  auto bad = gb;
  bad.learning_rate = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = gb;
  bad.learning_rate = 1.5;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = gb;
  bad.subsample = 0.0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = rf;
  bad.min_samples_leaf = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = rf;
  bad.n_trees = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(RandomForest, DegenerateForestEqualsTree) {
  const auto p = oracle_problem(200, 1, SubdomainSpec::make(SubdomainId::td1), TargetMetric::read_latency);
  auto hp = HyperParams::defaults(Algorithm::random_forest, 3);
  hp.n_trees = 1;
  hp.max_features = p.x.cols;
  const auto forest = fit_random_forest(p.x, p.y, hp, {false, 1});
  const auto tree = fit_tree(p.x, p.y, {});
  for (std::size_t i = 0; i < p.x.rows; ++i) EXPECT_EQ(forest.predict(p.x.row(i)), tree.predict(p.x.row(i)));
}

TEST(RandomForest, PredictionIsMeanOfTrees) {
  const auto p = oracle_problem(300, 2, SubdomainSpec::make(SubdomainId::td1), TargetMetric::throughput);
  auto hp = HyperParams::defaults(Algorithm::random_forest, 5);
  hp.n_trees = 10;
  const auto f = fit_random_forest(p.x, p.y, hp);
  ASSERT_EQ(f.trees().size(), 10u);
  SplitMix64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const auto row = p.x.row(rng.below(p.x.rows));
    double s = 0, lo = INFINITY, hi = -INFINITY;
    for (const auto& t : f.trees()) {
      const double v = t.predict(row);
      s += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double pred = f.predict(row);
    EXPECT_NEAR(pred, s / 10.0, 1e-9);
    EXPECT_GE(pred, lo - 1e-9);
    EXPECT_LE(pred, hi + 1e-9);
  }
}

TEST(RandomForest, ThreadCountDoesNotChangeModel) {
  const auto p = oracle_problem(300, 4, SubdomainSpec::make(SubdomainId::td1), TargetMetric::write_latency);
  auto hp = HyperParams::defaults(Algorithm::random_forest, 9);
  hp.n_trees = 12;
  EXPECT_EQ(fit_random_forest(p.x, p.y, hp, {true, 1}), fit_random_forest(p.x, p.y, hp, {true, 4}));
  EXPECT_EQ(fit_random_forest(p.x, p.y, hp), fit_random_forest(p.x, p.y, hp));
}

TEST(RandomForest, BeatsSingleTreeOnTd4) {
  const auto sd = SubdomainSpec::make(SubdomainId::td4, Workload{50, 50}, Physical{4, 3});
  std::vector<double> forest_pct, tree_pct;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto d = fixtures::oracle_dataset(24 * 4096, 100 + seed);  // 4,096 per cell
    const auto all = filter_and_project(d, sd);
    ASSERT_GE(all.examples.size(), 4096u);
    const auto [tr, te] = split_indices(all.examples.size(), 0.75, seed);
    const auto train = all.examples.select(tr), test = all.examples.select(te);
    const auto xtr = encode_all(train, sd), xte = encode_all(test, sd);
    const auto ytr = train.targets(TargetMetric::throughput), yte = test.targets(TargetMetric::throughput);
    auto hp = HyperParams::defaults(Algorithm::random_forest, seed);
    hp.n_trees = 100;
    const auto f = fit_random_forest(xtr, ytr, hp);
    const auto t = fit_tree(xtr, ytr, {});
    std::vector<double> pf(xte.rows), pt(xte.rows);
    for (std::size_t i = 0; i < xte.rows; ++i) {
      pf[i] = f.predict(xte.row(i));
      pt[i] = t.predict(xte.row(i));
    }
    forest_pct.push_back(evaluate_predictions(pf, yte).mae_pct);
    tree_pct.push_back(evaluate_predictions(pt, yte).mae_pct);
  }
  EXPECT_LT(median(forest_pct), median(tree_pct));
}

TEST(Gbdt, ZeroTreesPredictsMean) {
  const auto p = oracle_problem(100, 3, SubdomainSpec::make(SubdomainId::td1), TargetMetric::read_latency);
  auto hp = HyperParams::defaults(Algorithm::gbdt);
  hp.n_trees = 0;
  const auto m = fit_gbdt(p.x, p.y, hp);
  double mean = 0;
  for (double v : p.y) mean += v;
  mean /= static_cast<double>(p.y.size());
  EXPECT_NEAR(m.predict(p.x.row(0)), mean, 1e-12);
  EXPECT_EQ(m.init_value(), m.predict(p.x.row(5)));
}

TEST(Gbdt, OneFullTreeZeroesResiduals) {
  SplitMix64 rng(8);
  FeatureMatrix x(100, 3);
  for (auto& v : x.data) v = rng.uniform01();
  std::vector<double> y(100);
  for (auto& v : y) v = rng.normal();
  auto hp = HyperParams::defaults(Algorithm::gbdt);
  hp.n_trees = 1;
  hp.learning_rate = 1.0;
  hp.max_depth.reset();
  hp.min_samples_leaf = 1;
  const auto m = fit_gbdt(x, y, hp);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_NEAR(m.predict(x.row(i)), y[i], 1e-12);
}

TEST(Gbdt, TrainingLossNonIncreasing) {
  const auto p = oracle_problem(200, 6, SubdomainSpec::make(SubdomainId::td1), TargetMetric::throughput);
  auto hp = HyperParams::defaults(Algorithm::gbdt, 2);
  hp.n_trees = 100;
  const auto m = fit_gbdt(p.x, p.y, hp);
  double prev = mse_at(m, p, 0);
  for (std::size_t r = 1; r <= 100; ++r) {
    const double cur = mse_at(m, p, r);
    EXPECT_LE(cur, prev * (1 + 1e-12)) << "round " << r;
    prev = cur;
  }
}

TEST(Gbdt, StagedMatchesFull) {
  const auto p = oracle_problem(120, 7, SubdomainSpec::make(SubdomainId::td1), TargetMetric::write_latency);
  auto hp = HyperParams::defaults(Algorithm::gbdt, 2);
  hp.n_trees = 30;
  hp.subsample = 0.7;
  const auto m = fit_gbdt(p.x, p.y, hp);
  EXPECT_EQ(m.predict(p.x.row(3)), m.predict_staged(p.x.row(3), 30));
  EXPECT_EQ(m, fit_gbdt(p.x, p.y, hp));
  EXPECT_EQ(m.predict_staged(p.x.row(3), 31), m.predict(p.x.row(3)));
}

TEST(Gbdt, AllZeroTreesGiveInit) {
  using N = RegressionTree::Node;
  std::vector<RegressionTree> trees(3, RegressionTree({N{}}, 2));
  const GbdtModel m(5.5, 0.1, trees, 2);
  const std::vector<double> q{1, 2};
  EXPECT_EQ(m.predict(q), 5.5);
}

TEST(Ensemble, EmptyInputRejected) {
  FeatureMatrix x(0, 2);
  const std::vector<double> y;
  EXPECT_THROW(fit_random_forest(x, y, HyperParams::defaults(Algorithm::random_forest)), ValidationError);
  EXPECT_THROW(fit_gbdt(x, y, HyperParams::defaults(Algorithm::gbdt)), ValidationError);
}
