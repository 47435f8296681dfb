#include <gtest/gtest.h>

#include <filesystem>

#include "kvtune/errors.hpp"
#include "kvtune/surrogate.hpp"
#include "support.hpp"

using namespace kvtune;

namespace {

TrainOptions options(Algorithm a, TargetMetric t, SubdomainSpec sd = SubdomainSpec::make(SubdomainId::td1)) {
  TrainOptions o;
  o.algorithm = a;
  o.target = t;
  o.subdomain = sd;
  o.tune = false;
  o.seed = 11;
  auto hp = HyperParams::defaults(a, 11);
  hp.n_trees = 25;
  o.hyperparams = hp;
  return o;
}

}  // namespace

TEST(Surrogate, MetadataRecordsSubdomainAndColumns) {
  const auto d = fixtures::oracle_dataset(480, 1);
  const auto m = train_surrogate(d, options(Algorithm::gbdt, TargetMetric::read_latency)).model;
  EXPECT_EQ(m.metadata().subdomain.id, SubdomainId::td1);
  EXPECT_EQ(m.metadata().columns.size(), 11u);
  EXPECT_EQ(m.metadata().columns.front(), "wl_read_pct");
  EXPECT_EQ(m.metadata().n_train, 480u);
  EXPECT_EQ(m.metadata().training_contexts.size(), 24u);
  EXPECT_TRUE(std::is_sorted(m.metadata().training_contexts.begin(), m.metadata().training_contexts.end()));

  const auto td4 = SubdomainSpec::make(SubdomainId::td4, Workload{5, 95}, Physical{4, 3});
  const auto m4 = train_surrogate(d, options(Algorithm::random_forest, TargetMetric::throughput, td4)).model;
  EXPECT_EQ(m4.n_features(), 7u);
  EXPECT_EQ(m4.metadata().n_train, 20u);
}

TEST(Surrogate, WidthMismatch) {
  const auto d = fixtures::oracle_dataset(240, 1);
  const auto m = train_surrogate(d, options(Algorithm::gbdt, TargetMetric::throughput)).model;
  const std::vector<double> x(5, 0.0);
  EXPECT_THROW(m.predict(x), ValidationError);
}

TEST(Surrogate, ExtrapolationFlag) {
  const auto domain = build_cassandra_domain();
  OracleParams op;
  op.noise_sigma = 0;
  SyntheticBackend be(domain, op);
  const auto data = generate_dataset(be, domain, exclude_physical(default_plan(480, 2), {2, 2})).dataset;
  const auto m = train_surrogate(data, options(Algorithm::gbdt, TargetMetric::throughput)).model;
  EXPECT_FALSE(m.is_extrapolation({50, 50}, {4, 3}));
  EXPECT_FALSE(m.is_extrapolation({5, 95}, {3, 1}));
  EXPECT_TRUE(m.is_extrapolation({25, 75}, {4, 3}));
  EXPECT_TRUE(m.is_extrapolation({50, 50}, {2, 1}));
  EXPECT_TRUE(m.is_extrapolation({50, 50}, {2, 2}));
}

TEST(Surrogate, SerializationRoundTripsPredictions) {
  const auto d = fixtures::oracle_dataset(480, 4, 0.02);
  for (auto a : {Algorithm::random_forest, Algorithm::gbdt}) {
    auto o = options(a, TargetMetric::write_latency);
    if (a == Algorithm::gbdt) o.hyperparams->subsample = 0.7;
    const auto m = train_surrogate(d, o).model;
    const auto text = to_json(m);
    const auto back = model_from_json(text);
    // Node sample counts are not stored, so compare documents and predictions.
    EXPECT_EQ(back.metadata(), m.metadata());
    EXPECT_EQ(to_json(back), text);
    const auto x = encode_all(d, m.metadata().subdomain);
    for (std::size_t i = 0; i < x.rows; ++i) ASSERT_EQ(back.predict(x.row(i)), m.predict(x.row(i)));

    const auto path = std::filesystem::temp_directory_path() / "kvtune_model_roundtrip.json";
    save_model(m, path);
    EXPECT_EQ(to_json(load_model(path)), text);
    std::filesystem::remove(path);
  }
}

TEST(Surrogate, RejectsForeignDocuments) {
  EXPECT_THROW(model_from_json("{}"), ValidationError);
  EXPECT_THROW(model_from_json("not json"), ValidationError);
  EXPECT_THROW(model_from_json(R"({"format":"other/1"})"), ValidationError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), ValidationError);
}

TEST(Surrogate, RefitIsDeterministic) {
  const auto d = fixtures::oracle_dataset(240, 5, 0.02);
  for (auto a : {Algorithm::random_forest, Algorithm::gbdt}) {
    const auto o = options(a, TargetMetric::throughput);
    EXPECT_EQ(to_json(train_surrogate(d, o).model), to_json(train_surrogate(d, o).model));
  }
}

TEST(Tuning, BudgetOneIsDefaults) {
  const auto d = fixtures::oracle_dataset(240, 6);
  const auto x = encode_all(d, SubdomainSpec::make(SubdomainId::td1));
  const auto y = d.targets(TargetMetric::throughput);
  const auto out = tune_hyperparameters(Algorithm::gbdt, x, y, 1, 3);
  ASSERT_EQ(out.trials.size(), 1u);
  EXPECT_EQ(out.best, HyperParams::defaults(Algorithm::gbdt, 3));
}

TEST(Tuning, BestNoWorseThanDefaults) {
  const auto d = fixtures::oracle_dataset(240, 7);
  const auto x = encode_all(d, SubdomainSpec::make(SubdomainId::td1));
  const auto y = d.targets(TargetMetric::read_latency);
  for (auto a : {Algorithm::random_forest, Algorithm::gbdt}) {
    const auto out = tune_hyperparameters(a, x, y, 6, 1);
    ASSERT_EQ(out.trials.size(), 6u);
    EXPECT_LE(out.validation.mae, out.trials.front().validation.mae);
    for (const auto& t : out.trials) EXPECT_LE(out.validation.mae, t.validation.mae);
    // Distinct trials.
    for (std::size_t i = 0; i < out.trials.size(); ++i)
      for (std::size_t j = i + 1; j < out.trials.size(); ++j) EXPECT_FALSE(out.trials[i].params == out.trials[j].params);
  }
}

TEST(Tuning, DeterministicPerSeed) {
  const auto d = fixtures::oracle_dataset(240, 8);
  const auto x = encode_all(d, SubdomainSpec::make(SubdomainId::td1));
  const auto y = d.targets(TargetMetric::write_latency);
  const auto a = tune_hyperparameters(Algorithm::gbdt, x, y, 4, 9);
  const auto b = tune_hyperparameters(Algorithm::gbdt, x, y, 4, 9);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.validation.mae, b.validation.mae);
}

TEST(Tuning, GridMatchesDeclaredAxes) {
  EXPECT_EQ(hyperparameter_grid(Algorithm::random_forest, 11, 0).size(), 3u * 4 * 4 * 4);
  EXPECT_EQ(hyperparameter_grid(Algorithm::gbdt, 11, 0).size(), 3u * 3 * 3 * 3 * 2);
}

TEST(Tuning, TunedForestBeatsDefaultsOnOracleData) {
  int strictly_better = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto d = fixtures::oracle_dataset(2048, 40 + seed, 0.02);
    const auto x = encode_all(d, SubdomainSpec::make(SubdomainId::td1));
    const auto y = d.targets(TargetMetric::throughput);
    const auto out = tune_hyperparameters(Algorithm::random_forest, x, y, 12, seed);
    EXPECT_LE(out.validation.mae, out.trials.front().validation.mae);
    strictly_better += out.validation.mae < out.trials.front().validation.mae;
  }
  EXPECT_GE(strictly_better, 2);
}

TEST(Tuning, RejectsTinyInputs) {
  FeatureMatrix x(5, 2);
  const std::vector<double> y(5, 1.0);
  EXPECT_THROW(tune_hyperparameters(Algorithm::gbdt, x, y, 3, 0), ValidationError);
  FeatureMatrix x2(20, 2);
  const std::vector<double> y2(20, 1.0);
  EXPECT_THROW(tune_hyperparameters(Algorithm::gbdt, x2, y2, 0, 0), ValidationError);
}
