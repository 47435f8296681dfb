#include <gtest/gtest.h>

#include <cmath>

#include "kvtune/errors.hpp"
#include "kvtune/quality.hpp"
#include "kvtune/random.hpp"

using namespace kvtune;

TEST(Quality, HandComputed) {
  const std::vector<double> y{10, 20}, yhat{12, 16};
  const auto q = evaluate_predictions(yhat, y);
  EXPECT_DOUBLE_EQ(q.mae, 3.0);
  EXPECT_DOUBLE_EQ(q.rmse, std::sqrt(10.0));
  EXPECT_DOUBLE_EQ(q.mae_pct, 20.0);
  EXPECT_EQ(q.n_test, 2u);
}

TEST(Quality, PerfectPredictions) {
  const std::vector<double> y{1, 2, 3};
  const auto q = evaluate_predictions(y, y);
  EXPECT_EQ(q.mae, 0.0);
  EXPECT_EQ(q.rmse, 0.0);
  EXPECT_EQ(q.mae_pct, 0.0);
}

TEST(Quality, RejectsBadInput) {
  const std::vector<double> empty;
  const std::vector<double> one{1.0};
  const std::vector<double> two{1.0, 2.0};
  EXPECT_THROW(evaluate_predictions(empty, empty), ValidationError);
  EXPECT_THROW(evaluate_predictions(one, two), ValidationError);
}

TEST(Quality, RmseAtLeastMae) {
  SplitMix64 rng(1);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(50);
    std::vector<double> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = 1.0 + rng.uniform01() * 100;
      p[i] = y[i] + rng.normal() * 10;
    }
    const auto q = evaluate_predictions(p, y);
    EXPECT_GE(q.rmse, q.mae * (1 - 1e-12));
    EXPECT_GE(q.mae, 0.0);
  }
}

TEST(Quality, JsonIsOneLine) {
  const std::vector<double> y{10, 20}, yhat{12, 16};
  const auto j = evaluate_predictions(yhat, y).to_json();
  EXPECT_EQ(j.find('\n'), std::string::npos);
  EXPECT_EQ(j.rfind("{\"mae\":3", 0), 0u);
  EXPECT_NE(j.find("\"n_test\":2"), std::string::npos);
}

TEST(Spearman, Basics) {
  const std::vector<double> a{1, 2, 3, 4, 5};
  const std::vector<double> b{10, 20, 30, 40, 50};
  const std::vector<double> c{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-12);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-12);
  // Ties get average ranks: ranks of {1,2,2,3} are {1,2.5,2.5,4}.
  const std::vector<double> t{1, 2, 2, 3};
  const std::vector<double> u{1, 2, 3, 4};
  const double rt[] = {1, 2.5, 2.5, 4}, ru[] = {1, 2, 3, 4};
  double mt = 2.5, mu = 2.5, num = 0, dt = 0, du = 0;
  for (int i = 0; i < 4; ++i) {
    num += (rt[i] - mt) * (ru[i] - mu);
    dt += (rt[i] - mt) * (rt[i] - mt);
    du += (ru[i] - mu) * (ru[i] - mu);
  }
  EXPECT_NEAR(spearman(t, u), num / std::sqrt(dt * du), 1e-12);
}

TEST(Median, OddEven) {
  const std::vector<double> odd{3, 1, 2}, even{4, 1, 3, 2};
  EXPECT_EQ(median(odd), 2.0);
  EXPECT_EQ(median(even), 2.5);
}
