#include "kvtune/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "kvtune/errors.hpp"

namespace kvtune {

std::string QualityReport::to_json() const {
  nlohmann::ordered_json j;
  j["mae"] = mae;
  j["mae_pct"] = mae_pct;
  j["rmse"] = rmse;
  j["n_test"] = n_test;
  return j.dump();
}

QualityReport evaluate_predictions(std::span<const double> predicted, std::span<const double> actual) {
  if (actual.empty()) throw ValidationError("cannot evaluate on an empty test set");
  if (predicted.size() != actual.size()) throw ValidationError("prediction and target counts differ");
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  double target_sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double e = predicted[i] - actual[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
    target_sum += actual[i];
  }
  const auto n = static_cast<double>(actual.size());
  QualityReport r;
  r.n_test = actual.size();
  r.mae = abs_sum / n;
  r.rmse = std::sqrt(sq_sum / n);
  const double mean_target = target_sum / n;
  r.mae_pct = mean_target != 0.0 ? 100.0 * r.mae / mean_target : 0.0;
  return r;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("spearman needs two equal-length series (n >= 2)");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double cov = 0, va = 0, vb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

double median(std::span<const double> values) {
  if (values.empty()) throw ValidationError("median of an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

}  // namespace kvtune
