#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/ensemble.hpp"
#include "kvtune/harness.hpp"
#include "kvtune/optimizer.hpp"
#include "kvtune/perf.hpp"
#include "kvtune/quality.hpp"
#include "kvtune/surrogate.hpp"

namespace kvtune {

/// A table of results plus the parameters that produced it.
struct ExperimentReport {
  std::string id;
  std::vector<std::pair<std::string, std::string>> parameters;  // always includes "seed"
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_parameter(std::string key, std::string value) { parameters.emplace_back(std::move(key), std::move(value)); }
  /// Throws if the row width does not match the columns.
  void add_row(std::vector<std::string> row);

  /// "# key=value" lines, then a header and the rows.
  void write_csv(std::ostream& out) const;
  std::string csv() const;
  /// Aligned plain-text table with the parameters above it.
  std::string render_table() const;
};

struct StudyOptions {
  std::vector<std::size_t> sizes;
  std::size_t test_size = 2000;
  Algorithm algorithm = Algorithm::gbdt;
  TargetMetric target = TargetMetric::throughput;
  std::size_t seeds = 3;
  std::size_t budget = 60;  // hyperparameter trials per fit; 0 disables tuning
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct CurveRow {
  std::string subdomain;  // "td1" for learning curves
  std::size_t size = 0;
  std::size_t seed_index = 0;
  QualityReport quality;
};

struct CurveMedian {
  std::string subdomain;
  std::size_t size = 0;
  double mae = 0.0;
  double mae_pct = 0.0;
  double rmse = 0.0;
};

struct StudyResult {
  std::vector<CurveRow> rows;
  std::vector<CurveMedian> medians;
  ExperimentReport report;

  /// Median for (subdomain, size); throws if absent.
  const CurveMedian& median_at(const std::string& subdomain, std::size_t size) const;
};

/// Holds out test_size examples once (derive_seed(seed, 0)), then for each
/// seed index s and size draws a training subsample from the remainder,
/// tunes, fits and scores on the held-out set.
StudyResult learning_curve(const Dataset& data, const StudyOptions& options);

/// The same protocol per subdomain: filter, project, hold out test_size
/// within the filtered set, subsample, fit, score.
StudyResult subdomain_study(const Dataset& data, const std::vector<SubdomainSpec>& subdomains,
                            const StudyOptions& options);

enum class OptimizerKind { sa, hc, exhaustive };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view text);

struct TuneRequest {
  Workload workload;
  Physical physical;
  OptimizerKind optimizer = OptimizerKind::sa;
  std::size_t budget = 5000;
  std::uint64_t seed = 0;
};

struct TuneOutcome {
  TuningResult result;
  TargetMetric target = TargetMetric::throughput;
  bool extrapolation = false;
  ExperimentReport report;
};

/// Runs the optimizer over an arbitrary objective.
TuneOutcome tune_objective(const Objective& objective, const TuningDomain& domain, const TuneRequest& request);

/// Runs the optimizer over the model's predictions. Throws ValidationError
/// when the model's subdomain fixes a different workload or physical design.
TuneOutcome tune_with_model(const SurrogateModel& model, const TuneRequest& request);

struct ComparisonRow {
  TargetMetric metric;
  double baseline = 0.0;
  double tuned = 0.0;
  double delta_pct = 0.0;  // 100 * (tuned - baseline) / baseline
};

struct Comparison {
  RepeatedMeasurement baseline;
  RepeatedMeasurement tuned;
  std::vector<ComparisonRow> rows;
  ExperimentReport report;
};

/// Measures both configurations `trials` times; both use invocations
/// first_invocation .. first_invocation + trials - 1.
Comparison compare_configs(BenchmarkBackend& backend, const ConfigurationPoint& baseline,
                           const ConfigurationPoint& tuned, std::size_t trials, std::uint64_t first_invocation = 0);

/// Percent change in the improving direction of `metric` (positive = better).
double improvement_pct(TargetMetric metric, double baseline, double tuned);

}  // namespace kvtune
