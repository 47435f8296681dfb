#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/ensemble.hpp"
#include "kvtune/perf.hpp"
#include "kvtune/quality.hpp"

namespace kvtune {

inline constexpr std::string_view kModelFormat = "kvtune-model/1";

/// One (workload, physical design) cell seen during training.
struct TrainingContext {
  Workload workload;
  Physical physical;
  bool operator==(const TrainingContext&) const = default;
  auto operator<=>(const TrainingContext&) const = default;
};

struct ModelMetadata {
  Algorithm algorithm = Algorithm::random_forest;
  TargetMetric target = TargetMetric::throughput;
  SubdomainSpec subdomain;
  std::vector<std::string> columns;
  HyperParams hyperparams;
  std::vector<TrainingContext> training_contexts;  // sorted, unique
  int disks = 1;
  int heap_mb = 8192;
  std::size_t n_train = 0;

  bool operator==(const ModelMetadata&) const = default;
};

/// A fitted predictor f_hat plus everything needed to apply it to raw
/// configuration points.
class SurrogateModel {
 public:
  using Body = std::variant<RandomForestModel, GbdtModel>;

  SurrogateModel(ModelMetadata metadata, Body body);

  const ModelMetadata& metadata() const noexcept { return metadata_; }
  const Body& body() const noexcept { return body_; }
  std::size_t n_features() const noexcept;

  /// Throws ValidationError on width mismatch.
  double predict(std::span<const double> features) const;
  /// Encodes `point` under the model's subdomain first.
  double predict_point(const TuningDomain& domain, const ConfigurationPoint& point) const;
  std::vector<double> predict_all(const FeatureMatrix& features) const;

  /// True iff the (workload, n, rf) triple never occurred in training.
  bool is_extrapolation(const Workload& workload, const Physical& physical) const;

  /// The domain the model was trained over.
  TuningDomain domain() const { return build_cassandra_domain(metadata_.disks, metadata_.heap_mb); }

  bool operator==(const SurrogateModel&) const = default;

 private:
  ModelMetadata metadata_;
  Body body_;
};

QualityReport evaluate(const SurrogateModel& model, const FeatureMatrix& features, std::span<const double> targets);

// ---------------------------------------------------------------------------
// Hyperparameter search

struct Trial {
  HyperParams params;
  QualityReport validation;
};

struct TuningOutcome {
  HyperParams best;
  QualityReport validation;
  std::vector<Trial> trials;  // trial 0 is always the defaults
};

/// The fixed random-search grid for `algorithm` on a d-column problem.
std::vector<HyperParams> hyperparameter_grid(Algorithm algorithm, std::size_t d, std::uint64_t seed);

/// Random search: trial 0 is HyperParams::defaults, the remaining budget-1
/// trials are distinct grid points in seeded-shuffle order. Each trial is
/// scored by MAE on a seeded 80/20 holdout of the given training set.
TuningOutcome tune_hyperparameters(Algorithm algorithm, const FeatureMatrix& features,
                                   std::span<const double> targets, std::size_t budget, std::uint64_t seed,
                                   unsigned threads = 1);

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  Algorithm algorithm = Algorithm::random_forest;
  TargetMetric target = TargetMetric::throughput;
  SubdomainSpec subdomain;
  bool tune = true;
  std::size_t budget = 60;
  std::optional<HyperParams> hyperparams;  // used when tune == false
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TrainedModel {
  SurrogateModel model;
  std::optional<TuningOutcome> tuning;
};

/// Filters to the subdomain, optionally tunes, then fits on every example.
TrainedModel train_surrogate(const Dataset& dataset, const TrainOptions& options);

/// Fits one model with fixed hyperparameters on an already-encoded matrix.
SurrogateModel::Body fit_body(const FeatureMatrix& features, std::span<const double> targets, const HyperParams& hp,
                              unsigned threads = 1);
double predict_body(const SurrogateModel::Body& body, std::span<const double> x);

// ---------------------------------------------------------------------------
// Persistence (JSON document tagged with kModelFormat)

std::string to_json(const SurrogateModel& model);
SurrogateModel model_from_json(const std::string& text);
void save_model(const SurrogateModel& model, const std::filesystem::path& path);
SurrogateModel load_model(const std::filesystem::path& path);

}  // namespace kvtune
