#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kvtune/domain.hpp"
#include "kvtune/perf.hpp"

namespace kvtune {

struct TrainingExample {
  ConfigurationPoint point;
  Metrics metrics;

  bool operator==(const TrainingExample&) const = default;
};

/// An ordered collection of measured examples over one domain. Every point
/// is domain-valid and every metric positive; `add` enforces both.
class Dataset {
 public:
  explicit Dataset(TuningDomain domain) : domain_(std::move(domain)) {}

  const TuningDomain& domain() const noexcept { return domain_; }
  const std::vector<TrainingExample>& examples() const noexcept { return examples_; }
  const TrainingExample& operator[](std::size_t i) const { return examples_.at(i); }
  std::size_t size() const noexcept { return examples_.size(); }
  bool empty() const noexcept { return examples_.empty(); }

  void add(TrainingExample example);
  void reserve(std::size_t n) { examples_.reserve(n); }

  /// Examples at `indices`, in that order.
  Dataset select(std::span<const std::size_t> indices) const;
  std::vector<double> targets(TargetMetric target) const;

  bool operator==(const Dataset&) const = default;

 private:
  TuningDomain domain_;
  std::vector<TrainingExample> examples_;
};

/// The canonical CSV header (no trailing newline).
const std::string& csv_header();

void write_csv(const Dataset& dataset, std::ostream& out);
void save_csv(const Dataset& dataset, const std::filesystem::path& path);
/// Throws ValidationError naming the 1-based line on malformed rows,
/// domain-invalid values, or a non-canonical header.
Dataset read_csv(const TuningDomain& domain, std::istream& in);
Dataset load_csv(const TuningDomain& domain, const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_number(double value);

/// Uniform random permutation of 0..n-1 (Fisher-Yates over SplitMix64(seed)).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

struct Split {
  Dataset train;
  Dataset test;
};

/// |train| = round(fraction * N); the first |train| entries of the seeded
/// permutation go to train, the rest to test; each side keeps dataset order.
Split split(const Dataset& dataset, double train_fraction, std::uint64_t seed);
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n,
                                                                            double train_fraction,
                                                                            std::uint64_t seed);

/// `size` distinct examples chosen uniformly without replacement.
Dataset subsample(const Dataset& dataset, std::size_t size, std::uint64_t seed);
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t size, std::uint64_t seed);

/// Row-major dense matrix.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

FeatureMatrix make_matrix(const std::vector<FeatureVector>& rows);

struct ProjectedData {
  Dataset examples;
  FeatureMatrix features;
  std::vector<std::string> columns;
};

/// Keeps examples inside the subdomain and encodes them with the fixed
/// columns projected out. Throws ValidationError when nothing matches.
ProjectedData filter_and_project(const Dataset& dataset, const SubdomainSpec& subdomain);
/// Encodes every example; all must lie in the subdomain.
FeatureMatrix encode_all(const Dataset& dataset, const SubdomainSpec& subdomain);

struct GroupSummary {
  Workload workload;
  Physical physical;
  std::size_t count = 0;
  double throughput_max = 0, throughput_min = 0;
  double read_latency_min = 0, read_latency_max = 0;
  double write_latency_min = 0, write_latency_max = 0;
};

struct DatasetSummary {
  std::vector<GroupSummary> groups;  // workload, then n desc, rf desc
  std::size_t total() const;
};

DatasetSummary summarize(const Dataset& dataset);
/// One block per workload with a row per (n, rf), like a training-data overview table.
std::string render_summary(const DatasetSummary& summary);
void write_summary_csv(const DatasetSummary& summary, std::ostream& out);

}  // namespace kvtune
