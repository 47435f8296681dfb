#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/oracle.hpp"
#include "kvtune/perf.hpp"

namespace kvtune {

/// Steps of one generation cycle, in execution order.
enum class Step { stop, configure, start, workload, capture };

std::string_view to_string(Step s);

struct Failure {
  Step step = Step::workload;
  std::string message;
};

/// Result of one backend call: metrics, or the step that failed.
struct Outcome {
  std::optional<Metrics> metrics;
  std::optional<Failure> failure;

  bool ok() const noexcept { return metrics.has_value(); }
  static Outcome success(Metrics m) { return {m, std::nullopt}; }
  static Outcome failed(Step step, std::string message) { return {std::nullopt, Failure{step, std::move(message)}}; }
};

/// Something that can run a workload against a configuration.
/// `invocation` identifies the call so that seeded backends stay
/// deterministic regardless of scheduling.
class BenchmarkBackend {
 public:
  virtual ~BenchmarkBackend() = default;

  /// True when measurements must never overlap (a shared live cluster).
  virtual bool requires_exclusive_access() const = 0;
  /// Steps 1-3: stop, reconfigure, restart. A failure carries its step.
  virtual std::optional<Failure> prepare(const ConfigurationPoint& point) = 0;
  /// Steps 4-5: run the point's workload and capture metrics.
  virtual Outcome measure(const ConfigurationPoint& point, std::uint64_t invocation) = 0;
};

/// The closed-form oracle; prepare is a no-op.
class SyntheticBackend final : public BenchmarkBackend {
 public:
  SyntheticBackend(TuningDomain domain, OracleParams params);

  bool requires_exclusive_access() const override { return false; }
  std::optional<Failure> prepare(const ConfigurationPoint&) override { return std::nullopt; }
  Outcome measure(const ConfigurationPoint& point, std::uint64_t invocation) override;

  const OracleParams& params() const noexcept { return params_; }

 private:
  TuningDomain domain_;
  OracleParams params_;
};

/// Shell command templates driving a real cluster. Placeholders are the
/// parameter names in braces ({trickle_fsync}, {key_cache_size_in_mb}, ...,
/// {read_pct}, {write_pct}, {node_count}, {replication_factor}) plus
/// {duration_s} and {metrics_path}.
struct ExternalBackendConfig {
  std::string stop_cmd;
  std::string configure_cmd;
  std::string start_cmd;
  std::string workload_cmd;
  std::filesystem::path metrics_path;
  double timeout_s = 600.0;  // per step
  int duration_s = 60;

  void validate() const;
};

/// Substitutes every placeholder; throws ValidationError on an unknown one.
std::string render_command(const std::string& templ, const TuningDomain& domain, const ConfigurationPoint& point,
                           const ExternalBackendConfig& config);

struct CommandResult {
  int exit_code = 0;
  bool timed_out = false;
};

/// Runs `command` through /bin/sh -c, killing it after `timeout_s`.
CommandResult run_command(const std::string& command, double timeout_s);

/// key=value lines; throughput_ops, read_latency_ms and write_latency_ms
/// are required. Throws ValidationError ("metrics field absent: ...") etc.
Metrics parse_metrics_text(const std::string& text);
Metrics parse_metrics_file(const std::filesystem::path& path);

class ExternalBackend final : public BenchmarkBackend {
 public:
  ExternalBackend(TuningDomain domain, ExternalBackendConfig config);

  bool requires_exclusive_access() const override { return true; }
  std::optional<Failure> prepare(const ConfigurationPoint& point) override;
  Outcome measure(const ConfigurationPoint& point, std::uint64_t invocation) override;

 private:
  std::optional<Failure> run_step(Step step, const std::string& templ, const ConfigurationPoint& point);

  TuningDomain domain_;
  ExternalBackendConfig config_;
};

/// All four commands in order, then the metrics file.
Outcome external_measure(const ExternalBackendConfig& config, const TuningDomain& domain,
                         const ConfigurationPoint& point);

struct PlanCell {
  Workload workload;
  Physical physical;
  std::size_t count = 1;
};

/// Which (workload, physical) cells to measure and how many random knob
/// settings per cell. Knobs are sampled uniformly and independently.
struct SamplingPlan {
  std::vector<PlanCell> cells;
  std::uint64_t seed = 0;

  std::size_t total() const;
  void validate(const TuningDomain& domain) const;
};

/// The three workloads (50:50, 5:95, 95:5) crossed with the eight measured
/// physical designs (n=4 rf 4..1, n=3 rf 3..1, n=2 rf 2); `total` examples
/// spread as evenly as possible, earlier cells taking the remainder.
SamplingPlan default_plan(std::size_t total, std::uint64_t seed);

/// Drops every cell with the given physical design.
SamplingPlan exclude_physical(SamplingPlan plan, const Physical& physical);

/// Knob values of example `index` under `plan_seed` (stream derive_seed(seed, index)).
ConfigurationPoint sample_point(const TuningDomain& domain, const PlanCell& cell, std::uint64_t plan_seed,
                                std::uint64_t index);

struct LogRecord {
  std::size_t index = 0;
  bool ok = true;
  std::optional<Step> failed_step;
  std::string message;
  int attempts = 1;
  double wall_ms = 0.0;

  std::string to_json() const;
};

struct GenerationOptions {
  int retries = 1;  // extra attempts after a failure
  unsigned threads = 1;  // ignored for exclusive backends
};

struct GenerationResult {
  Dataset dataset;
  std::vector<LogRecord> log;
  std::size_t failed() const;
};

/// For each planned example: sample knobs, prepare, measure, append. Failed
/// examples are logged and skipped. Rows follow plan order regardless of
/// thread count.
GenerationResult generate_dataset(BenchmarkBackend& backend, const TuningDomain& domain, const SamplingPlan& plan,
                                  const GenerationOptions& options = {});

void write_log(const std::vector<LogRecord>& log, std::ostream& out);

struct RepeatedMeasurement {
  Metrics mean;
  std::vector<Metrics> trials;
  std::size_t failures = 0;
};

/// `trials` measurements with invocations first_invocation + t; the mean
/// covers successful trials only.
RepeatedMeasurement measure_repeated(BenchmarkBackend& backend, const ConfigurationPoint& point, std::size_t trials,
                                     std::uint64_t first_invocation = 0);

// ---------------------------------------------------------------------------
// TOML configuration

enum class BackendKind { synthetic, external };

struct HarnessConfig {
  int disks = 1;
  int heap_mb = 8192;
  BackendKind backend = BackendKind::synthetic;
  OracleParams oracle;
  std::optional<ExternalBackendConfig> external;
  SamplingPlan plan;
  GenerationOptions generation;
};

HarnessConfig parse_harness_config(const std::string& toml_text);
HarnessConfig load_harness_config(const std::filesystem::path& path);

}  // namespace kvtune
