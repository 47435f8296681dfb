#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kvtune {

enum class ParameterKind { boolean, ordinal };

/// What a parameter describes. Only knobs are searched by the optimizer.
enum class ParameterRole { workload, knob, physical };

/// Column positions in the canonical Cassandra domain. This order is also the
/// CSV column order and the feature-vector column order.
enum Param : std::size_t {
  kWlReadPct = 0,
  kWlWritePct,
  kNodeCount,
  kReplicationFactor,
  kTrickleFsync,
  kKeyCacheSizeMb,
  kRowCacheSizeMb,
  kCommitlogSegmentSizeMb,
  kConcurrentReads,
  kConcurrentWrites,
  kMemtableHeapSpaceMb,
  kParamCount
};

inline constexpr std::array<Param, 7> kKnobParams = {
    kTrickleFsync,     kKeyCacheSizeMb,   kRowCacheSizeMb,     kCommitlogSegmentSizeMb,
    kConcurrentReads,  kConcurrentWrites, kMemtableHeapSpaceMb};

struct ParameterSpec {
  std::string name;
  ParameterKind kind = ParameterKind::ordinal;
  std::vector<int> values;  // ascending; booleans are {0, 1}
  ParameterRole role = ParameterRole::knob;

  bool tunable() const noexcept { return role == ParameterRole::knob; }
  /// Position of `value` in `values`, or nullopt.
  std::optional<std::size_t> index_of(int value) const;
  std::size_t cardinality() const noexcept { return values.size(); }

  bool operator==(const ParameterSpec&) const = default;
};

/// The tuning domain: ordered parameters plus the environment (disks, heap)
/// that scales the concurrent_reads and memtable domains.
class TuningDomain {
 public:
  TuningDomain(std::vector<ParameterSpec> parameters, int disks, int heap_mb);

  const std::vector<ParameterSpec>& parameters() const noexcept { return parameters_; }
  const ParameterSpec& parameter(std::size_t i) const { return parameters_.at(i); }
  std::size_t size() const noexcept { return parameters_.size(); }
  std::optional<std::size_t> find(std::string_view name) const;

  int disks() const noexcept { return disks_; }
  int heap_mb() const noexcept { return heap_mb_; }

  /// Cartesian product size of the tunable knobs.
  std::uint64_t knob_space_size() const;

  bool operator==(const TuningDomain&) const = default;

 private:
  std::vector<ParameterSpec> parameters_;
  int disks_;
  int heap_mb_;
};

/// The 11-feature Cassandra domain. Requires disks >= 1, heap_mb >= 32 and
/// heap_mb divisible by 32. Throws ValidationError otherwise.
TuningDomain build_cassandra_domain(int disks = 1, int heap_mb = 8192);

struct Workload {
  int read_pct = 50;
  int write_pct = 50;
  bool operator==(const Workload&) const = default;
  auto operator<=>(const Workload&) const = default;
};

struct Physical {
  int node_count = 4;
  int replication_factor = 3;
  bool operator==(const Physical&) const = default;
  auto operator<=>(const Physical&) const = default;
};

/// "R:W", e.g. "25:75". Throws ValidationError on malformed input.
Workload parse_workload(std::string_view text);
std::string to_string(const Workload& w);

enum class SubdomainId { td1, td2, td3, td4 };

std::string_view to_string(SubdomainId id);
SubdomainId parse_subdomain_id(std::string_view text);

/// TD1: everything free. TD2: workload fixed. TD3: physical fixed. TD4: both.
struct SubdomainSpec {
  SubdomainId id = SubdomainId::td1;
  std::optional<Workload> workload;
  std::optional<Physical> physical;

  /// Checks that exactly the fields required by `id` are present.
  static SubdomainSpec make(SubdomainId id, std::optional<Workload> workload = std::nullopt,
                            std::optional<Physical> physical = std::nullopt);

  bool fixes_workload() const noexcept { return workload.has_value(); }
  bool fixes_physical() const noexcept { return physical.has_value(); }
  /// Whether parameter `p` is projected out of feature vectors.
  bool projects(std::size_t p) const noexcept;

  bool operator==(const SubdomainSpec&) const = default;
};

/// One raw value per domain parameter, in domain order.
class ConfigurationPoint {
 public:
  ConfigurationPoint() = default;
  explicit ConfigurationPoint(std::vector<int> values) : values_(std::move(values)) {}

  int operator[](std::size_t p) const { return values_.at(p); }
  int& operator[](std::size_t p) { return values_.at(p); }
  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<int>& values() const noexcept { return values_; }

  Workload workload() const { return {values_.at(kWlReadPct), values_.at(kWlWritePct)}; }
  Physical physical() const { return {values_.at(kNodeCount), values_.at(kReplicationFactor)}; }
  void set_workload(const Workload& w);
  void set_physical(const Physical& ph);

  bool operator==(const ConfigurationPoint&) const = default;
  auto operator<=>(const ConfigurationPoint&) const = default;

 private:
  std::vector<int> values_;
};

using FeatureVector = std::vector<double>;

struct Violation {
  std::string parameter;
  std::string message;
};

/// All violated invariants of `point`; empty means valid.
std::vector<Violation> validate(const TuningDomain& domain, const ConfigurationPoint& point);
bool is_valid(const TuningDomain& domain, const ConfigurationPoint& point);
/// Throws ValidationError listing every violation.
void require_valid(const TuningDomain& domain, const ConfigurationPoint& point);

/// Names of the columns that survive projection under `subdomain`.
std::vector<std::string> feature_names(const TuningDomain& domain, const SubdomainSpec& subdomain);
std::size_t feature_count(const SubdomainSpec& subdomain);

/// Workload percentages and n/rf are encoded raw, knobs as the 0-based index
/// of the value in the knob's domain. Subdomain-fixed columns are dropped.
FeatureVector encode(const TuningDomain& domain, const SubdomainSpec& subdomain,
                     const ConfigurationPoint& point);
/// Inverse of encode; projected columns are filled from the subdomain's
/// fixed values, which must therefore be present.
ConfigurationPoint decode(const TuningDomain& domain, const SubdomainSpec& subdomain,
                          const FeatureVector& vector);

/// Stock Cassandra defaults mapped onto the domain grid, for the given
/// workload and physical design.
ConfigurationPoint default_configuration(const TuningDomain& domain, const Workload& workload,
                                         const Physical& physical);

/// Every (n, rf) pair admitted by the domain, n ascending then rf ascending.
std::vector<Physical> valid_physical_combinations(const TuningDomain& domain);

/// Human-readable table of parameters and their legal values.
std::string describe(const TuningDomain& domain);

}  // namespace kvtune
