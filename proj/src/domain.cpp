#include "kvtune/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "kvtune/errors.hpp"

namespace kvtune {

namespace {

ParameterSpec make_param(std::string name, ParameterKind kind, std::vector<int> values,
                         ParameterRole role) {
  return ParameterSpec{std::move(name), kind, std::move(values), role};
}

std::vector<int> range_values(int lo, int hi, int step) {
  std::vector<int> out;
  for (int v = lo; v <= hi; v += step) out.push_back(v);
  return out;
}

// Knobs are encoded by index, context columns by raw value.
bool encodes_raw(const ParameterSpec& spec) { return spec.role != ParameterRole::knob; }

}  // namespace

std::optional<std::size_t> ParameterSpec::index_of(int value) const {
  const auto it = std::lower_bound(values.begin(), values.end(), value);
  if (it == values.end() || *it != value) return std::nullopt;
  return static_cast<std::size_t>(it - values.begin());
}

TuningDomain::TuningDomain(std::vector<ParameterSpec> parameters, int disks, int heap_mb)
    : parameters_(std::move(parameters)), disks_(disks), heap_mb_(heap_mb) {
  std::set<std::string> names;
  for (const auto& p : parameters_) {
    if (!names.insert(p.name).second) throw ValidationError("duplicate parameter name: " + p.name);
    if (p.values.empty()) throw ValidationError("parameter " + p.name + " has an empty domain");
    if (p.kind == ParameterKind::boolean) {
      if (p.values != std::vector<int>{0, 1})
        throw ValidationError("boolean parameter " + p.name + " must have domain {false,true}");
    } else if (std::adjacent_find(p.values.begin(), p.values.end(), std::greater_equal<>{}) !=
               p.values.end()) {
      throw ValidationError("ordinal parameter " + p.name + " must be strictly ascending");
    }
  }
}

std::optional<std::size_t> TuningDomain::find(std::string_view name) const {
  for (std::size_t i = 0; i < parameters_.size(); ++i)
    if (parameters_[i].name == name) return i;
  return std::nullopt;
}

std::uint64_t TuningDomain::knob_space_size() const {
  std::uint64_t size = 1;
  for (const auto& p : parameters_)
    if (p.tunable()) size *= p.values.size();
  return size;
}

TuningDomain build_cassandra_domain(int disks, int heap_mb) {
  if (disks < 1) throw ValidationError("disks must be >= 1");
  if (heap_mb < 32 || heap_mb % 32 != 0)
    throw ValidationError("heap_mb must be >= 32 and divisible by 32");

  using K = ParameterKind;
  using R = ParameterRole;
  std::vector<ParameterSpec> ps;
  ps.reserve(kParamCount);
  ps.push_back(make_param("wl_read_pct", K::ordinal, range_values(0, 100, 1), R::workload));
  ps.push_back(make_param("wl_write_pct", K::ordinal, range_values(0, 100, 1), R::workload));
  ps.push_back(make_param("node_count", K::ordinal, {2, 3, 4}, R::physical));
  ps.push_back(make_param("replication_factor", K::ordinal, {1, 2, 3, 4}, R::physical));
  ps.push_back(make_param("trickle_fsync", K::boolean, {0, 1}, R::knob));
  ps.push_back(make_param("key_cache_size_in_mb", K::ordinal, {0, 1, 2, 4, 8, 16, 32}, R::knob));
  ps.push_back(make_param("row_cache_size_in_mb", K::ordinal, range_values(0, 200, 20), R::knob));
  ps.push_back(make_param("commitlog_segment_size_in_mb", K::ordinal, {4, 8, 16, 32, 64}, R::knob));
  std::vector<int> reads;
  for (int e = 1; e <= 5; ++e) reads.push_back((1 << e) * disks);
  ps.push_back(make_param("concurrent_reads", K::ordinal, std::move(reads), R::knob));
  ps.push_back(make_param("concurrent_writes", K::ordinal, {2, 4, 8, 16, 32, 64, 128, 256}, R::knob));
  std::vector<int> memtable;
  for (int e = 5; e >= 1; --e) memtable.push_back(heap_mb >> e);
  ps.push_back(make_param("memtable_heap_space_in_mb", K::ordinal, std::move(memtable), R::knob));
  return TuningDomain(std::move(ps), disks, heap_mb);
}

Workload parse_workload(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ValidationError("workload must be R:W, got '" + std::string(text) + "'");
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw ValidationError("workload must be R:W, got '" + std::string(text) + "'");
    return v;
  };
  Workload w{parse_int(text.substr(0, colon)), parse_int(text.substr(colon + 1))};
  if (w.read_pct < 0 || w.write_pct < 0 || w.read_pct + w.write_pct != 100)
    throw ValidationError("workload percentages must be non-negative and sum to 100");
  return w;
}

std::string to_string(const Workload& w) {
  return std::to_string(w.read_pct) + ":" + std::to_string(w.write_pct);
}

std::string_view to_string(SubdomainId id) {
  switch (id) {
    case SubdomainId::td1: return "td1";
    case SubdomainId::td2: return "td2";
    case SubdomainId::td3: return "td3";
    case SubdomainId::td4: return "td4";
  }
  return "td1";
}

SubdomainId parse_subdomain_id(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "td1") return SubdomainId::td1;
  if (lower == "td2") return SubdomainId::td2;
  if (lower == "td3") return SubdomainId::td3;
  if (lower == "td4") return SubdomainId::td4;
  throw ValidationError("unknown subdomain '" + std::string(text) + "' (expected td1..td4)");
}

SubdomainSpec SubdomainSpec::make(SubdomainId id, std::optional<Workload> workload,
                                  std::optional<Physical> physical) {
  const bool needs_workload = id == SubdomainId::td2 || id == SubdomainId::td4;
  const bool needs_physical = id == SubdomainId::td3 || id == SubdomainId::td4;
  if (needs_workload != workload.has_value())
    throw ValidationError(std::string(to_string(id)) +
                          (needs_workload ? " requires a fixed workload" : " does not fix the workload"));
  if (needs_physical != physical.has_value())
    throw ValidationError(std::string(to_string(id)) +
                          (needs_physical ? " requires a fixed node_count/replication_factor"
                                          : " does not fix the physical design"));
  if (workload && (workload->read_pct < 0 || workload->write_pct < 0 ||
                   workload->read_pct + workload->write_pct != 100))
    throw ValidationError("fixed workload must sum to 100");
  if (physical && physical->replication_factor > physical->node_count)
    throw ValidationError("fixed physical design violates replication_factor <= node_count");
  return SubdomainSpec{id, workload, physical};
}

bool SubdomainSpec::projects(std::size_t p) const noexcept {
  if (workload && (p == kWlReadPct || p == kWlWritePct)) return true;
  if (physical && (p == kNodeCount || p == kReplicationFactor)) return true;
  return false;
}

void ConfigurationPoint::set_workload(const Workload& w) {
  values_.at(kWlReadPct) = w.read_pct;
  values_.at(kWlWritePct) = w.write_pct;
}

void ConfigurationPoint::set_physical(const Physical& ph) {
  values_.at(kNodeCount) = ph.node_count;
  values_.at(kReplicationFactor) = ph.replication_factor;
}

std::vector<Violation> validate(const TuningDomain& domain, const ConfigurationPoint& point) {
  std::vector<Violation> out;
  if (point.size() != domain.size()) {
    out.push_back({"*", "expected " + std::to_string(domain.size()) + " values, got " +
                            std::to_string(point.size())});
    return out;
  }
  for (std::size_t i = 0; i < domain.size(); ++i) {
    const auto& spec = domain.parameter(i);
    if (!spec.index_of(point[i]))
      out.push_back({spec.name, "value not in domain: " + std::to_string(point[i])});
  }
  if (point[kWlReadPct] + point[kWlWritePct] != 100)
    out.push_back({"wl_read_pct", "wl_read_pct + wl_write_pct = 100"});
  if (point[kReplicationFactor] > point[kNodeCount])
    out.push_back({"replication_factor", "replication_factor <= node_count"});
  return out;
}

bool is_valid(const TuningDomain& domain, const ConfigurationPoint& point) {
  return validate(domain, point).empty();
}

void require_valid(const TuningDomain& domain, const ConfigurationPoint& point) {
  const auto violations = validate(domain, point);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& v : violations) msg += " [" + v.parameter + ": " + v.message + "]";
  throw ValidationError(msg);
}

std::vector<std::string> feature_names(const TuningDomain& domain, const SubdomainSpec& subdomain) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < domain.size(); ++i)
    if (!subdomain.projects(i)) names.push_back(domain.parameter(i).name);
  return names;
}

std::size_t feature_count(const SubdomainSpec& subdomain) {
  return kParamCount - (subdomain.fixes_workload() ? 2 : 0) - (subdomain.fixes_physical() ? 2 : 0);
}

FeatureVector encode(const TuningDomain& domain, const SubdomainSpec& subdomain,
                     const ConfigurationPoint& point) {
  require_valid(domain, point);
  if (subdomain.workload && point.workload() != *subdomain.workload)
    throw ValidationError("point workload " + to_string(point.workload()) +
                          " does not match subdomain workload " + to_string(*subdomain.workload));
  if (subdomain.physical && point.physical() != *subdomain.physical)
    throw ValidationError("point physical design does not match subdomain");
  FeatureVector out;
  out.reserve(domain.size());
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (subdomain.projects(i)) continue;
    const auto& spec = domain.parameter(i);
    out.push_back(encodes_raw(spec) ? static_cast<double>(point[i])
                                    : static_cast<double>(*spec.index_of(point[i])));
  }
  return out;
}

ConfigurationPoint decode(const TuningDomain& domain, const SubdomainSpec& subdomain,
                          const FeatureVector& vector) {
  if (vector.size() != feature_count(subdomain))
    throw ValidationError("feature vector has " + std::to_string(vector.size()) + " columns, expected " +
                          std::to_string(feature_count(subdomain)));
  std::vector<int> values(domain.size(), 0);
  std::size_t col = 0;
  for (std::size_t i = 0; i < domain.size(); ++i) {
    if (subdomain.projects(i)) continue;
    const auto& spec = domain.parameter(i);
    const double x = vector[col++];
    if (!std::isfinite(x) || x != std::floor(x))
      throw ValidationError("component for " + spec.name + " is not an integer");
    if (encodes_raw(spec)) {
      values[i] = static_cast<int>(x);
    } else {
      if (x < 0 || x >= static_cast<double>(spec.values.size()))
        throw ValidationError("index " + std::to_string(static_cast<long long>(x)) + " out of range for " +
                              spec.name);
      values[i] = spec.values[static_cast<std::size_t>(x)];
    }
  }
  ConfigurationPoint point(std::move(values));
  if (subdomain.workload) point.set_workload(*subdomain.workload);
  if (subdomain.physical) point.set_physical(*subdomain.physical);
  require_valid(domain, point);
  return point;
}

ConfigurationPoint default_configuration(const TuningDomain& domain, const Workload& workload,
                                         const Physical& physical) {
  std::vector<int> values(domain.size(), 0);
  ConfigurationPoint point(std::move(values));
  point.set_workload(workload);
  point.set_physical(physical);
  point[kTrickleFsync] = 0;
  point[kKeyCacheSizeMb] = 32;  // stock 100 MB clamped to the domain maximum
  point[kRowCacheSizeMb] = 0;
  point[kCommitlogSegmentSizeMb] = 32;
  point[kConcurrentReads] = 32 * domain.disks();
  point[kConcurrentWrites] = 32;
  point[kMemtableHeapSpaceMb] = domain.heap_mb() / 4;
  require_valid(domain, point);
  return point;
}

std::vector<Physical> valid_physical_combinations(const TuningDomain& domain) {
  std::vector<Physical> out;
  for (int n : domain.parameter(kNodeCount).values)
    for (int rf : domain.parameter(kReplicationFactor).values)
      if (rf <= n) out.push_back({n, rf});
  return out;
}

std::string describe(const TuningDomain& domain) {
  std::ostringstream os;
  std::size_t width = 0;
  for (const auto& p : domain.parameters()) width = std::max(width, p.name.size());
  os << "disks=" << domain.disks() << " heap_mb=" << domain.heap_mb() << "\n";
  for (const auto& p : domain.parameters()) {
    os << p.name << std::string(width - p.name.size() + 2, ' ');
    switch (p.role) {
      case ParameterRole::workload: os << "workload  "; break;
      case ParameterRole::knob: os << "knob      "; break;
      case ParameterRole::physical: os << "physical  "; break;
    }
    if (p.kind == ParameterKind::boolean) {
      os << "{false, true}";
    } else if (p.values.size() > 12) {
      os << "{" << p.values.front() << ".." << p.values.back() << "}";
    } else {
      os << "{";
      for (std::size_t i = 0; i < p.values.size(); ++i) os << (i ? ", " : "") << p.values[i];
      os << "}";
    }
    os << "\n";
  }
  os << "knob space size: " << domain.knob_space_size() << "\n";
  return os.str();
}

}  // namespace kvtune
