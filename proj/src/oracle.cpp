#include "kvtune/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kvtune/errors.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

void OracleParams::validate() const {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ValidationError("noise_sigma must be >= 0");
  if (client_concurrency < 1) throw ValidationError("client_concurrency must be >= 1");
}

namespace {

// Normalized knob position index / (|domain| - 1).
double position(const TuningDomain& domain, const ConfigurationPoint& point, Param p) {
  const auto& spec = domain.parameter(p);
  return static_cast<double>(*spec.index_of(point[p])) / static_cast<double>(spec.cardinality() - 1);
}

struct Latencies {
  double read;
  double write;
};

Latencies latencies(const TuningDomain& domain, const ConfigurationPoint& point) {
  const double n = point[kNodeCount];
  const double rf = point[kReplicationFactor];
  const double k = position(domain, point, kKeyCacheSizeMb);
  const double r = position(domain, point, kRowCacheSizeMb);
  const double c = position(domain, point, kCommitlogSegmentSizeMb);
  const double qr = position(domain, point, kConcurrentReads);
  const double qw = position(domain, point, kConcurrentWrites);
  const double m = position(domain, point, kMemtableHeapSpaceMb);
  const double t = point[kTrickleFsync];
  const double memory_pressure = std::max(0.0, r + m - 1.0);

  const double read = 4.0 * std::sqrt(4.0 / n) * (1.0 + 0.5 * (rf - 1.0) / (n - 1.0)) * (1.8 - 0.5 * k - 0.3 * r) *
                      (1.0 + 0.6 * (qr - 0.5) * (qr - 0.5)) * (1.0 + 0.5 * memory_pressure);
  const double write = 2.5 * (1.0 + 0.35 * (rf - 1.0)) * (1.5 - 0.4 * m - 0.1 * c) *
                       (1.0 + 0.8 * (qw - 0.625) * (qw - 0.625)) * (1.0 + 0.1 * t) * (1.0 + 0.4 * memory_pressure);
  return {read, write};
}

double throughput(const ConfigurationPoint& point, double read, double write, int concurrency) {
  const double p = point[kWlReadPct] / 100.0;
  return concurrency * point[kNodeCount] * 1000.0 / (p * read + (1.0 - p) * write);
}

}  // namespace

Metrics noiseless_metrics(const TuningDomain& domain, const ConfigurationPoint& point, int client_concurrency) {
  require_valid(domain, point);
  const auto lat = latencies(domain, point);
  return {throughput(point, lat.read, lat.write, client_concurrency), lat.read, lat.write};
}

Metrics oracle_metrics(const TuningDomain& domain, const ConfigurationPoint& point, const OracleParams& params,
                       std::uint64_t invocation) {
  params.validate();
  require_valid(domain, point);
  auto lat = latencies(domain, point);
  if (params.noise_sigma > 0.0) {
    SplitMix64 rng(derive_seed(params.seed, invocation));
    const double bound = 3.0 * params.noise_sigma;
    const double e1 = std::clamp(params.noise_sigma * rng.normal(), -bound, bound);
    const double e2 = std::clamp(params.noise_sigma * rng.normal(), -bound, bound);
    lat.read *= 1.0 + e1;
    lat.write *= 1.0 + e2;
  }
  return {throughput(point, lat.read, lat.write, params.client_concurrency), lat.read, lat.write};
}

namespace {

ConfigurationPoint random_point(const TuningDomain& domain, SplitMix64& rng) {
  std::vector<int> values(domain.size());
  for (Param p : kKnobParams) {
    const auto& v = domain.parameter(p).values;
    values[p] = v[rng.below(v.size())];
  }
  const auto combos = valid_physical_combinations(domain);
  const auto ph = combos[rng.below(combos.size())];
  values[kNodeCount] = ph.node_count;
  values[kReplicationFactor] = ph.replication_factor;
  values[kWlReadPct] = static_cast<int>(rng.below(101));
  values[kWlWritePct] = 100 - values[kWlReadPct];
  return ConfigurationPoint(std::move(values));
}

std::string show(const ConfigurationPoint& p) {
  std::ostringstream os;
  for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
  return os.str();
}

}  // namespace

TrendReport trend_check(const TuningDomain& domain, const OracleParams& params, std::size_t samples) {
  params.validate();
  TrendReport report;
  SplitMix64 rng(params.seed);
  const int C = params.client_concurrency;
  auto fail = [&](const std::string& what, const ConfigurationPoint& p) {
    report.ok = false;
    report.failures.push_back(what + " at " + show(p));
  };
  for (std::size_t s = 0; s < samples; ++s) {
    auto point = random_point(domain, rng);
    ++report.points_checked;
    const int n = point[kNodeCount];

    // rf up at fixed n: both latencies strictly up.
    Metrics prev{};
    for (int rf = 1; rf <= n; ++rf) {
      point[kReplicationFactor] = rf;
      const auto m = noiseless_metrics(domain, point, C);
      if (rf > 1 && !(m.write_latency_ms > prev.write_latency_ms)) fail("write latency not increasing in rf", point);
      if (rf > 1 && !(m.read_latency_ms > prev.read_latency_ms)) fail("read latency not increasing in rf", point);
      prev = m;
    }

    // n up at fixed rf (rf <= smallest n considered): read latency down, throughput up.
    for (int rf = 1; rf <= 2; ++rf) {
      point[kReplicationFactor] = rf;
      Metrics before{};
      for (int nodes = 2; nodes <= 4; ++nodes) {
        point[kNodeCount] = nodes;
        const auto m = noiseless_metrics(domain, point, C);
        if (nodes > 2 && !(m.read_latency_ms < before.read_latency_ms)) fail("read latency not decreasing in n", point);
        if (nodes > 2 && !(m.throughput_ops > before.throughput_ops)) fail("throughput not increasing in n", point);
        before = m;
      }
    }
    point[kNodeCount] = n;
    point[kReplicationFactor] = std::min(point[kReplicationFactor], n);

    // Client identity, noisy metrics included.
    const auto noisy = oracle_metrics(domain, point, params, s);
    const double p = point[kWlReadPct] / 100.0;
    const double lhs = noisy.throughput_ops * (p * noisy.read_latency_ms + (1.0 - p) * noisy.write_latency_ms);
    const double rhs = static_cast<double>(C) * n * 1000.0;
    if (std::abs(lhs - rhs) > 1e-12 * rhs) fail("throughput identity violated", point);
  }
  return report;
}

}  // namespace kvtune
