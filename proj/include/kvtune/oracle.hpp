#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kvtune/domain.hpp"
#include "kvtune/perf.hpp"

namespace kvtune {

/// Closed-form stand-in for a real cluster: latencies from knob positions
/// and physical design, throughput from a closed-loop client model
/// X = C * n * 1000 / (p * L_r + (1 - p) * L_w).
struct OracleParams {
  double noise_sigma = 0.02;  // relative latency noise, clamped to +-3 sigma
  std::uint64_t seed = 0;
  int client_concurrency = 64;  // per node

  void validate() const;
};

/// Noiseless latency model; throughput follows from the client identity.
Metrics noiseless_metrics(const TuningDomain& domain, const ConfigurationPoint& point, int client_concurrency = 64);

/// Noisy metrics. The noise stream is SplitMix64(derive_seed(params.seed,
/// invocation)), so identical (point, seed, invocation) give identical
/// results and calls may run concurrently.
Metrics oracle_metrics(const TuningDomain& domain, const ConfigurationPoint& point, const OracleParams& params,
                       std::uint64_t invocation);

struct TrendReport {
  bool ok = true;
  std::size_t points_checked = 0;
  std::vector<std::string> failures;
};

/// Checks the monotone trends (rf up => both latencies up; n up => read
/// latency down and throughput up) and the throughput identity on
/// `samples` random points. Uses params.noise_sigma for the identity check
/// and the noiseless model for the trends.
TrendReport trend_check(const TuningDomain& domain, const OracleParams& params, std::size_t samples = 500);

}  // namespace kvtune
