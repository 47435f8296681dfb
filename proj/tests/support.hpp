#pragma once

#include <cstdint>
#include <vector>

#include "kvtune/dataset.hpp"
#include "kvtune/domain.hpp"
#include "kvtune/harness.hpp"
#include "kvtune/oracle.hpp"
#include "kvtune/random.hpp"

namespace kvtune::fixtures {

inline ConfigurationPoint random_valid_point(const TuningDomain& domain, SplitMix64& rng) {
  std::vector<int> v(domain.size());
  for (Param k : kKnobParams) {
    const auto& vals = domain.parameter(k).values;
    v[k] = vals[rng.below(vals.size())];
  }
  const auto combos = valid_physical_combinations(domain);
  const auto ph = combos[rng.below(combos.size())];
  v[kNodeCount] = ph.node_count;
  v[kReplicationFactor] = ph.replication_factor;
  v[kWlReadPct] = static_cast<int>(rng.below(101));
  v[kWlWritePct] = 100 - v[kWlReadPct];
  return ConfigurationPoint(std::move(v));
}

// Synthetic dataset over the standard plan.
inline Dataset oracle_dataset(std::size_t n, std::uint64_t seed, double sigma = 0.0) {
  const auto domain = build_cassandra_domain();
  OracleParams op;
  op.noise_sigma = sigma;
  op.seed = derive_seed(seed, 99);
  SyntheticBackend backend(domain, op);
  return generate_dataset(backend, domain, default_plan(n, seed)).dataset;
}

inline ConfigurationPoint knobs_at(const TuningDomain& domain, const Workload& w, const Physical& ph,
                                   const std::vector<std::size_t>& idx) {
  ConfigurationPoint p = default_configuration(domain, w, ph);
  for (std::size_t i = 0; i < kKnobParams.size(); ++i) p[kKnobParams[i]] = domain.parameter(kKnobParams[i]).values[idx[i]];
  return p;
}

}  // namespace kvtune::fixtures
