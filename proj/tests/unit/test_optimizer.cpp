#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "kvtune/errors.hpp"
#include "kvtune/optimizer.hpp"
#include "kvtune/oracle.hpp"
#include "support.hpp"

using namespace kvtune;

namespace {

const TuningDomain kDomain = build_cassandra_domain();

SearchContext context(const TuningDomain& d = kDomain) { return {d, {50, 50}, {4, 3}}; }

std::size_t knob_index(const TuningDomain& d, const ConfigurationPoint& p, Param k) {
  return *d.parameter(k).index_of(p[k]);
}

double index_sum(const TuningDomain& d, const ConfigurationPoint& p) {
  double s = 0;
  for (Param k : kKnobParams) s += static_cast<double>(knob_index(d, p, k));
  return s;
}

Objective oracle_objective(TargetMetric m) {
  return {m, [m](const ConfigurationPoint& p) { return select(noiseless_metrics(kDomain, p), m); }};
}

// Every knob pinned to its stock default; trickle_fsync optionally free.
TuningDomain narrow_domain(bool two_values) {
  auto params = kDomain.parameters();
  const auto def = default_configuration(kDomain, {50, 50}, {4, 3});
  for (Param k : kKnobParams) {
    if (k == kTrickleFsync) {
      if (!two_values) {
        params[k].kind = ParameterKind::ordinal;
        params[k].values = {0};
      }
      continue;
    }
    params[k].values = {def[k]};
  }
  return TuningDomain(params, kDomain.disks(), kDomain.heap_mb());
}

AnnealingSchedule schedule(std::uint64_t seed, std::size_t budget = 2000, double t0 = 1.0) {
  AnnealingSchedule s;
  s.seed = seed;
  s.budget = budget;
  s.initial_temperature = t0;
  return s;
}

}  // namespace

TEST(Optimizer, ConstantObjective) {
  const Objective o{TargetMetric::read_latency, [](const ConfigurationPoint&) { return 3.0; }};
  const auto sa = simulated_annealing(o, context(), schedule(1, 300));
  EXPECT_EQ(sa.value, 3.0);
  EXPECT_EQ(sa.evaluations, 300u);
  const auto hc = hill_climb(o, context(), std::nullopt, 1000, 1);
  EXPECT_EQ(hc.value, 3.0);
  // All 14 moves fail quickly, so the climb stops well before the budget.
  EXPECT_LT(hc.evaluations, 1000u);
  EXPECT_EQ(calibrate_t0(o, context(), 100, 0), 0.0);
}

TEST(Optimizer, SingleMonotoneKnob) {
  const Objective o{TargetMetric::throughput,
                    [](const ConfigurationPoint& p) { return static_cast<double>(p[kRowCacheSizeMb]); }};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_EQ(hill_climb(o, context(), std::nullopt, 5000, seed).value, 200.0);
    EXPECT_EQ(simulated_annealing(o, context(), schedule(seed, 3000, 5.0)).value, 200.0);
  }
  EXPECT_EQ(exhaustive_search(o, context()).best[kRowCacheSizeMb], 200);
}

TEST(Optimizer, ExhaustiveVisitsWholeSpace) {
  std::size_t calls = 0;
  const Objective o{TargetMetric::read_latency, [&](const ConfigurationPoint& p) {
                      ++calls;
                      return index_sum(kDomain, p);
                    }};
  const auto r = exhaustive_search(o, context());
  EXPECT_EQ(r.evaluations, 154000u);
  EXPECT_EQ(calls, 154000u);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_THROW(exhaustive_search(o, context(), 1000), ValidationError);
}

TEST(Optimizer, ExhaustiveKeepsFirstOptimum) {
  // Flat objective: the first point in odometer order is all-zero indices.
  const Objective o{TargetMetric::throughput, [](const ConfigurationPoint&) { return 1.0; }};
  const auto r = exhaustive_search(o, context());
  EXPECT_EQ(index_sum(kDomain, r.best), 0.0);
}

TEST(Optimizer, HillClimbNeverBeatsExhaustive) {
  for (auto m : {TargetMetric::read_latency, TargetMetric::write_latency, TargetMetric::throughput}) {
    const auto o = oracle_objective(m);
    const auto ex = exhaustive_search(o, context());
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto hc = hill_climb(o, context(), std::nullopt, 5000, seed);
      const auto sa = simulated_annealing(o, context(), default_schedule(o, context(), seed, 3000));
      if (m == TargetMetric::throughput) {
        EXPECT_LE(hc.value, ex.value);
        EXPECT_LE(sa.value, ex.value);
      } else {
        EXPECT_GE(hc.value, ex.value);
        EXPECT_GE(sa.value, ex.value);
      }
    }
  }
}

TEST(Optimizer, ZeroTemperatureAnnealingIsHillClimbing) {
  // With T = 0 only strict improvements are accepted, so the accepted path
  // matches a first-improvement climb driven by the same move stream.
  const auto o = oracle_objective(TargetMetric::read_latency);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const std::size_t budget = 400;
    const auto sa = simulated_annealing(o, context(), schedule(seed, budget, 0.0));
    const auto hc = hill_climb(o, context(), std::nullopt, budget, seed);
    const std::size_t n = std::min(sa.trace.size(), hc.trace.size());
    for (std::size_t i = 0; i < n; ++i) {
      ASSERT_EQ(sa.trace[i].value, hc.trace[i].value) << i;
      ASSERT_EQ(sa.trace[i].accepted, hc.trace[i].accepted) << i;
    }
    EXPECT_EQ(sa.value, hc.value);
  }
}

TEST(Optimizer, TwoValueDomainFindsBetterValue) {
  const auto d = narrow_domain(true);
  EXPECT_EQ(d.knob_space_size(), 2u);
  const Objective o{TargetMetric::write_latency,
                    [](const ConfigurationPoint& p) { return p[kTrickleFsync] ? 1.0 : 2.0; }};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = simulated_annealing(o, context(d), schedule(seed, 50, 0.5));
    EXPECT_EQ(r.best[kTrickleFsync], 1);
    EXPECT_EQ(r.value, 1.0);
  }
}

TEST(Optimizer, SingletonDomain) {
  const auto d = narrow_domain(false);
  EXPECT_EQ(d.knob_space_size(), 1u);
  const Objective o{TargetMetric::throughput, [](const ConfigurationPoint&) { return 7.0; }};
  const auto def = default_configuration(d, {50, 50}, {4, 3});
  EXPECT_EQ(simulated_annealing(o, context(d), schedule(0, 20)).best, def);
  EXPECT_EQ(hill_climb(o, context(d), std::nullopt, 20, 0).best, def);
  EXPECT_EQ(exhaustive_search(o, context(d)).evaluations, 1u);
}

TEST(Optimizer, CalibrationOracles) {
  const Objective unit{TargetMetric::read_latency, [](const ConfigurationPoint& p) { return index_sum(kDomain, p); }};
  EXPECT_NEAR(calibrate_t0(unit, context(), 100, 5), 1.0 / std::log(1.25), 1e-12);
  EXPECT_NEAR(1.0 / std::log(1.25), 4.4814, 1e-4);
  EXPECT_GT(default_schedule(oracle_objective(TargetMetric::throughput), context(), 0).initial_temperature, 0.0);
}

TEST(Optimizer, ReportedValueMatchesReevaluation) {
  for (auto m : {TargetMetric::read_latency, TargetMetric::throughput}) {
    const auto o = oracle_objective(m);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto sa = simulated_annealing(o, context(), default_schedule(o, context(), seed, 1000));
      EXPECT_EQ(sa.value, o.evaluate(sa.best));
      EXPECT_TRUE(is_valid(kDomain, sa.best));
      EXPECT_EQ(sa.best.workload(), (Workload{50, 50}));
      EXPECT_EQ(sa.best.physical(), (Physical{4, 3}));
      const auto hc = hill_climb(o, context(), std::nullopt, 1000, seed);
      EXPECT_EQ(hc.value, o.evaluate(hc.best));
      EXPECT_TRUE(is_valid(kDomain, hc.best));
    }
  }
}

TEST(Optimizer, TraceBestIsMonotone) {
  const auto o = oracle_objective(TargetMetric::throughput);
  const auto sa = simulated_annealing(o, context(), default_schedule(o, context(), 3, 1500));
  ASSERT_EQ(sa.trace.size(), 1500u);
  for (std::size_t i = 1; i < sa.trace.size(); ++i) {
    EXPECT_GE(sa.trace[i].best, sa.trace[i - 1].best);
    EXPECT_LE(sa.trace[i].temperature, sa.trace[i - 1].temperature);
  }
  EXPECT_EQ(sa.trace.back().best, sa.value);

  std::ostringstream csv;
  write_trace_csv(sa, csv);
  EXPECT_EQ(csv.str().rfind("step,temperature,candidate_value,accepted,best_so_far\n", 0), 0u);
  const auto text = csv.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1501);
}

TEST(Optimizer, BitReproducible) {
  const auto o = oracle_objective(TargetMetric::write_latency);
  const auto s = default_schedule(o, context(), 21, 800);
  const auto a = simulated_annealing(o, context(), s);
  const auto b = simulated_annealing(o, context(), s);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.value, b.value);
  std::ostringstream ta, tb;
  write_trace_csv(a, ta);
  write_trace_csv(b, tb);
  EXPECT_EQ(ta.str(), tb.str());
}

TEST(Optimizer, ExplicitStartIsUsed) {
  const auto o = oracle_objective(TargetMetric::read_latency);
  const auto start = default_configuration(kDomain, {50, 50}, {4, 3});
  const auto r = hill_climb(o, context(), start, 1, 0);
  EXPECT_EQ(r.best, start);
  EXPECT_EQ(r.evaluations, 1u);
  auto wrong = start;
  wrong.set_physical({3, 3});
  EXPECT_THROW(hill_climb(o, context(), wrong, 10, 0), ValidationError);
}

TEST(Optimizer, RejectsBadSchedules) {
  const auto o = oracle_objective(TargetMetric::read_latency);
  auto s = schedule(0);
  s.cooling = 1.0;
  EXPECT_THROW(simulated_annealing(o, context(), s), ValidationError);
  s = schedule(0, 0);
  EXPECT_THROW(simulated_annealing(o, context(), s), ValidationError);
  s = schedule(0, 10, -1.0);
  EXPECT_THROW(simulated_annealing(o, context(), s), ValidationError);
  const SearchContext bad{kDomain, {50, 50}, {2, 3}};
  EXPECT_THROW(simulated_annealing(o, bad, schedule(0)), ValidationError);
}
