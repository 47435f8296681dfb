#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "kvtune/domain.hpp"
#include "kvtune/perf.hpp"

namespace kvtune {

/// A black-box function of a configuration point. Throughput objectives are
/// maximized, latency objectives minimized.
struct Objective {
  TargetMetric metric = TargetMetric::throughput;
  std::function<double(const ConfigurationPoint&)> evaluate;

  Direction direction() const noexcept { return direction_of(metric); }
};

/// Fixed workload and physical design; only the seven knobs move.
struct SearchContext {
  TuningDomain domain;
  Workload workload;
  Physical physical;

  void validate() const;
};

struct AnnealingSchedule {
  double initial_temperature = 0.0;  // objective units
  double cooling = 0.95;             // T <- cooling * T every moves_per_level moves
  std::size_t moves_per_level = 50;
  std::size_t budget = 5000;  // objective evaluations, including the start
  std::uint64_t seed = 0;

  void validate() const;
};

struct TraceEntry {
  std::size_t step = 0;
  double temperature = 0.0;
  double value = 0.0;  // candidate objective value
  bool accepted = false;
  double best = 0.0;  // best objective value so far
};

struct TuningResult {
  ConfigurationPoint best;
  double value = 0.0;  // objective(best), in objective units
  std::size_t evaluations = 0;
  std::vector<TraceEntry> trace;
};

/// First-improvement local search over single-knob +-1 ordinal moves
/// (boundary moves reflect). Stops when the budget is spent or all 14 moves
/// from the current point fail to improve. The start is drawn from
/// SplitMix64(derive_seed(seed, 0)) unless given; moves come from
/// derive_seed(seed, 1).
TuningResult hill_climb(const Objective& objective, const SearchContext& context,
                        const std::optional<ConfigurationPoint>& start, std::size_t budget, std::uint64_t seed);

/// Simulated annealing with the same start and move streams as hill_climb.
/// Accepts a move with delta <= 0 (delta < 0 when T == 0), otherwise with
/// probability exp(-delta / T), drawing from derive_seed(seed, 2). Returns
/// the best point seen, not the final one.
TuningResult simulated_annealing(const Objective& objective, const SearchContext& context,
                                 const AnnealingSchedule& schedule,
                                 const std::optional<ConfigurationPoint>& start = std::nullopt);

/// Independent runs seeded derive_seed(schedule.seed, r); the best value wins,
/// earlier restarts win ties.
TuningResult simulated_annealing_restarts(const Objective& objective, const SearchContext& context,
                                          const AnnealingSchedule& schedule, std::size_t restarts);

/// Evaluates every knob assignment in lexicographic order of the encoded
/// knob vector, keeping the first optimum. Throws ValidationError when the
/// space exceeds `cap`.
TuningResult exhaustive_search(const Objective& objective, const SearchContext& context,
                               std::uint64_t cap = 1'000'000);

/// T0 such that the median uphill move among `samples` random neighbor pairs
/// is initially accepted with probability 0.8. Zero if no move is uphill.
double calibrate_t0(const Objective& objective, const SearchContext& context, std::size_t samples,
                    std::uint64_t seed);

/// Schedule defaults (cooling 0.95, 50 moves per level, budget 5000) with
/// T0 from calibrate_t0 over 100 samples.
AnnealingSchedule default_schedule(const Objective& objective, const SearchContext& context, std::uint64_t seed,
                                   std::size_t budget = 5000);

/// CSV: step,temperature,candidate_value,accepted,best_so_far
void write_trace_csv(const TuningResult& result, std::ostream& out);

}  // namespace kvtune
