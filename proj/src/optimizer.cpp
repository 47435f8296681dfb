#include "kvtune/optimizer.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "kvtune/dataset.hpp"
#include "kvtune/errors.hpp"
#include "kvtune/quality.hpp"
#include "kvtune/random.hpp"

namespace kvtune {

void SearchContext::validate() const {
  ConfigurationPoint probe = default_configuration(domain, workload, physical);
  require_valid(domain, probe);
}

void AnnealingSchedule::validate() const {
  if (budget < 1) throw ValidationError("annealing budget must be >= 1");
  if (!(cooling > 0.0 && cooling < 1.0)) throw ValidationError("cooling factor must lie in (0, 1)");
  if (moves_per_level < 1) throw ValidationError("moves per temperature level must be >= 1");
  if (!(initial_temperature >= 0.0) || !std::isfinite(initial_temperature))
    throw ValidationError("initial temperature must be finite and >= 0");
}

namespace {

constexpr std::size_t kKnobs = kKnobParams.size();
constexpr std::size_t kMoves = 2 * kKnobs;

using KnobState = std::array<std::size_t, kKnobs>;

// Shared machinery: knob-index state <-> points, and the move rule.
class SearchSpace {
 public:
  SearchSpace(const Objective& objective, const SearchContext& context) : objective_(objective), context_(context) {
    if (!objective.evaluate) throw ValidationError("objective has no evaluator");
    context.validate();
    for (std::size_t k = 0; k < kKnobs; ++k) cardinality_[k] = context.domain.parameter(kKnobParams[k]).cardinality();
    base_ = default_configuration(context.domain, context.workload, context.physical);
  }

  ConfigurationPoint point(const KnobState& s) const {
    ConfigurationPoint p = base_;
    for (std::size_t k = 0; k < kKnobs; ++k) p[kKnobParams[k]] = context_.domain.parameter(kKnobParams[k]).values[s[k]];
    return p;
  }

  KnobState state_of(const ConfigurationPoint& p) const {
    require_valid(context_.domain, p);
    if (p.workload() != context_.workload || p.physical() != context_.physical)
      throw ValidationError("start point does not match the search context");
    KnobState s{};
    for (std::size_t k = 0; k < kKnobs; ++k) s[k] = *context_.domain.parameter(kKnobParams[k]).index_of(p[kKnobParams[k]]);
    return s;
  }

  KnobState random_state(SplitMix64& rng) const {
    KnobState s{};
    for (std::size_t k = 0; k < kKnobs; ++k) s[k] = rng.below(cardinality_[k]);
    return s;
  }

  // Move id in [0, 14): knob = id / 2, direction = id % 2 ? +1 : -1.
  static std::size_t draw_move(SplitMix64& rng) {
    const std::size_t knob = rng.below(kKnobs);
    const std::size_t up = rng.below(2);
    return 2 * knob + up;
  }

  KnobState apply(const KnobState& s, std::size_t move) const {
    KnobState out = s;
    const std::size_t k = move / 2;
    const auto size = static_cast<long>(cardinality_[k]);
    const long dir = (move % 2) ? 1 : -1;
    long next = static_cast<long>(s[k]) + dir;
    if (next < 0 || next >= size) next = static_cast<long>(s[k]) - dir;  // reflect
    if (next < 0 || next >= size) next = static_cast<long>(s[k]);        // singleton domain
    out[k] = static_cast<std::size_t>(next);
    return out;
  }

  double raw(const KnobState& s) const { return objective_.evaluate(point(s)); }
  // Canonical minimization value.
  double canonical(double raw_value) const {
    return objective_.direction() == Direction::maximize ? -raw_value : raw_value;
  }

  const std::array<std::size_t, kKnobs>& cardinality() const { return cardinality_; }

 private:
  const Objective& objective_;
  const SearchContext& context_;
  std::array<std::size_t, kKnobs> cardinality_{};
  ConfigurationPoint base_;
};

KnobState start_state(const SearchSpace& space, const std::optional<ConfigurationPoint>& start, std::uint64_t seed) {
  if (start) return space.state_of(*start);
  SplitMix64 rng(derive_seed(seed, 0));
  return space.random_state(rng);
}

}  // namespace

TuningResult hill_climb(const Objective& objective, const SearchContext& context,
                        const std::optional<ConfigurationPoint>& start, std::size_t budget, std::uint64_t seed) {
  if (budget < 1) throw ValidationError("hill climbing budget must be >= 1");
  const SearchSpace space(objective, context);
  SplitMix64 moves(derive_seed(seed, 1));

  KnobState current = start_state(space, start, seed);
  double current_raw = space.raw(current);
  double current_val = space.canonical(current_raw);
  TuningResult result;
  result.evaluations = 1;
  result.trace.push_back({0, 0.0, current_raw, true, current_raw});

  std::array<bool, kMoves> failed{};
  std::size_t failed_count = 0;
  while (result.evaluations < budget && failed_count < kMoves) {
    const std::size_t move = SearchSpace::draw_move(moves);
    const KnobState candidate = space.apply(current, move);
    const double cand_raw = space.raw(candidate);
    const double cand_val = space.canonical(cand_raw);
    ++result.evaluations;
    const bool accepted = cand_val < current_val;
    if (accepted) {
      current = candidate;
      current_raw = cand_raw;
      current_val = cand_val;
      failed.fill(false);
      failed_count = 0;
    } else if (!failed[move]) {
      failed[move] = true;
      ++failed_count;
    }
    result.trace.push_back({result.evaluations - 1, 0.0, cand_raw, accepted, current_raw});
  }
  result.best = space.point(current);
  result.value = current_raw;
  return result;
}

TuningResult simulated_annealing(const Objective& objective, const SearchContext& context,
                                 const AnnealingSchedule& schedule, const std::optional<ConfigurationPoint>& start) {
  schedule.validate();
  const SearchSpace space(objective, context);
  SplitMix64 moves(derive_seed(schedule.seed, 1));
  SplitMix64 acceptance(derive_seed(schedule.seed, 2));

  KnobState current = start_state(space, start, schedule.seed);
  double best_raw = space.raw(current);
  double current_val = space.canonical(best_raw);
  KnobState best = current;
  double best_val = current_val;

  TuningResult result;
  result.evaluations = 1;
  double temperature = schedule.initial_temperature;
  result.trace.push_back({0, temperature, best_raw, true, best_raw});

  std::size_t level_moves = 0;
  while (result.evaluations < schedule.budget) {
    const KnobState candidate = space.apply(current, SearchSpace::draw_move(moves));
    const double cand_raw = space.raw(candidate);
    const double cand_val = space.canonical(cand_raw);
    ++result.evaluations;
    const double delta = cand_val - current_val;
    bool accepted = false;
    if (temperature > 0.0) {
      accepted = delta <= 0.0 || acceptance.uniform01() < std::exp(-delta / temperature);
    } else {
      accepted = delta < 0.0;
    }
    if (accepted) {
      current = candidate;
      current_val = cand_val;
    }
    if (cand_val < best_val) {
      best = candidate;
      best_val = cand_val;
      best_raw = cand_raw;
    }
    result.trace.push_back({result.evaluations - 1, temperature, cand_raw, accepted, best_raw});
    if (++level_moves == schedule.moves_per_level) {
      temperature *= schedule.cooling;
      level_moves = 0;
    }
  }
  result.best = space.point(best);
  result.value = best_raw;
  return result;
}

TuningResult simulated_annealing_restarts(const Objective& objective, const SearchContext& context,
                                          const AnnealingSchedule& schedule, std::size_t restarts) {
  if (restarts < 1) throw ValidationError("restarts must be >= 1");
  if (restarts == 1) return simulated_annealing(objective, context, schedule);
  const bool maximize = objective.direction() == Direction::maximize;
  std::optional<TuningResult> best;
  std::size_t total = 0;
  for (std::size_t r = 0; r < restarts; ++r) {
    AnnealingSchedule s = schedule;
    s.seed = derive_seed(schedule.seed, r);
    auto run = simulated_annealing(objective, context, s);
    total += run.evaluations;
    const bool better = !best || (maximize ? run.value > best->value : run.value < best->value);
    if (better) best = std::move(run);
  }
  best->evaluations = total;
  return *best;
}

TuningResult exhaustive_search(const Objective& objective, const SearchContext& context, std::uint64_t cap) {
  const SearchSpace space(objective, context);
  const std::uint64_t size = context.domain.knob_space_size();
  if (size > cap)
    throw ValidationError("knob space has " + std::to_string(size) + " points, above the exhaustive cap of " +
                          std::to_string(cap) + "; use simulated annealing");
  KnobState state{};
  KnobState best_state{};
  double best_val = std::numeric_limits<double>::infinity();
  double best_raw = 0.0;
  TuningResult result;
  while (true) {
    const double raw = space.raw(state);
    const double val = space.canonical(raw);
    ++result.evaluations;
    if (val < best_val) {
      best_val = val;
      best_raw = raw;
      best_state = state;
    }
    // Odometer, last knob fastest.
    std::size_t k = kKnobs;
    while (k > 0) {
      --k;
      if (++state[k] < space.cardinality()[k]) break;
      state[k] = 0;
      if (k == 0) {
        result.best = space.point(best_state);
        result.value = best_raw;
        return result;
      }
    }
  }
}

double calibrate_t0(const Objective& objective, const SearchContext& context, std::size_t samples,
                    std::uint64_t seed) {
  if (samples < 2) throw ValidationError("calibration needs at least 2 samples");
  const SearchSpace space(objective, context);
  SplitMix64 rng(seed);
  std::vector<double> uphill;
  for (std::size_t i = 0; i < samples; ++i) {
    const KnobState a = space.random_state(rng);
    const KnobState b = space.apply(a, SearchSpace::draw_move(rng));
    const double delta = space.canonical(space.raw(b)) - space.canonical(space.raw(a));
    if (delta > 0.0) uphill.push_back(delta);
  }
  if (uphill.empty()) return 0.0;
  return median(uphill) / std::log(1.0 / 0.8);
}

AnnealingSchedule default_schedule(const Objective& objective, const SearchContext& context, std::uint64_t seed,
                                   std::size_t budget) {
  AnnealingSchedule s;
  s.seed = seed;
  s.budget = budget;
  s.initial_temperature = calibrate_t0(objective, context, 100, derive_seed(seed, 3));
  return s;
}

void write_trace_csv(const TuningResult& result, std::ostream& out) {
  out << "step,temperature,candidate_value,accepted,best_so_far\n";
  for (const auto& t : result.trace)
    out << t.step << ',' << format_number(t.temperature) << ',' << format_number(t.value) << ','
        << (t.accepted ? 1 : 0) << ',' << format_number(t.best) << '\n';
}

}  // namespace kvtune
