#pragma once

#include <string_view>

namespace kvtune {

/// One measured (or predicted) performance triple.
struct Metrics {
  double throughput_ops = 0.0;
  double read_latency_ms = 0.0;
  double write_latency_ms = 0.0;

  bool operator==(const Metrics&) const = default;
};

enum class TargetMetric { throughput, read_latency, write_latency };

enum class Direction { maximize, minimize };

/// Throughput is maximized, latencies minimized.
constexpr Direction direction_of(TargetMetric m) noexcept {
  return m == TargetMetric::throughput ? Direction::maximize : Direction::minimize;
}

constexpr double select(const Metrics& m, TargetMetric t) noexcept {
  switch (t) {
    case TargetMetric::throughput: return m.throughput_ops;
    case TargetMetric::read_latency: return m.read_latency_ms;
    case TargetMetric::write_latency: return m.write_latency_ms;
  }
  return 0.0;
}

std::string_view to_string(TargetMetric t);
TargetMetric parse_target(std::string_view text);

/// All three metrics finite and strictly positive.
bool is_plausible(const Metrics& m) noexcept;

}  // namespace kvtune
