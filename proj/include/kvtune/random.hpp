#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <utility>

namespace kvtune {

/// SplitMix64 finalizer (Steele, Lea & Flood).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed of the `stream`-th independent substream of `seed`.
///
///   derive_seed(s, i) = mix64(s ^ mix64(i + 0x632BE59BD9B4E019))
///
/// Used for per-tree, per-example and per-trial streams so that results do
/// not depend on execution order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(seed ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// SplitMix64 generator. The full recurrence is
///
///   state <- state + 0x9E3779B97F4A7C15   (mod 2^64)
///   output = mix64(state)
///
/// Every random decision in the library goes through the helpers below so
/// that streams are portable across standard libraries.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept { return next(); }

  constexpr result_type next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Integer in [0, n). Plain modulo reduction; n must be > 0.
  constexpr std::size_t below(std::size_t n) noexcept {
    return static_cast<std::size_t>(next() % static_cast<std::uint64_t>(n));
  }

  /// Double in [0, 1) with 53 random bits.
  double uniform01() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch, one value per two draws).
  double normal() noexcept {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

/// In-place Fisher-Yates: for i = n-1 down to 1, swap(v[i], v[below(i+1)]).
template <typename T>
void fisher_yates(std::span<T> values, SplitMix64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

}  // namespace kvtune
