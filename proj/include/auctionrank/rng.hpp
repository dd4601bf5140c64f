#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace auctionrank {

/// SplitMix64 finalizer. Used both as the counter-to-output mixing function
/// and to derive child keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based, splittable generator.
///
/// Output k of a stream with key K is mix64(K ^ mix64(k)). Streams are
/// derived from a parent key and a stream id, so any component can open
/// its own stream without coordinating with others. Distribution sampling is
/// implemented here rather than with <random> distributions so generated
/// datasets do not depend on the standard library vendor.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  /// Child stream; distinct ids give non-overlapping sequences.
  [[nodiscard]] CounterRng split(std::uint64_t stream_id) const {
    return CounterRng(mix64(key_ ^ mix64(stream_id + 0x632be59bd9b4e019ULL)));
  }

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), n > 0 (Lemire's multiply-shift, slight bias
  /// below 2^-32 for the sizes used here is irrelevant).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal via Box-Muller; consumes two outputs per call.
  double normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace auctionrank
