#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace wsl {

// SplitMix64 finalizer; used to turn (seed, key...) tuples into stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// A seeded random stream. Substreams are derived from a master seed and a
/// key path (for example {cell, trial, hypothesis}), so a work item produces
/// the same draws no matter which thread runs it or in what order.
class Stream {
 public:
  explicit Stream(std::uint64_t seed);

  static Stream derive(std::uint64_t master_seed,
                       std::initializer_list<std::uint64_t> keys);

  std::uint64_t next() { return engine_(); }
  int bit() { return static_cast<int>(engine_() >> 63); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() { return normal_(engine_); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wsl
