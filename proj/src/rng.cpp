#include "wsl/rng.hpp"

#include <array>

namespace wsl {

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed) {
  std::array<std::uint32_t, 8> words{};
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < words.size(); i += 2) {
    h = splitmix64(h);
    words[i] = static_cast<std::uint32_t>(h);
    words[i + 1] = static_cast<std::uint32_t>(h >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

}  // namespace

Stream::Stream(std::uint64_t seed) : engine_(seeded_engine(seed)) {}

Stream Stream::derive(std::uint64_t master_seed,
                      std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(master_seed);
  for (std::uint64_t key : keys) {
    h = splitmix64(h ^ splitmix64(key + 0x632be59bd9b4e019ULL));
  }
  return Stream(h);
}

std::uint64_t Stream::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = bound == 0 ? 0 : (~std::uint64_t{0} - bound + 1) % bound;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= limit) return r % bound;
  }
}

}  // namespace wsl
