#pragma once

#include <cstdint>

namespace partfuse {

/// SplitMix64 (Steele, Lea & Flood). State advances by 0x9e3779b97f4a7c15;
/// output is the standard 30/27/31 xor-shift-multiply finalizer. Used for
/// every seeded choice so runs are reproducible across platforms and ports.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  constexpr double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Stream for item `index` of a run seeded with `seed`.
  static constexpr SplitMix64 for_index(std::uint64_t seed, std::uint64_t index) noexcept {
    SplitMix64 mix(seed ^ (index * 0xd1b54a32d192ed03ull));
    return SplitMix64(mix.next());
  }

 private:
  std::uint64_t state_;
};

}  // namespace partfuse
