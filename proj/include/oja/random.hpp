#pragma once

#include <cstdint>
#include <limits>

namespace oja {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-keyed generator: the stream for (seed, domain, index) is a pure
/// function of those three numbers, so any sample of any trial can be
/// regenerated without replaying its predecessors. Satisfies
/// UniformRandomBitGenerator, so it plugs into <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t seed, std::uint64_t domain = 0, std::uint64_t index = 0) noexcept
      : state_(mix64(mix64(mix64(seed) ^ (domain * 0xd1b54a32d192ed03ULL)) + index * 0x9e3779b97f4a7c15ULL)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

 private:
  std::uint64_t state_;
};

/// Well-separated key spaces for the different random draws of one trial.
namespace rng_domain {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kSample = 2;
inline constexpr std::uint64_t kRotation = 3;
inline constexpr std::uint64_t kOfflineBatch = 4;
}  // namespace rng_domain

}  // namespace oja
