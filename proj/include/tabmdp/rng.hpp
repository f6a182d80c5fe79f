#pragma once

#include <cstdint>

namespace tabmdp::rng {

// Stream tags keep independent consumers of the same user seed apart.
enum class Stream : std::uint64_t {
  kTransition = 0x7472616e73ULL,
  kRewardNoise = 0x7a657461ULL,
  kGenKernel = 0x67656e6bULL,
  kGenReward = 0x67656e72ULL,
  kGenChain = 0x6368616eULL,
  kTrial = 0x747269616cULL,
};

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t i,
                                   std::uint64_t j) {
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h + (i + 1) * kGolden);
  h = mix64(h ^ ((j + 1) * 0xd1b54a32d192ed03ULL));
  return h;
}

/// Counter-based stream keyed by (seed, tag, i, j). Draw k depends only on
/// the key and k, so output is independent of evaluation order.
class KeyedStream {
 public:
  constexpr KeyedStream(std::uint64_t seed, Stream stream, std::uint64_t i = 0,
                        std::uint64_t j = 0)
      : key_(derive_key(seed, stream, i, j)) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const {
    return mix64(key_ + (counter + 1) * kGolden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
};

/// Seed for trial `t` of a run seeded with `seed`.
constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t t) {
  return KeyedStream(seed, Stream::kTrial, t).bits(0);
}

}  // namespace tabmdp::rng
