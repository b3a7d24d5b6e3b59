#pragma once

#include <cstdint>
#include <limits>

namespace relu_lqr {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent 64-bit key from a parent key and an index.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return mix64(mix64(parent) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based bit generator keyed by (seed, stream). Each stream is a
/// fixed sequence, so neuron j or sample i draws the same values regardless
/// of which thread evaluates it or in which order. Satisfies
/// UniformRandomBitGenerator and plugs into <random> distributions.
class CounterStream {
 public:
  using result_type = std::uint64_t;

  CounterStream(std::uint64_t seed, std::uint64_t stream) : key_(derive_seed(seed, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + 0xd1b54a32d192ed03ULL * ++counter_); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace relu_lqr
