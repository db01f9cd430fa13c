#pragma once

#include <cstdint>
#include <random>

namespace bonnet {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Sub-seed for stream `index` of a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// Portable random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The distributions are implemented here rather than taken from
/// <random>, whose distribution algorithms are implementation-defined:
///   uniform01: top 53 bits of one draw, scaled by 2^-53  -> [0, 1)
///   normal:    Box-Muller on two uniform01 draws, cosine branch only
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace bonnet
