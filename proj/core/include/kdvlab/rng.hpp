#pragma once

#include <cstdint>
#include <utility>

namespace kdvlab {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Child seed for a labelled sub-experiment.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// Counter-based random source: every draw is a pure function of
/// (seed, stream, counter), so parallel consumers need no coordination.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept;

  std::uint64_t bits(std::uint64_t counter) const noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const noexcept;
  /// Two independent standard normals (Box-Muller on draws 2c and 2c+1).
  std::pair<double, double> normal_pair(std::uint64_t counter) const noexcept;
  /// Uniform index in [0, bound).
  std::uint64_t below(std::uint64_t counter, std::uint64_t bound) const noexcept;

 private:
  std::uint64_t key_;
};

}  // namespace kdvlab
