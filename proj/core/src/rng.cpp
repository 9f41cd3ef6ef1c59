#include "kdvlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace kdvlab {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return mix64(mix64(seed) ^ mix64(tag + 0x632be59bd9b4e019ULL));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_(mix64(mix64(seed) ^ (stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL))) {}

std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept {
  return mix64(key_ ^ mix64(counter));
}

double CounterRng::uniform(std::uint64_t counter) const noexcept {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

std::pair<double, double> CounterRng::normal_pair(std::uint64_t counter) const noexcept {
  const double u1 = uniform(2 * counter);
  const double u2 = uniform(2 * counter + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

std::uint64_t CounterRng::below(std::uint64_t counter, std::uint64_t bound) const noexcept {
  return static_cast<std::uint64_t>(uniform(counter) * static_cast<double>(bound)) % bound;
}

}  // namespace kdvlab
