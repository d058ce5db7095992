#pragma once

#include <cstdint>
#include <random>

namespace iuq {

/// Splittable RNG handle. A (seed, stream) pair fully determines the draw
/// sequence: the engine is std::mt19937_64 seeded from two rounds of
/// splitmix64 over seed and stream, so workers can be handed disjoint
/// streams without shared state. Cross-language ports that adopt the same
/// seeding recipe reproduce draws exactly; the test suites only rely on
/// statistics.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::mt19937_64 engine() const;

  /// Derive a child stream; child sequences are independent of the parent's.
  RngStream split(std::uint64_t substream) const;
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace iuq
