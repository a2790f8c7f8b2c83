#pragma once

#include <cstdint>

namespace ergoprobe {

/// Stateless counter-based generator: draw(k) depends only on (key, k), so a
/// realization's numbers do not depend on which thread produced them or on
/// how many were drawn before. Mixing is SplitMix64's finalizer.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }

  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const;
  /// Uniform on [-1, 1).
  double symmetric(std::uint64_t counter) const { return 2.0 * uniform(counter) - 1.0; }
  /// Standard normal via Box-Muller on counters 2k and 2k+1.
  double normal(std::uint64_t k) const;

private:
  std::uint64_t key_;
};

}  // namespace ergoprobe
