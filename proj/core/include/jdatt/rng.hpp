#pragma once

#include <cstdint>

namespace jdatt {

/// Deterministic 64-bit generator (splitmix64 core). All randomness in the
/// project flows through this type so runs are reproducible from seeds alone,
/// independent of the standard library's distribution internals.
class Rng {
public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (no cached spare; one draw per call).
  double gauss();
  double gauss(double mean, double std);
  /// Uniform integer in [0, n).
  int64_t uniform_int(int64_t n);
  bool bernoulli(double p_true);

private:
  uint64_t state_;
};

/// Stable seed derivation for parallel/per-item streams.
uint64_t derive_seed(uint64_t master, uint64_t index);

}  // namespace jdatt
