#include "jdatt/rng.hpp"

#include <cmath>

namespace jdatt {

namespace {
inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53 mantissa bits -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gauss() {
  // Box-Muller; u1 shifted away from 0 so log stays finite.
  const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gauss(double mean, double std) { return mean + std * gauss(); }

int64_t Rng::uniform_int(int64_t n) {
  if (n <= 0) return 0;
  return static_cast<int64_t>(next_u64() % static_cast<uint64_t>(n));
}

bool Rng::bernoulli(double p_true) { return uniform() < p_true; }

uint64_t derive_seed(uint64_t master, uint64_t index) {
  uint64_t s = master ^ (0x9e3779b97f4a7c15ULL + (index << 1));
  splitmix64(s);
  uint64_t mixed = s;
  return splitmix64(mixed);
}

}  // namespace jdatt
