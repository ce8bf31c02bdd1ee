#pragma once

#include <cstdint>

namespace mixgp {

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: draw k of stream s under seed is a pure function of
/// (seed, s, k), so responders are reproducible regardless of call order.
class CounterRng {
public:
  CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : key_(mix64(seed ^ mix64(stream + 0x7f4a7c15ULL))) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ mix64(counter)); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }
  // Sequential interface over the same counters.
  double next_uniform() { return uniform(counter_++); }
  std::uint64_t next_bits() { return bits(counter_++); }
  std::uint64_t counter() const { return counter_; }

  // Substream for a derived purpose (e.g. one per trial).
  CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream); }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mixgp
