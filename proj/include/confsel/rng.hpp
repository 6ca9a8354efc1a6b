#pragma once

#include <cstdint>

namespace confsel {

// Counter-based 64-bit generator (splitmix64 output function over an
// incrementing counter). Every draw is a pure function of (key, index), so
// streams can be split per purpose and values are randomly addressable:
// regenerating any column subset of a simulated dataset is bit-identical to
// generating the full dataset, and replications are independent of thread
// scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  // Finalizer from splitmix64; bijective on 64-bit words.
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Key for an independent named substream.
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) {
    return mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
  }

  std::uint64_t at(std::uint64_t index) const {
    return mix(key_ + 0x9e3779b97f4a7c15ULL * (index + 1));
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform on [0, 1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on the open interval (0, 1); safe as inverse-CDF input.
  double next_uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal();

  bool next_bernoulli(double p) { return next_uniform() < p; }

  std::uint64_t counter() const { return counter_; }
  void seek(std::uint64_t index) { counter_ = index; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// Inverse of the standard normal CDF (rational approximation, absolute error
// below 1e-9 over (0, 1)). Throws std::domain_error outside (0, 1).
double inv_norm_cdf(double p);

inline double CounterRng::next_normal() { return inv_norm_cdf(next_uniform_open()); }

}  // namespace confsel
