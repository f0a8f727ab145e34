#pragma once

#include <cstdint>
#include <random>

namespace distcma {

// All sampling goes through this wrapper so that output is reproducible
// across platforms: mt19937_64 has a standardized output sequence and the
// index sampler below avoids the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform over [0, n). Rejection sampling, no modulo bias.
  std::size_t uniform_index(std::size_t n);

  // Uniform real in [lo, hi).
  double uniform_real(double lo, double hi);

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

// SplitMix64, used to derive per-key deterministic values.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a 64-bit hash over bytes.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);

}  // namespace distcma
