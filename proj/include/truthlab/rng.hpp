#pragma once

#include <cstdint>
#include <random>

namespace truthlab {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic generator for one named stream. Streams derived from the
/// same (seed, key) produce identical sequences on every platform, which is
/// what makes results independent of the worker count.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t key);

  std::uint64_t next() { return engine_(); }
  /// Uniform integer in [lo, hi], unbiased (rejection sampling).
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi);
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

/// Combines a sequence of keys into one stream key.
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b);
std::uint64_t stream_key(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace truthlab
