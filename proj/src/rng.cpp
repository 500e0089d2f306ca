#include "truthlab/rng.hpp"

namespace truthlab {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_key(std::uint64_t a, std::uint64_t b) { return mix64(mix64(a) ^ (b + 0x632be59bd9b4e019ULL)); }

std::uint64_t stream_key(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return stream_key(stream_key(a, b), c); }

Rng::Rng(std::uint64_t seed, std::uint64_t key) : engine_(mix64(seed ^ mix64(key))) {}

std::uint64_t Rng::uniform(std::uint64_t lo, std::uint64_t hi) {
  std::uint64_t span = hi - lo;
  if (span == UINT64_MAX) return next();
  std::uint64_t range = span + 1;
  std::uint64_t limit = UINT64_MAX - (UINT64_MAX % range);
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return lo + x % range;
}

}  // namespace truthlab
