#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ebpois {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed derived from a base seed and a list of stream keys (n, replicate,
/// method, ...). Streams with different keys are independent of the order in
/// which they are created.
constexpr std::uint64_t stream_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t seed,
                       std::initializer_list<std::uint64_t> keys) {
  return Rng(stream_seed(seed, keys));
}

inline std::int64_t sample_poisson(Rng& rng, double theta) {
  if (!(theta > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(theta);
  return dist(rng);
}

/// Uniform on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  for (;;) {
    const double u = std::generate_canonical<double, 53>(rng);
    if (u > 0.0) return u;
  }
}

}  // namespace ebpois
