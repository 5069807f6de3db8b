#pragma once

#include <cstdint>
#include <random>

namespace cdakd {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Independent named streams derived from one run seed, so that e.g. the
// action stream does not shift when a variant draws extra k-means seeds.
enum class Stream : std::uint64_t {
  kInit = 1,
  kAction = 2,
  kReplay = 3,
  kKMeans = 4,
  kEnv = 5,
  kPartition = 6,
  kEncoder = 7,
  kInitialStates = 8,
  kProbe = 9,
};

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) << 56)) + index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

// Uniform double in [lo, hi) computed from raw bits so results do not depend
// on the standard library's distribution implementation.
inline double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * static_cast<double>(n)) % n;
}

}  // namespace cdakd
