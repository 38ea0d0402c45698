#pragma once

#include <cstdint>
#include <random>

namespace shapemc {

using Rng = std::mt19937_64;

// Uniform on [0, 1) from the top 53 bits of one engine draw.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of chain `chain_id` under master seed `seed`.
inline std::uint64_t chain_seed(std::uint64_t seed, std::uint64_t chain_id) { return seed ^ splitmix64(chain_id); }

}  // namespace shapemc
