#pragma once

// Seeding and uniform draws. std::mt19937_64 is bit-specified by the
// standard; the conversion to [0,1) is done here rather than through
// std::uniform_real_distribution, whose output is implementation-defined.

#include <cstdint>
#include <random>

namespace graphshift {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed of the i-th Monte-Carlo sample (or i-th grid point) of a run seeded
// with `seed`: splitmix64(seed + (i + 1) * golden_gamma).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t i) {
    return splitmix64(seed + (i + 1) * 0x9E3779B97F4A7C15ULL);
}

inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

}  // namespace graphshift
