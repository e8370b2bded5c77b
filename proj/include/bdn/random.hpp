#pragma once

#include <cstdint>
#include <random>

namespace bdn {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits; identical across
/// standard library implementations, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform index in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

}  // namespace bdn
