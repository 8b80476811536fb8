#pragma once

#include <cstdint>

namespace rgexpect {
namespace rng {

// splitmix64 finalizer; the basis of all counter-based streams here. Streams
// are pure functions of (seed, counters), so parallel chunking cannot change
// the numbers drawn for a given logical index.
inline std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

inline std::uint64_t stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = mix(seed + 0x9e3779b97f4a7c15ULL * (a + 1));
    return mix(z ^ (0xd1b54a32d192ed03ULL * (b + 1)));
}

/// Uniform in [0, 1) from 53 of the 64 bits.
inline double uniform01(std::uint64_t u) { return static_cast<double>(u >> 11) * 0x1.0p-53; }

inline double uniform(std::uint64_t u, double lo, double hi) {
    return lo + (hi - lo) * uniform01(u);
}

} // namespace rng
} // namespace rgexpect
