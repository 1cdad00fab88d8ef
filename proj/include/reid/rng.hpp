#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace reid {

// SplitMix64 finalizer; decorrelates user seeds and per-stream tags.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

// Uniform in [0,1) built from the top 53 bits. mt19937_64 output is
// standardized, so values are identical across platforms and library
// versions.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller, cosine branch only.
inline double gaussian(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);  // (0,1], keeps log() finite
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.28318530717958647692 * u2);
}

// n must be > 0.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

}  // namespace reid
