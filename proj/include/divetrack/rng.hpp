#pragma once
// Deterministic random helpers. std::mt19937_64 produces a portable bit
// stream; the draw helpers below stay away from std::*_distribution so the
// same seed yields the same sequence on every standard library.

#include <cmath>
#include <cstdint>
#include <random>

namespace divetrack {

// Stateless mixer, handy for per-pixel noise without a generator object.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [lo, hi], inclusive. Modulo bias is ~span/2^64.
inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(rng() % span);
}

// Box-Muller without cached state; consumes exactly two draws per call.
inline double normal_double(std::mt19937_64& rng, double mean = 0.0, double stddev = 1.0) {
    const double u1 = static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; // (0, 1]
    const double u2 = uniform_double(rng);
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
}

} // namespace divetrack
