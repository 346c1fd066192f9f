#pragma once

// Deterministic RNG streams: every consumer derives an independent
// mt19937_64 from (seed, stream id) so results are reproducible regardless
// of evaluation order.

#include <cstdint>
#include <random>

namespace nuvlasov {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x51ed270b4d2cf0a1ULL)));
}

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// uniform in [lo, hi)
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t sample_binomial(std::mt19937_64& rng, std::uint64_t n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::uint64_t h = 0;
    for (std::uint64_t s = 0; s < n; ++s)
        if (uniform01(rng) < p) ++h;
    return h;
}

}  // namespace nuvlasov
