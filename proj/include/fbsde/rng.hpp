#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace fbsde {

// Counter-based random streams. Every draw is a pure function of a 64-bit
// key, so batches are bit-identical no matter how the surrounding loops are
// scheduled (serial, OpenMP, reordered). Keys are derived by mixing a seed
// with structural indices such as (path, step, lane).

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t seed_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

/// Derives a child seed from a base seed and a structural path of indices.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(base);
    for (std::uint64_t v : path) h = seed_combine(h, v);
    return h;
}

namespace detail {

// SplitMix64 step: advances the state and returns one output word.
inline std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Maps a word to the open interval (0, 1).
inline double unit_open(std::uint64_t u) {
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

struct NormalPair {
    double first;
    double second;
};

/// Two independent standard normals from one key (Box-Muller).
inline NormalPair normal_pair(std::uint64_t key) {
    std::uint64_t state = key;
    const double u1 = detail::unit_open(detail::splitmix_next(state));
    const double u2 = detail::unit_open(detail::splitmix_next(state));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(a), r * std::sin(a)};
}

/// Fills out[0..count) with standard normals keyed by (seed, path, step).
/// Lane j only ever depends on (seed, path, step, j/2), so a block is
/// reproducible in isolation and prefixes are stable under growing counts.
inline void standard_normal_block(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                                  double* out, int count) {
    const std::uint64_t base = derive_seed(seed, {path, step});
    for (int j = 0; j < count; j += 2) {
        const NormalPair p = normal_pair(seed_combine(base, static_cast<std::uint64_t>(j / 2)));
        out[j] = p.first;
        if (j + 1 < count) out[j + 1] = p.second;
    }
}

/// Uniform draw on [lo, hi) from a sequential stream (used for weight init).
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : state_(mix64(seed)) {}

    double next(double lo, double hi) {
        return lo + (hi - lo) * detail::unit_open(detail::splitmix_next(state_));
    }

private:
    std::uint64_t state_;
};

}  // namespace fbsde
