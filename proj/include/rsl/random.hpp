#pragma once

// Seeded randomness shared by every module. The standard distributions are
// implementation-defined, so draws are mapped from raw engine output by hand
// to keep replays identical across standard libraries.

#include <cstdint>
#include <random>
#include <string_view>

namespace rsl {

using Engine = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a; std::hash is not stable across platforms.
inline constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Derives an independent sub-seed for a named stream.
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                                           std::uint64_t index = 0) {
    return splitmix64(splitmix64(base ^ hash_string(stream)) + splitmix64(index + 1));
}

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
inline double uniform01_open_low(Engine& eng) {
    return static_cast<double>((eng() >> 11) + 1) * 0x1.0p-53;
}

inline double uniform_real(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

/// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::uint64_t uniform_index(Engine& eng, std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t r;
    do {
        r = eng();
    } while (r >= limit);
    return r % n;
}

inline bool coin_flip(Engine& eng) { return (eng() >> 63) != 0; }

}  // namespace rsl
