#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rmab {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent generator from a seed and a list of keys
/// (stream tag, period, arm id, ...), so draws do not depend on the order in
/// which arms are visited.
inline std::mt19937_64 stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = splitmix64(seed);
    for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    return std::mt19937_64(h);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

namespace tag {
inline constexpr std::uint64_t synthetic = 1;
inline constexpr std::uint64_t random_window = 2;
inline constexpr std::uint64_t sampled_window = 3;
inline constexpr std::uint64_t surprise = 4;
inline constexpr std::uint64_t noise = 5;
}  // namespace tag

}  // namespace rmab
