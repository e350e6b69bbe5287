#pragma once

#include <cstdint>
#include <random>

namespace gscope {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-derived child seed. Streams for distinct (master, index, stream) are
/// independent for practical purposes, and the derivation is order-free.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                                                  std::uint64_t stream = 0) noexcept {
    return mix64(mix64(master ^ mix64(stream)) + index);
}

/// Uniform draw on the open interval (0, 1).
[[nodiscard]] inline double uniform_open(Rng& rng) {
    for (;;) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

}  // namespace gscope
