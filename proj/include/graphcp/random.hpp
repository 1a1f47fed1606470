#pragma once

// Portable seeded sampling. The standard <random> distributions are
// implementation-defined, so everything that feeds reproducible outputs
// draws through these helpers instead.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace graphcp::rng {

using Engine = std::mt19937_64;

/// SplitMix64 finaliser, used to derive independent child seeds.
[[nodiscard]] constexpr std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix(mix(seed) ^ mix(stream + 0x632be59bd9b4e019ULL));
}

/// Uniform on the open interval (0, 1).
[[nodiscard]] inline double uniform(Engine& e) noexcept {
    return (static_cast<double>(e() >> 11) + 0.5) * 0x1.0p-53;
}

/// Uniform integer in [0, n) by rejection (no modulo bias).
[[nodiscard]] inline std::uint64_t below(Engine& e, std::uint64_t n) noexcept {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = e();
    while (x >= limit) x = e();
    return x % n;
}

/// Standard normal via Box-Muller (one draw per call).
[[nodiscard]] inline double normal(Engine& e) noexcept {
    const double u1 = uniform(e);
    const double u2 = uniform(e);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Poisson(lambda): sequential inversion below 30, PTRS transformed rejection above.
[[nodiscard]] std::int64_t poisson(Engine& e, double lambda);

/// Fisher-Yates with `below`.
template <class It>
void shuffle(It first, It last, Engine& e) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) std::swap(first[i - 1], first[below(e, i)]);
}

} // namespace graphcp::rng
