#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers: every draw is a pure function of
// (seed, domain, a, b). Generation is therefore order-independent,
// shardable across workers, and reproducible entry by entry.
namespace babylon::rng {

// Domain tags keep streams from different modules disjoint under a shared seed.
enum class Domain : std::uint64_t {
    sk = 1,
    ea = 2,
    hopfield = 3,
    factorized = 4,
    constructive = 5,
    pspin_aux = 6,
    bootstrap = 7,
    tilt = 8,
};

namespace detail {

// splitmix64 finalizer; full-avalanche stage of the counter hash chain.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// (k + 1/2) * 2^-53: strictly inside (0, 1), safe under log().
constexpr double to_open_unit(std::uint64_t u) noexcept {
    return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace detail

constexpr std::uint64_t counter_hash(std::uint64_t seed, Domain d, std::uint64_t a,
                                     std::uint64_t b) noexcept {
    using detail::mix64;
    return mix64(mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(d))) ^ a) ^ b);
}

constexpr double uniform01(std::uint64_t seed, Domain d, std::uint64_t a,
                           std::uint64_t b) noexcept {
    return detail::to_open_unit(counter_hash(seed, d, a, b));
}

struct NormalPair {
    double z0;
    double z1;
};

// Two independent standard normals per counter (Box-Muller); consumption is
// fixed, so draw (d, a, b) never depends on any other draw.
inline NormalPair normal_pair(std::uint64_t seed, Domain d, std::uint64_t a,
                              std::uint64_t b) noexcept {
    const std::uint64_t h = counter_hash(seed, d, a, b);
    const double u1 = detail::to_open_unit(detail::mix64(h ^ 0x8BADF00DDEADBEEFull));
    const double u2 = detail::to_open_unit(detail::mix64(h ^ 0x1234ABCD5678EF01ull));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

inline double normal(std::uint64_t seed, Domain d, std::uint64_t a, std::uint64_t b) noexcept {
    return normal_pair(seed, d, a, b).z0;
}

}  // namespace babylon::rng
