#include <doctest.h>

#include <cmath>

#include "babylon/rng.hpp"

using namespace babylon;

TEST_CASE("counter rng is a pure function of its arguments") {
    const double a = rng::normal(42, rng::Domain::sk, 3, 7);
    const double b = rng::normal(42, rng::Domain::sk, 3, 7);
    CHECK(a == b);

    CHECK(rng::normal(42, rng::Domain::sk, 3, 7) != rng::normal(43, rng::Domain::sk, 3, 7));
    CHECK(rng::normal(42, rng::Domain::sk, 3, 7) != rng::normal(42, rng::Domain::ea, 3, 7));
    CHECK(rng::normal(42, rng::Domain::sk, 3, 7) != rng::normal(42, rng::Domain::sk, 7, 3));
}

TEST_CASE("uniform draws stay strictly inside (0, 1)") {
    for (std::uint64_t k = 0; k < 100000; ++k) {
        const double u = rng::uniform01(123, rng::Domain::factorized, k, 0);
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal pairs have standard moments and no pair correlation") {
    const std::uint64_t m = 500000;
    double sum = 0.0, sum_sq = 0.0, cross = 0.0;
    for (std::uint64_t k = 0; k < m; ++k) {
        const auto p = rng::normal_pair(7, rng::Domain::constructive, k, 0);
        sum += p.z0 + p.z1;
        sum_sq += p.z0 * p.z0 + p.z1 * p.z1;
        cross += p.z0 * p.z1;
    }
    const double count = 2.0 * static_cast<double>(m);
    const double mean = sum / count;
    const double var = sum_sq / count - mean * mean;
    const double corr = cross / static_cast<double>(m);

    CHECK(std::abs(mean) < 4.0 / std::sqrt(count));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / count));
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(m)));
}
