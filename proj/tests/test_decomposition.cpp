#include <doctest.h>

#include <cmath>

#include "babylon/decomposition.hpp"
#include "babylon/rng.hpp"

using namespace babylon;

namespace {

// independent evaluation through the full double sum, entry by entry
double hamiltonian_reference(const CouplingMatrix& g, const SpinConfig& s) {
    double acc = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) acc += g.at(i, j) * s.spins[i] * s.spins[j];
    return 0.5 * acc;
}

SpinConfig config_from_bits(std::uint64_t bits, int n) {
    SpinConfig s = SpinConfig::all_up(n);
    for (int b = 0; b < n; ++b)
        if (bits & (1ull << b)) s.spins[b] = -1;
    return s;
}

}  // namespace

TEST_CASE("babylonian_pair reproduces +-si*sj exactly") {
    for (int si : {-1, 1})
        for (int sj : {-1, 1}) {
            const auto [p, m] = babylonian_pair(si, sj);
            CHECK(p == static_cast<double>(si * sj));
            CHECK(m == static_cast<double>(-si * sj));
        }
    CHECK(babylonian_pair(1, 1) == std::pair(1.0, -1.0));
    CHECK(babylonian_pair(1, -1) == std::pair(-1.0, 1.0));
    CHECK(babylonian_pair(-1, -1) == std::pair(1.0, -1.0));
    CHECK_THROWS_AS(babylonian_pair(0, 1), std::invalid_argument);
}

TEST_CASE("hamiltonian_raw on tiny instances") {
    const auto g = CouplingMatrix::from_edges(2, {{0, 1, 0.5}});
    CHECK(hamiltonian_raw(g, {{1, 1}}) == 0.5);
    CHECK(hamiltonian_raw(g, {{1, -1}}) == -0.5);

    const auto zero = CouplingMatrix::zero(4);
    CHECK(hamiltonian_raw(zero, {{1, -1, 1, -1}}) == 0.0);
    CHECK_THROWS_AS(hamiltonian_raw(g, SpinConfig{{1, 1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(hamiltonian_raw(g, SpinConfig{{1, 2}}), std::invalid_argument);
}

TEST_CASE("constant_g counts every unordered pair twice") {
    const auto plus = decompose(CouplingMatrix::from_edges(2, {{0, 1, 0.5}}));
    CHECK(plus.g_const == -1.0);
    const auto minus = decompose(CouplingMatrix::from_edges(2, {{0, 1, -0.5}}));
    CHECK(minus.g_const == -1.0);
    const auto zero = decompose(CouplingMatrix::zero(3));
    CHECK(zero.g_const == 0.0);
}

TEST_CASE("g_const equals minus the split double sum") {
    const auto g = generate_sk(20, 4);
    const auto d = decompose(g);
    double ref = 0.0;
    for (int i = 0; i < g.n(); ++i)
        for (int j = 0; j < g.n(); ++j) ref += d.split.plus(i, j) + d.split.minus(i, j);
    CHECK(d.g_const == doctest::Approx(-ref).epsilon(1e-14));
    CHECK(d.g_const == doctest::Approx(-g.abs_sum()).epsilon(1e-14));
}

TEST_CASE("decomposed Hamiltonian equals the raw one on a hand case") {
    const auto d = decompose(CouplingMatrix::from_edges(2, {{0, 1, 0.5}}));
    CHECK(hamiltonian_decomposed(d, {{1, 1}}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(hamiltonian_decomposed(d, {{1, -1}}) == doctest::Approx(-0.5).epsilon(1e-15));

    const auto z = decompose(CouplingMatrix::zero(3));
    CHECK(hamiltonian_decomposed(z, {{1, -1, 1}}) == 0.0);
}

TEST_CASE("decomposition identity holds on every configuration") {
    for (int n : {2, 3, 5, 8, 12}) {
        for (std::uint64_t seed = 0; seed < 4; ++seed) {
            const auto g = generate_sk(n, 100 + seed);
            const auto d = decompose(g);
            const double tol = 1e-10 * (1.0 + g.abs_sum());
            for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
                const auto s = config_from_bits(bits, n);
                const double raw = hamiltonian_raw(g, s);
                const double dec = hamiltonian_decomposed(d, s);
                const double ref = hamiltonian_reference(g, s);
                CHECK(std::abs(dec - raw) <= tol);
                CHECK(std::abs(raw - ref) <= tol);
            }
        }
    }
}

TEST_CASE("every quadratic term in the decomposition is nonnegative") {
    const auto g = generate_sk(10, 77);
    const auto s = sign_split(g);
    for (std::uint64_t bits = 0; bits < (1ull << 10); bits += 37) {
        const auto cfg = config_from_bits(bits, 10);
        for (const SplitEdge& e : s.edges()) {
            const double sp = cfg.spins[e.i] + cfg.spins[e.j];
            const double sm = cfg.spins[e.i] - cfg.spins[e.j];
            CHECK(e.plus * sp * sp >= 0.0);
            CHECK(e.minus * sm * sm >= 0.0);
        }
    }
}
