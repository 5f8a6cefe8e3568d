#include <doctest.h>

#include <cmath>
#include <sstream>

#include "babylon/numerics.hpp"
#include "babylon/pspin.hpp"
#include "babylon/rng.hpp"

using namespace babylon;

namespace {

ThreeBodyCouplings random_tensor(int n, int count, std::uint64_t seed) {
    std::vector<Triple> triples;
    std::uint64_t k = 0;
    while (static_cast<int>(triples.size()) < count) {
        const auto h1 = rng::counter_hash(seed, rng::Domain::pspin_aux, 1000 + k, 0);
        const auto h2 = rng::counter_hash(seed, rng::Domain::pspin_aux, 1000 + k, 1);
        ++k;
        const int i = static_cast<int>(h1 % n);
        const int j = static_cast<int>((h1 >> 16) % n);
        const int l = static_cast<int>((h1 >> 32) % n);
        int a = std::min({i, j, l}), c = std::max({i, j, l});
        int b = i + j + l - a - c;
        if (a == b || b == c) continue;
        bool dup = false;
        for (const Triple& t : triples)
            if (t.i == a && t.j == b && t.k == c) dup = true;
        if (dup) continue;
        triples.push_back({a, b, c, rng::normal(seed, rng::Domain::pspin_aux, 2000 + h2 % 997, 3)});
    }
    return ThreeBodyCouplings::from_triples(n, std::move(triples));
}

}  // namespace

TEST_CASE("babylonian_triple reproduces +-si*sj*sk exactly") {
    for (int si : {-1, 1})
        for (int sj : {-1, 1})
            for (int sk : {-1, 1}) {
                const auto [p, m] = babylonian_triple(si, sj, sk);
                CHECK(p == static_cast<double>(si * sj * sk));
                CHECK(m == static_cast<double>(-si * sj * sk));
            }
    CHECK(babylonian_triple(1, 1, 1) == std::pair(1.0, -1.0));
    CHECK(babylonian_triple(1, -1, 1) == std::pair(-1.0, 1.0));
    CHECK(babylonian_triple(-1, -1, -1) == std::pair(-1.0, 1.0));
    CHECK_THROWS_AS(babylonian_triple(2, 1, 1), std::invalid_argument);
}

TEST_CASE("tensor validation") {
    CHECK_THROWS_AS(ThreeBodyCouplings::from_triples(3, {{0, 2, 1, 1.0}}), ValidationError);
    CHECK_THROWS_AS(ThreeBodyCouplings::from_triples(3, {{0, 1, 3, 1.0}}), ValidationError);
    CHECK_THROWS_AS(
        ThreeBodyCouplings::from_triples(4, {{0, 1, 2, 1.0}, {0, 1, 2, 2.0}}), ValidationError);
    const auto t = ThreeBodyCouplings::from_triples(4, {{0, 1, 2, 0.0}, {1, 2, 3, 0.5}});
    CHECK(t.triples().size() == 1);  // zero entries are dropped
    CHECK(t.abs_sum() == 0.5);
}

TEST_CASE("tensor file round trip and parse errors") {
    const auto t = ThreeBodyCouplings::from_triples(5, {{0, 1, 2, -0.75}, {1, 3, 4, 0.25}});
    std::stringstream buf;
    save_three_body(t, buf);
    const auto back = load_three_body(buf);
    CHECK(back.n() == 5);
    REQUIRE(back.triples().size() == 2);
    CHECK(back.triples()[0].w == -0.75);

    std::istringstream bad("4\n0 1 two 1.0\n");
    try {
        load_three_body(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream unordered("4\n2 1 3 1.0\n");
    CHECK_THROWS_AS(load_three_body(unordered), ValidationError);
}

TEST_CASE("reduce_one_level: empty tensor") {
    const auto t = ThreeBodyCouplings::from_triples(4, {});
    const auto red = reduce_one_level(t, 0.7, 1, 0);
    CHECK(red.constant == 0.0);
    CHECK(red.effective_pair.edges().empty());
    for (double v : red.effective_field) CHECK(v == 0.0);
}

TEST_CASE("reduce_one_level: single positive triple puts the field on site i") {
    const double w = 0.6, beta = 0.9;
    const auto t = ThreeBodyCouplings::from_triples(4, {{0, 1, 2, w}});
    const auto red = reduce_one_level(t, beta, 5, 3);
    CHECK(red.constant == -beta * w);
    CHECK(red.effective_field[0] != 0.0);
    CHECK(red.effective_field[1] == 0.0);
    CHECK(red.effective_field[2] == 0.0);
    CHECK(red.effective_field[3] == 0.0);
    REQUIRE(red.effective_pair.edges().size() == 1);
    CHECK(red.effective_pair.edges()[0].i == 1);
    CHECK(red.effective_pair.edges()[0].j == 2);
    // plus-split triple: the same auxiliary scalar feeds field and pair
    CHECK(red.effective_pair.edges()[0].w == red.effective_field[0]);
}

TEST_CASE("conditional exactness: reduced instance matches the integrand per draw") {
    // For a fixed auxiliary draw, enumerating the reduced two-body instance
    // must reproduce a direct enumeration of the linearized 3-spin integrand.
    const int n = 6;
    const double beta = 0.8, h = 0.2;
    const std::uint64_t seed = 1234;
    const auto t = random_tensor(n, 5, 9);

    for (std::uint64_t draw = 0; draw < 5; ++draw) {
        const auto red = reduce_one_level(t, beta, seed, draw);
        std::vector<double> field = red.effective_field;
        for (double& v : field) v += h;
        const double via_reduction =
            exact_free_energy(red.effective_pair, 1.0, field) + red.constant;

        // direct route from the triples and the (documented) counter layout
        LogSumExp lse;
        for (std::uint64_t bits = 0; bits < (1ull << n); ++bits) {
            std::vector<int> sigma(n, 1);
            for (int b = 0; b < n; ++b)
                if (bits & (1ull << b)) sigma[b] = -1;
            double w = 0.0;
            for (std::size_t idx = 0; idx < t.triples().size(); ++idx) {
                const Triple& tr = t.triples()[idx];
                const double gp = std::max(tr.w, 0.0);
                const double gm = std::max(-tr.w, 0.0);
                const auto z = rng::normal_pair(seed, rng::Domain::pspin_aux, draw, idx);
                const double sjk = sigma[tr.j] * sigma[tr.k];
                w += std::sqrt(beta * gp) * z.z0 * (sigma[tr.i] + sjk);
                w += std::sqrt(beta * gm) * z.z1 * (sigma[tr.i] - sjk);
                w -= beta * (gp + gm);
            }
            for (int i = 0; i < n; ++i) w += h * sigma[i];
            lse.add(w);
        }
        const double direct = lse.log_sum() - n * std::log(2.0);
        CHECK(std::abs(via_reduction - direct) <= 1e-9);
    }
}

TEST_CASE("3-spin oracle: single triple gives log cosh(beta g)") {
    const double w = 0.8;
    const auto t = ThreeBodyCouplings::from_triples(3, {{0, 1, 2, w}});
    for (double beta : {0.25, 1.0})
        CHECK(exact_free_energy_pspin3(t, beta, 0.0) ==
              doctest::Approx(log_cosh(beta * w)).epsilon(1e-12));
}

TEST_CASE("3-spin oracle: beta = 0 and the empty tensor decouple") {
    const auto t = ThreeBodyCouplings::from_triples(5, {{0, 1, 2, 0.4}});
    CHECK(exact_free_energy_pspin3(t, 0.0, 0.3) ==
          doctest::Approx(5 * log_cosh(0.3)).epsilon(1e-13));
    const auto empty = ThreeBodyCouplings::from_triples(5, {});
    CHECK(exact_free_energy_pspin3(empty, 1.0, 0.3) ==
          doctest::Approx(5 * log_cosh(0.3)).epsilon(1e-13));
}

TEST_CASE("3-spin oracle is stable across worker counts and respects the cap") {
    const auto t = random_tensor(8, 12, 3);
    const double one = exact_free_energy_pspin3(t, 0.6, 0.1, {kDefaultEnumCap, 1});
    const double many = exact_free_energy_pspin3(t, 0.6, 0.1, {kDefaultEnumCap, 8});
    CHECK(std::abs(one - many) <= 1e-12 * std::abs(one));
    CHECK_THROWS_AS(exact_free_energy_pspin3(t, 0.6, 0.1, OracleOptions{4, 1}), CapExceededError);
}

TEST_CASE("nested estimator: empty tensor and beta = 0 are exact with zero variance") {
    const auto empty = ThreeBodyCouplings::from_triples(6, {});
    const auto r = nested_free_energy(empty, 0.9, 0.35, 100, 1);
    CHECK(r.value == doctest::Approx(6 * log_cosh(0.35)).epsilon(1e-14));
    CHECK(r.std_error == 0.0);

    const auto t = random_tensor(6, 4, 5);
    const auto r0 = nested_free_energy(t, 0.0, 0.35, 100, 1);
    CHECK(r0.value == doctest::Approx(6 * log_cosh(0.35)).epsilon(1e-14));
    CHECK(r0.std_error == 0.0);
}

TEST_CASE("nested estimator: single triple agrees with log cosh(beta g)") {
    const double w = 0.8, beta = 0.5;
    const auto t = ThreeBodyCouplings::from_triples(3, {{0, 1, 2, w}});
    const auto r = nested_free_energy(t, beta, 0.0, 50000, 11);
    const double expected = log_cosh(beta * w);
    CHECK(std::abs(r.value - expected) <= 3.0 * r.std_error);
    CHECK(exact_free_energy_pspin3(t, beta, 0.0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("nested estimator agrees with the 3-spin oracle on a random tensor") {
    const auto t = random_tensor(6, 5, 21);
    const double beta = 0.5, h = 0.15;
    const auto r = nested_free_energy(t, beta, h, 20000, 31);
    const double exact = exact_free_energy_pspin3(t, beta, h);
    CHECK(std::abs(r.value - exact) <= 4.0 * r.std_error);
}

TEST_CASE("nested estimator is deterministic and job-independent") {
    const auto t = random_tensor(5, 4, 8);
    const auto a = nested_free_energy(t, 0.7, 0.1, 2000, 9, {kDefaultEnumCap, 1});
    const auto b = nested_free_energy(t, 0.7, 0.1, 2000, 9, {kDefaultEnumCap, 3});
    CHECK(a.value == b.value);
    CHECK_THROWS_AS(nested_free_energy(t, 0.7, 0.1, 1, 9), std::invalid_argument);
}
