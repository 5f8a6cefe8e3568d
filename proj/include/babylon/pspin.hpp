#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "babylon/couplings.hpp"
#include "babylon/estimator.hpp"
#include "babylon/oracle.hpp"

namespace babylon {

struct Triple {
    std::int32_t i;
    std::int32_t j;
    std::int32_t k;
    double w;
};

// Sparse 3-body couplings g_ijk on strictly increasing index triples.
class ThreeBodyCouplings {
public:
    static ThreeBodyCouplings from_triples(int n, std::vector<Triple> triples);

    int n() const noexcept { return n_; }
    const std::vector<Triple>& triples() const noexcept { return triples_; }

    // sum_t |g_ijk| over the stored (ordered) triples
    double abs_sum() const noexcept { return abs_sum_; }

private:
    ThreeBodyCouplings() = default;

    int n_ = 0;
    std::vector<Triple> triples_;  // sorted by (i, j, k)
    double abs_sum_ = 0.0;
};

// sigma_i sigma_j sigma_k = (si + sj sk)^2 / 2 - 1 and its negated twin.
// Each component is exactly +-1.
std::pair<double, double> babylonian_triple(int si, int sj, int sk);

// The 3-body problem conditioned on one set of auxiliary Gaussians: a
// per-site field (the "sigma_i" part), a residual two-body instance (the
// "sigma_j sigma_k" part), and the accumulated -beta |g_ijk| constant.
struct ReducedInstance {
    CouplingMatrix effective_pair;
    std::vector<double> effective_field;
    double constant = 0.0;
};

// Sign-splits each triple and applies Gaussian linearization to both
// completed squares; the two auxiliary normals of triple t under draw
// aux_index are pure functions of (seed, aux_index, t).
ReducedInstance reduce_one_level(const ThreeBodyCouplings& t, double beta, std::uint64_t seed,
                                 std::uint64_t aux_index);

// Exact enumeration of the 3-spin free energy (ground truth).
double exact_free_energy_pspin3(const ThreeBodyCouplings& t, double beta, double h,
                                const OracleOptions& opts = {});

struct NestedOptions {
    int inner_cap = kDefaultEnumCap;  // the reduced two-body instance is solved exactly
    int jobs = 1;
};

// Outer Monte Carlo over the auxiliary Gaussians, exact inner solve of every
// reduced two-body instance. Deterministic given (seed, outer_samples).
EstimateResult nested_free_energy(const ThreeBodyCouplings& t, double beta, double h,
                                  std::uint64_t outer_samples, std::uint64_t seed,
                                  const NestedOptions& opts = {});

// Text format: '#' comments; first content line n; then "i j k value" with i<j<k.
ThreeBodyCouplings load_three_body(std::istream& in);
ThreeBodyCouplings load_three_body_file(const std::string& path);
void save_three_body(const ThreeBodyCouplings& t, std::ostream& out);
void save_three_body_file(const ThreeBodyCouplings& t, const std::string& path);

}  // namespace babylon
