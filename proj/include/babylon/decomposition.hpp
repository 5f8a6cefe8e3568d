#pragma once

#include <utility>
#include <vector>

#include "babylon/couplings.hpp"

namespace babylon {

// A configuration of n Ising spins, every entry exactly +1 or -1.
struct SpinConfig {
    std::vector<int> spins;

    static SpinConfig all_up(int n) { return {std::vector<int>(static_cast<std::size_t>(n), 1)}; }
    int n() const noexcept { return static_cast<int>(spins.size()); }
    void validate() const;  // throws std::invalid_argument on entries other than +-1
};

// H(sigma) = sum_{i<j} g_ij sigma_i sigma_j
double hamiltonian_raw(const CouplingMatrix& g, const SpinConfig& sigma);

// sigma_i sigma_j = (si+sj)^2/2 - 1 and -sigma_i sigma_j = (si-sj)^2/2 - 1.
// Returns both completed squares; each component is exactly +-1.
std::pair<double, double> babylonian_pair(int si, int sj);

// G = -sum_{i,j} (g+_ij + g-_ij) = -sum_{i,j} |g_ij| (full double sum)
double constant_g(const SignSplit& split);

// The Hamiltonian rewritten as nonnegative quadratic terms plus the
// sigma-independent constant G.
struct DecomposedHamiltonian {
    SignSplit split;
    double g_const;
    int n;
};

DecomposedHamiltonian decompose(const CouplingMatrix& g);

// Evaluates H(sigma) through the decomposition:
//   (1/2) [ (1/2) sum_{ij} g+_ij (si+sj)^2 + (1/2) sum_{ij} g-_ij (si-sj)^2 + G ].
// Must agree with hamiltonian_raw on every configuration.
double hamiltonian_decomposed(const DecomposedHamiltonian& d, const SpinConfig& sigma);

}  // namespace babylon
