#include "babylon/decomposition.hpp"

#include <stdexcept>
#include <string>

#include "babylon/numerics.hpp"

namespace babylon {

void SpinConfig::validate() const {
    for (std::size_t i = 0; i < spins.size(); ++i)
        if (spins[i] != 1 && spins[i] != -1)
            throw std::invalid_argument("spin " + std::to_string(i) + " is not +-1");
}

double hamiltonian_raw(const CouplingMatrix& g, const SpinConfig& sigma) {
    if (sigma.n() != g.n()) throw std::invalid_argument("spin configuration size mismatch");
    sigma.validate();
    KahanSum acc;
    for (const Edge& e : g.edges()) acc.add(e.w * sigma.spins[e.i] * sigma.spins[e.j]);
    return acc.value();
}

std::pair<double, double> babylonian_pair(int si, int sj) {
    if ((si != 1 && si != -1) || (sj != 1 && sj != -1))
        throw std::invalid_argument("spins must be +-1");
    const double p = si + sj;
    const double m = si - sj;
    return {0.5 * p * p - 1.0, 0.5 * m * m - 1.0};
}

double constant_g(const SignSplit& split) {
    KahanSum acc;
    for (const SplitEdge& e : split.edges()) acc.add(e.plus + e.minus);
    return -2.0 * acc.value();  // each unordered pair appears twice in the double sum
}

DecomposedHamiltonian decompose(const CouplingMatrix& g) {
    SignSplit split = sign_split(g);
    const double c = constant_g(split);
    return {std::move(split), c, g.n()};
}

double hamiltonian_decomposed(const DecomposedHamiltonian& d, const SpinConfig& sigma) {
    if (sigma.n() != d.n) throw std::invalid_argument("spin configuration size mismatch");
    sigma.validate();
    // (1/2) sum_{ij} over the symmetric zero-diagonal double sum = sum over i<j edges
    KahanSum acc;
    for (const SplitEdge& e : d.split.edges()) {
        const double sp = sigma.spins[e.i] + sigma.spins[e.j];
        const double sm = sigma.spins[e.i] - sigma.spins[e.j];
        acc.add(e.plus * sp * sp + e.minus * sm * sm);
    }
    acc.add(d.g_const);
    return 0.5 * acc.value();
}

}  // namespace babylon
