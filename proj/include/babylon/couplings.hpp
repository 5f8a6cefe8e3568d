#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "babylon/errors.hpp"

namespace babylon {

// One off-diagonal coupling, stored once per unordered pair with i < j.
struct Edge {
    std::int32_t i;
    std::int32_t j;
    double w;
};

// Symmetric real coupling matrix with zero diagonal; the quenched disorder.
// The sorted edge list always carries the nonzero entries; a dense mirror is
// kept for n <= kDenseCap so entry lookup is O(1) at SK-like densities.
// Immutable after construction.
class CouplingMatrix {
public:
    static constexpr int kDenseCap = 4096;

    static CouplingMatrix zero(int n);
    static CouplingMatrix from_edges(int n, std::vector<Edge> edges);
    static CouplingMatrix from_dense(int n, const std::vector<double>& entries);

    int n() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    bool has_dense() const noexcept { return !dense_.empty(); }

    double at(int i, int j) const;

    // sum_{i,j} |g_ij| over the full double sum (each unordered pair twice)
    double abs_sum() const noexcept { return abs_sum_; }

private:
    CouplingMatrix() = default;

    int n_ = 0;
    std::vector<double> dense_;  // n*n row-major; empty when n > kDenseCap
    std::vector<Edge> edges_;    // sorted by (i, j), nonzero values only
    double abs_sum_ = 0.0;
};

// Neighbor lists (site, coupling) per site, derived from the edge list.
std::vector<std::vector<std::pair<int, double>>> adjacency(const CouplingMatrix& g);

struct SplitEdge {
    std::int32_t i;
    std::int32_t j;
    double plus;   // max(g_ij, 0)
    double minus;  // max(-g_ij, 0)
};

// Entrywise sign decomposition g = plus - minus with plus, minus >= 0,
// plus + minus = |g|, and at most one of the two nonzero per entry.
// Both identities are exact: max against zero introduces no rounding.
class SignSplit {
public:
    int n() const noexcept { return n_; }
    const std::vector<SplitEdge>& edges() const noexcept { return edges_; }

    double plus(int i, int j) const;
    double minus(int i, int j) const;

private:
    friend SignSplit sign_split(const CouplingMatrix& g);
    SignSplit() = default;

    const SplitEdge* find(int i, int j) const;

    int n_ = 0;
    std::vector<SplitEdge> edges_;  // sorted by (i, j)
};

SignSplit sign_split(const CouplingMatrix& g);

enum class Boundary { free, periodic };

// SK disorder: independent centered Gaussians with variance 1/n on every
// off-diagonal pair, symmetrised, zero diagonal. Entry (i, j) is a pure
// function of (seed, i, j).
CouplingMatrix generate_sk(int n, std::uint64_t seed);

// Edwards-Anderson disorder: independent standard Gaussians on the
// nearest-neighbor edges of the hypercubic lattice with the given extents,
// zero elsewhere. Periodic wrap edges that would duplicate an existing pair
// (extent <= 2) are skipped so each unordered pair carries one coupling.
CouplingMatrix generate_ea(const std::vector<int>& dims, Boundary boundary, std::uint64_t seed);

// Hopfield couplings g_ij = (1/n) sum_mu xi_i^mu xi_j^mu from p i.i.d.
// uniform +-1 patterns, with the diagonal forced to zero.
CouplingMatrix generate_hopfield(int n, int p, std::uint64_t seed);

// Same rule from explicitly supplied +-1 patterns (patterns[mu][i]).
CouplingMatrix hopfield_from_patterns(const std::vector<std::vector<int>>& patterns);

enum class ModelKind { sk, ea_lattice, hopfield, file };

struct ModelSpec {
    ModelKind kind = ModelKind::sk;
    int n = 0;                           // sk, hopfield
    std::uint64_t seed = 0;
    std::vector<int> dims;               // ea_lattice
    Boundary boundary = Boundary::free;  // ea_lattice
    int patterns = 0;                    // hopfield
    std::string path;                    // file

    void validate() const;  // throws std::invalid_argument
    int sites() const;      // number of spins implied by the parameters
};

CouplingMatrix generate(const ModelSpec& spec);

// Text format: '#' starts a comment; first content line is n; every further
// content line is "i j value" with 0-based i < j; unlisted pairs are zero.
CouplingMatrix load_couplings(std::istream& in);
CouplingMatrix load_couplings_file(const std::string& path);
void save_couplings(const CouplingMatrix& g, std::ostream& out);
void save_couplings_file(const CouplingMatrix& g, const std::string& path);

}  // namespace babylon
