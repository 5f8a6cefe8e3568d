#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "babylon/couplings.hpp"

namespace babylon {

// Covariance of the linearizing Gaussian field: sum_k |g_ik| on the
// diagonal, g_ij off it. Diagonally dominant by construction, hence PSD.
struct CovarianceSpec {
    int n = 0;
    std::vector<double> c;  // n*n row-major
    double max_diag = 0.0;

    double at(int i, int j) const { return c[static_cast<std::size_t>(i) * n + j]; }
};

CovarianceSpec build_covariance(const CouplingMatrix& g);

// l is n x rank row-major with l l^T ~= c (within 1e-8 * max_diag).
struct FieldFactor {
    int n = 0;
    int rank = 0;
    std::vector<double> l;
};

// Plain Cholesky when c is numerically positive definite; otherwise a
// symmetric eigendecomposition with eigenvalues in [-1e-10 d_max, 0]
// clamped to zero (singular covariances occur, e.g. all-ferromagnetic
// couplings on a bipartite graph). Eigenvalues below the clamp window
// raise NotPsdError.
FieldFactor factorize(const CovarianceSpec& c);

// Field sample via x = l z with z i.i.d. standard normal; sample m is a
// pure function of (seed, m).
class FactorizedSampler {
public:
    FactorizedSampler(FieldFactor factor, std::uint64_t seed);

    int n() const noexcept { return f_.n; }
    void sample(std::uint64_t index, std::span<double> out) const;

private:
    FieldFactor f_;
    std::uint64_t seed_;
};

// Materializes X_i = (X_{i.} + X_{.i} + Y_{i.} - Y_{.i}) / sqrt(2) from
// independent normals attached to the nonzero g+/g- entries; O(edges) per
// sample. Same law as the factorized route, derived without ever forming
// the covariance, so the two samplers cross-check each other.
class ConstructiveSampler {
public:
    ConstructiveSampler(const SignSplit& split, std::uint64_t seed);

    int n() const noexcept { return n_; }
    void sample(std::uint64_t index, std::span<double> out) const;

private:
    struct Term {
        std::int32_t i;
        std::int32_t j;
        double sqrt_plus;
        double sqrt_minus;
    };

    int n_ = 0;
    std::vector<Term> terms_;
    std::uint64_t seed_;
};

using SampleFn = std::function<void(std::uint64_t, std::span<double>)>;

struct EmpiricalMoments {
    int n = 0;
    std::uint64_t count = 0;
    std::vector<double> mean;  // length n
    std::vector<double> cov;   // n*n row-major

    double cov_at(int i, int j) const { return cov[static_cast<std::size_t>(i) * n + j]; }
};

EmpiricalMoments empirical_moments(const SampleFn& sample, int n, std::uint64_t count);

}  // namespace babylon
