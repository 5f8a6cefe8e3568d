#include "babylon/gaussfield.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "babylon/numerics.hpp"
#include "babylon/rng.hpp"

namespace babylon {

CovarianceSpec build_covariance(const CouplingMatrix& g) {
    const int n = g.n();
    if (n > CouplingMatrix::kDenseCap)
        throw std::invalid_argument("dense covariance supported up to n=" +
                                    std::to_string(CouplingMatrix::kDenseCap));
    CovarianceSpec spec;
    spec.n = n;
    spec.c.assign(static_cast<std::size_t>(n) * n, 0.0);

    std::vector<KahanSum> diag(n);
    for (const Edge& e : g.edges()) {
        spec.c[static_cast<std::size_t>(e.i) * n + e.j] = e.w;
        spec.c[static_cast<std::size_t>(e.j) * n + e.i] = e.w;
        diag[e.i].add(std::abs(e.w));
        diag[e.j].add(std::abs(e.w));
    }
    for (int i = 0; i < n; ++i) {
        const double d = diag[i].value();
        spec.c[static_cast<std::size_t>(i) * n + i] = d;
        spec.max_diag = std::max(spec.max_diag, d);
    }
    return spec;
}

FieldFactor factorize(const CovarianceSpec& spec) {
    const int n = spec.n;
    if (n < 1) throw std::invalid_argument("covariance must have n >= 1");

    if (spec.max_diag == 0.0) return {n, 0, {}};  // zero field

    const Eigen::Map<const Eigen::MatrixXd> c(spec.c.data(), n, n);

    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
        const Eigen::MatrixXd l = llt.matrixL();
        // a pivot collapsing to rounding noise means c is really singular;
        // take the clamped eigendecomposition route instead
        double min_pivot = l(0, 0) * l(0, 0);
        for (int k = 1; k < n; ++k) min_pivot = std::min(min_pivot, l(k, k) * l(k, k));
        if (min_pivot > 1e-12 * spec.max_diag) {
            FieldFactor f{n, n, std::vector<double>(static_cast<std::size_t>(n) * n, 0.0)};
            for (int i = 0; i < n; ++i)
                for (int k = 0; k <= i; ++k) f.l[static_cast<std::size_t>(i) * n + k] = l(i, k);
            return f;
        }
    }

    // Semidefinite case: eigendecompose and clamp the near-zero eigenvalues.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
    const double clamp_floor = -1e-10 * spec.max_diag;

    std::vector<int> keep;  // descending eigenvalue order
    for (int k = n - 1; k >= 0; --k) {
        const double lambda = es.eigenvalues()(k);
        if (lambda < clamp_floor)
            throw NotPsdError("covariance eigenvalue " + std::to_string(lambda) +
                              " below the PSD tolerance");
        if (lambda > 0.0) keep.push_back(k);
    }

    FieldFactor f{n, static_cast<int>(keep.size()),
                  std::vector<double>(static_cast<std::size_t>(n) * keep.size(), 0.0)};
    for (std::size_t col = 0; col < keep.size(); ++col) {
        const double s = std::sqrt(es.eigenvalues()(keep[col]));
        for (int i = 0; i < n; ++i)
            f.l[static_cast<std::size_t>(i) * f.rank + col] = s * es.eigenvectors()(i, keep[col]);
    }
    return f;
}

FactorizedSampler::FactorizedSampler(FieldFactor factor, std::uint64_t seed)
    : f_(std::move(factor)), seed_(seed) {}

void FactorizedSampler::sample(std::uint64_t index, std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(f_.n))
        throw std::invalid_argument("output span size mismatch");
    const int rank = f_.rank;
    std::vector<double> z(rank);
    for (int k = 0; k < rank; k += 2) {
        const auto p = rng::normal_pair(seed_, rng::Domain::factorized, index,
                                        static_cast<std::uint64_t>(k / 2));
        z[k] = p.z0;
        if (k + 1 < rank) z[k + 1] = p.z1;
    }
    for (int i = 0; i < f_.n; ++i) {
        const double* row = &f_.l[static_cast<std::size_t>(i) * rank];
        double acc = 0.0;
        for (int k = 0; k < rank; ++k) acc += row[k] * z[k];
        out[i] = acc;
    }
}

ConstructiveSampler::ConstructiveSampler(const SignSplit& split, std::uint64_t seed)
    : n_(split.n()), seed_(seed) {
    terms_.reserve(split.edges().size());
    for (const SplitEdge& e : split.edges())
        terms_.push_back({e.i, e.j, std::sqrt(e.plus), std::sqrt(e.minus)});
}

void ConstructiveSampler::sample(std::uint64_t index, std::span<double> out) const {
    if (out.size() != static_cast<std::size_t>(n_))
        throw std::invalid_argument("output span size mismatch");
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        const Term& term = terms_[t];
        if (term.sqrt_plus > 0.0) {
            // X_ij and X_ji enter both rows with the same sign
            const auto p = rng::normal_pair(seed_, rng::Domain::constructive, index, 2 * t);
            const double v = term.sqrt_plus * (p.z0 + p.z1);
            out[term.i] += v;
            out[term.j] += v;
        }
        if (term.sqrt_minus > 0.0) {
            // Y_ij - Y_ji enters row i; row j picks up the opposite sign
            const auto p = rng::normal_pair(seed_, rng::Domain::constructive, index, 2 * t + 1);
            const double v = term.sqrt_minus * (p.z0 - p.z1);
            out[term.i] += v;
            out[term.j] -= v;
        }
    }
    const double inv_sqrt2 = 0.70710678118654752440084436210485;
    for (double& x : out) x *= inv_sqrt2;
}

EmpiricalMoments empirical_moments(const SampleFn& sample, int n, std::uint64_t count) {
    if (count < 1) throw std::invalid_argument("count must be >= 1");
    EmpiricalMoments m;
    m.n = n;
    m.count = count;
    m.mean.assign(n, 0.0);
    m.cov.assign(static_cast<std::size_t>(n) * n, 0.0);

    std::vector<double> sum(n, 0.0);
    std::vector<double> prod(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<double> x(n);
    for (std::uint64_t s = 0; s < count; ++s) {
        sample(s, x);
        for (int i = 0; i < n; ++i) {
            sum[i] += x[i];
            for (int j = i; j < n; ++j) prod[static_cast<std::size_t>(i) * n + j] += x[i] * x[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    for (int i = 0; i < n; ++i) m.mean[i] = sum[i] * inv;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double second = prod[static_cast<std::size_t>(i) * n + j] * inv;
            const double cov = second - m.mean[i] * m.mean[j];
            m.cov[static_cast<std::size_t>(i) * n + j] = cov;
            m.cov[static_cast<std::size_t>(j) * n + i] = cov;
        }
    return m;
}

}  // namespace babylon
