#include "babylon/oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "babylon/numerics.hpp"

namespace babylon {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321214581766;
constexpr std::uint64_t kRefreshInterval = 4096;  // bounds incremental drift

std::vector<double> broadcast(double h, int n) {
    return std::vector<double>(static_cast<std::size_t>(n), h);
}

void check_inputs(const CouplingMatrix& g, double beta, const std::vector<double>& h,
                  const OracleOptions& opts) {
    if (g.n() > opts.cap) throw CapExceededError(g.n(), opts.cap);
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (h.size() != static_cast<std::size_t>(g.n()))
        throw std::invalid_argument("field vector length must equal n");
    for (double v : h)
        if (!std::isfinite(v)) throw std::invalid_argument("field entries must be finite");
    if (opts.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

// Incremental Gray-code walk: maintains sigma, the local fields
// local[i] = sum_j g_ij sigma_j, the Hamiltonian and the field sum, with a
// periodic from-scratch refresh to keep accumulated rounding negligible.
struct GrayWalker {
    const std::vector<std::vector<std::pair<int, double>>>& adj;
    const std::vector<Edge>& edges;
    const std::vector<double>& h;
    int n;

    std::vector<int> sigma;
    std::vector<double> local;
    double ham = 0.0;
    double field_sum = 0.0;

    void init_at(std::uint64_t m) {
        const std::uint64_t gray = m ^ (m >> 1);
        sigma.assign(n, 1);
        for (int b = 0; b < n; ++b)
            if (gray & (1ull << b)) sigma[b] = -1;
        refresh();
    }

    void refresh() {
        local.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            KahanSum acc;
            for (const auto& [j, w] : adj[i]) acc.add(w * sigma[j]);
            local[i] = acc.value();
        }
        KahanSum hacc;
        for (const Edge& e : edges) hacc.add(e.w * sigma[e.i] * sigma[e.j]);
        ham = hacc.value();
        KahanSum facc;
        for (int i = 0; i < n; ++i) facc.add(h[i] * sigma[i]);
        field_sum = facc.value();
    }

    void flip(int k) {
        const double sk = sigma[k];
        ham -= 2.0 * sk * local[k];
        field_sum -= 2.0 * sk * h[k];
        for (const auto& [j, w] : adj[k]) local[j] -= 2.0 * sk * w;
        sigma[k] = -sigma[k];
    }
};

}  // namespace

SpinConfig spin_config_at(std::uint64_t m, int n) {
    if (n < 1 || n > 63) throw std::invalid_argument("n out of range");
    const std::uint64_t gray = m ^ (m >> 1);
    SpinConfig s = SpinConfig::all_up(n);
    for (int b = 0; b < n; ++b)
        if (gray & (1ull << b)) s.spins[b] = -1;
    return s;
}

double exact_free_energy(const CouplingMatrix& g, double beta, const std::vector<double>& h,
                         const OracleOptions& opts) {
    check_inputs(g, beta, h, opts);
    const int n = g.n();
    const auto adj = adjacency(g);
    const std::uint64_t total = 1ull << n;

    std::vector<LogSumExp> partial(static_cast<std::size_t>(opts.jobs));
    run_sharded(total, opts.jobs, [&](int worker, std::uint64_t begin, std::uint64_t end) {
        if (begin == end) return;
        GrayWalker walk{adj, g.edges(), h, n, {}, {}, 0.0, 0.0};
        walk.init_at(begin);
        LogSumExp& lse = partial[static_cast<std::size_t>(worker)];
        for (std::uint64_t m = begin; m < end; ++m) {
            lse.add(beta * walk.ham + walk.field_sum);
            if (m + 1 < end) {
                walk.flip(std::countr_zero(m + 1));
                if ((m + 1 - begin) % kRefreshInterval == 0) walk.refresh();
            }
        }
    });

    LogSumExp merged;
    for (const LogSumExp& p : partial) merged.merge(p);
    const double result = merged.log_sum() - n * kLn2;
    if (!std::isfinite(result)) throw NumericalError("enumeration produced a non-finite result");
    return result;
}

double exact_free_energy(const CouplingMatrix& g, double beta, double h,
                         const OracleOptions& opts) {
    return exact_free_energy(g, beta, broadcast(h, g.n()), opts);
}

namespace {

// Weighted spin accumulators sharing one running maximum; rescaled in place
// whenever a larger weight arrives.
struct ObsAccum {
    int n = 0;
    double max_w = -std::numeric_limits<double>::infinity();
    KahanSum sum_w;
    std::uint64_t count = 0;
    std::vector<double> mag;   // sum of t * sigma_i
    std::vector<double> corr;  // packed i<j, sum of t * sigma_i sigma_j

    explicit ObsAccum(int n_)
        : n(n_), mag(static_cast<std::size_t>(n_), 0.0),
          corr(static_cast<std::size_t>(n_) * (n_ - 1) / 2, 0.0) {}

    void rescale(double k) {
        sum_w.scale(k);
        for (double& v : mag) v *= k;
        for (double& v : corr) v *= k;
    }

    void add(double w, const std::vector<int>& sigma) {
        ++count;
        double t;
        if (w > max_w) {
            const bool first = max_w == -std::numeric_limits<double>::infinity();
            rescale(first ? 0.0 : std::exp(max_w - w));
            max_w = w;
            t = 1.0;
        } else {
            t = std::exp(w - max_w);
        }
        sum_w.add(t);
        std::size_t p = 0;
        for (int i = 0; i < n; ++i) {
            const double ti = t * sigma[i];
            mag[i] += ti;
            for (int j = i + 1; j < n; ++j) corr[p++] += ti * sigma[j];
        }
    }

    void merge(const ObsAccum& o) {
        count += o.count;
        if (o.max_w == -std::numeric_limits<double>::infinity()) return;
        double scale_other = 1.0;
        if (o.max_w > max_w) {
            rescale(max_w == -std::numeric_limits<double>::infinity() ? 0.0
                                                                      : std::exp(max_w - o.max_w));
            max_w = o.max_w;
        } else {
            scale_other = std::exp(o.max_w - max_w);
        }
        sum_w.add(o.sum_w.value() * scale_other);
        for (std::size_t i = 0; i < mag.size(); ++i) mag[i] += o.mag[i] * scale_other;
        for (std::size_t p = 0; p < corr.size(); ++p) corr[p] += o.corr[p] * scale_other;
    }
};

}  // namespace

ExactObservables exact_observables(const CouplingMatrix& g, double beta,
                                   const std::vector<double>& h, const OracleOptions& opts) {
    check_inputs(g, beta, h, opts);
    const int n = g.n();
    const auto adj = adjacency(g);
    const std::uint64_t total = 1ull << n;

    std::vector<ObsAccum> partial(static_cast<std::size_t>(opts.jobs), ObsAccum(n));
    run_sharded(total, opts.jobs, [&](int worker, std::uint64_t begin, std::uint64_t end) {
        if (begin == end) return;
        GrayWalker walk{adj, g.edges(), h, n, {}, {}, 0.0, 0.0};
        walk.init_at(begin);
        ObsAccum& acc = partial[static_cast<std::size_t>(worker)];
        for (std::uint64_t m = begin; m < end; ++m) {
            acc.add(beta * walk.ham + walk.field_sum, walk.sigma);
            if (m + 1 < end) {
                walk.flip(std::countr_zero(m + 1));
                if ((m + 1 - begin) % kRefreshInterval == 0) walk.refresh();
            }
        }
    });

    ObsAccum merged(n);
    for (const ObsAccum& p : partial) merged.merge(p);

    const double z = merged.sum_w.value();
    const double free_energy = merged.max_w + std::log(z / static_cast<double>(merged.count));
    if (!std::isfinite(free_energy) || z <= 0.0)
        throw NumericalError("enumeration produced a non-finite result");

    ExactObservables out;
    out.free_energy = free_energy;
    out.magnetizations.resize(n);
    out.correlations.assign(static_cast<std::size_t>(n) * n, 1.0);
    for (int i = 0; i < n; ++i) out.magnetizations[i] = merged.mag[i] / z;
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double c = merged.corr[p++] / z;
            out.correlations[static_cast<std::size_t>(i) * n + j] = c;
            out.correlations[static_cast<std::size_t>(j) * n + i] = c;
        }
    return out;
}

ExactObservables exact_observables(const CouplingMatrix& g, double beta, double h,
                                   const OracleOptions& opts) {
    return exact_observables(g, beta, broadcast(h, g.n()), opts);
}

}  // namespace babylon
