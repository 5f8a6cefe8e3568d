#include "babylon/estimator.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "babylon/numerics.hpp"
#include "babylon/rng.hpp"

namespace babylon {

namespace {

std::vector<double> broadcast(double h, int n) {
    return std::vector<double>(static_cast<std::size_t>(n), h);
}

void check_inputs(const CouplingMatrix& g, double beta, const std::vector<double>& h,
                  std::uint64_t samples, const EstimatorOptions& opts) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (samples < 2) throw std::invalid_argument("samples must be >= 2");
    if (opts.antithetic && samples % 2 != 0)
        throw std::invalid_argument("antithetic pairing requires an even sample count");
    if (h.size() != static_cast<std::size_t>(g.n()))
        throw std::invalid_argument("field vector length must equal n");
    for (double v : h)
        if (!std::isfinite(v)) throw std::invalid_argument("field entries must be finite");
    if (opts.jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

// The integrand exp(sum_i log cosh(...)) has lognormal-like tails once
// beta sum|g| is large; a plain draw from the field then wastes nearly all
// samples (ESS collapses and the log-of-mean sits below the truth). The
// factorized route therefore importance-samples z from a defensive mixture
// of isotropic Gaussians and carries the exact density ratio in the weight:
// E_q[w e^S] = E[e^S] still holds exactly, sample by sample.

// Field draw for one Monte Carlo unit: fills x with the untilted sample and
// returns |z|^2 for the factorized route (-1 when no z-space exists).
struct FieldSource {
    int rank = 0;
    bool tilt = false;
    std::function<double(std::uint64_t, std::span<double>)> draw;
};

FieldSource make_field_source(const CouplingMatrix& g, std::uint64_t seed, SamplerKind kind,
                              double beta) {
    FieldSource src;
    if (kind == SamplerKind::constructive) {
        auto sampler = std::make_shared<ConstructiveSampler>(sign_split(g), seed);
        src.draw = [sampler](std::uint64_t m, std::span<double> out) {
            sampler->sample(m, out);
            return -1.0;
        };
        return src;
    }
    auto factor = std::make_shared<FieldFactor>(factorize(build_covariance(g)));
    src.rank = factor->rank;
    src.tilt = beta > 0.0 && factor->rank > 0;
    src.draw = [factor, seed](std::uint64_t m, std::span<double> out) {
        const int rank = factor->rank;
        std::vector<double> z(rank);
        for (int k = 0; k < rank; k += 2) {
            const auto p = rng::normal_pair(seed, rng::Domain::factorized, m,
                                            static_cast<std::uint64_t>(k / 2));
            z[k] = p.z0;
            if (k + 1 < rank) z[k + 1] = p.z1;
        }
        double rho = 0.0;
        for (int k = 0; k < rank; ++k) rho += z[k] * z[k];
        for (int i = 0; i < factor->n; ++i) {
            const double* row = &factor->l[static_cast<std::size_t>(i) * rank];
            double acc = 0.0;
            for (int k = 0; k < rank; ++k) acc += row[k] * z[k];
            out[i] = acc;
        }
        return rho;
    };
    return src;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

namespace detail {

namespace {
constexpr int kTiltComponents = 4;
constexpr double kTiltScale[kTiltComponents] = {1.0, 1.4142135623730951, 2.0,
                                                2.8284271247461903};
constexpr double kTiltProb[kTiltComponents] = {0.4, 0.25, 0.2, 0.15};
}  // namespace

int tilt_component(std::uint64_t seed, std::uint64_t unit, std::uint64_t salt) {
    const double u = rng::uniform01(seed, rng::Domain::tilt, unit, salt);
    double acc = 0.0;
    for (int k = 0; k + 1 < kTiltComponents; ++k) {
        acc += kTiltProb[k];
        if (u < acc) return k;
    }
    return kTiltComponents - 1;
}

double tilt_scale(int component) { return kTiltScale[component]; }

double tilt_log_weight(double rho, int dims) {
    double term[kTiltComponents];
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kTiltComponents; ++k) {
        term[k] = std::log(kTiltProb[k]) - dims * std::log(kTiltScale[k]) -
                  rho / (2.0 * kTiltScale[k] * kTiltScale[k]);
        mx = std::max(mx, term[k]);
    }
    double sum = 0.0;
    for (int k = 0; k < kTiltComponents; ++k) sum += std::exp(term[k] - mx);
    return -0.5 * rho - (mx + std::log(sum));
}

LogMeanStats log_mean_stats(const std::vector<double>& s, bool antithetic) {
    const std::uint64_t m_total = s.size();
    const std::uint64_t units = antithetic ? m_total / 2 : m_total;

    LogMeanStats st;
    st.max_s = s[0];
    for (double v : s) st.max_s = std::max(st.max_s, v);

    st.unit_weights.resize(units);
    KahanSum raw_sum, raw_sq;
    for (std::uint64_t m = 0; m < m_total; ++m) {
        const double w = std::exp(s[m] - st.max_s);
        raw_sum.add(w);
        raw_sq.add(w * w);
    }
    if (antithetic) {
        for (std::uint64_t u = 0; u < units; ++u)
            st.unit_weights[u] = 0.5 * (std::exp(s[2 * u] - st.max_s) + std::exp(s[2 * u + 1] - st.max_s));
    } else {
        for (std::uint64_t u = 0; u < units; ++u) st.unit_weights[u] = std::exp(s[u] - st.max_s);
    }

    KahanSum wsum;
    for (double w : st.unit_weights) wsum.add(w);
    const double total = wsum.value();
    const double mean = total / static_cast<double>(units);
    st.log_mean = st.max_s + std::log(mean);

    KahanSum var_acc;
    for (double w : st.unit_weights) {
        const double d = w - mean;
        var_acc.add(d * d);
    }
    const double sd = std::sqrt(std::max(var_acc.value(), 0.0) / static_cast<double>(units - 1));
    st.std_error = sd / (mean * std::sqrt(static_cast<double>(units)));

    st.ess = raw_sum.value() * raw_sum.value() / raw_sq.value();

    // jackknife over units: (U-1) * (mean of leave-one-out log-means - log-mean)
    KahanSum loo;
    bool degenerate = false;
    for (double w : st.unit_weights) {
        const double rest = total - w;
        if (rest <= 0.0) {
            degenerate = true;
            break;
        }
        loo.add(std::log(rest / static_cast<double>(units - 1)));
    }
    if (degenerate) {
        st.bias_jackknife = std::numeric_limits<double>::quiet_NaN();
    } else {
        const double u = static_cast<double>(units);
        st.bias_jackknife = (u - 1.0) * (loo.value() / u - std::log(mean));
    }
    return st;
}

double bootstrap_std_error(const std::vector<double>& unit_weights, int resamples,
                           std::uint64_t seed) {
    const std::uint64_t units = unit_weights.size();
    std::vector<double> theta(static_cast<std::size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        KahanSum acc;
        for (std::uint64_t t = 0; t < units; ++t) {
            const std::uint64_t idx =
                rng::counter_hash(seed, rng::Domain::bootstrap, static_cast<std::uint64_t>(r), t) %
                units;
            acc.add(unit_weights[idx]);
        }
        theta[static_cast<std::size_t>(r)] = std::log(acc.value() / static_cast<double>(units));
    }
    double mean = 0.0;
    for (double t : theta) mean += t;
    mean /= static_cast<double>(resamples);
    double var = 0.0;
    for (double t : theta) var += (t - mean) * (t - mean);
    return std::sqrt(var / std::max(1.0, static_cast<double>(resamples - 1)));
}

}  // namespace detail

EstimateResult formula_free_energy(const CouplingMatrix& g, double beta,
                                   const std::vector<double>& h, std::uint64_t samples,
                                   std::uint64_t seed, const EstimatorOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    check_inputs(g, beta, h, samples, opts);
    const int n = g.n();
    const double sqrt_beta = std::sqrt(beta);
    const FieldSource src = make_field_source(g, seed, opts.sampler, beta);

    const std::uint64_t units = opts.antithetic ? samples / 2 : samples;
    std::vector<double> s(samples);
    run_sharded(units, opts.jobs, [&](int, std::uint64_t begin, std::uint64_t end) {
        std::vector<double> x(n);
        for (std::uint64_t u = begin; u < end; ++u) {
            const double rho = src.draw(u, x);
            double scale = 1.0, log_w = 0.0;
            if (src.tilt) {
                const int k = detail::tilt_component(seed, u, 0);
                scale = detail::tilt_scale(k);
                log_w = detail::tilt_log_weight(scale * scale * rho, src.rank);
            }
            const double sb = sqrt_beta * scale;
            KahanSum sp;
            for (int i = 0; i < n; ++i) sp.add(log_cosh(h[i] + sb * x[i]));
            if (opts.antithetic) {
                KahanSum sm;
                for (int i = 0; i < n; ++i) sm.add(log_cosh(h[i] - sb * x[i]));
                s[2 * u] = sp.value() + log_w;
                s[2 * u + 1] = sm.value() + log_w;
            } else {
                s[u] = sp.value() + log_w;
            }
        }
    });

    const auto st = detail::log_mean_stats(s, opts.antithetic);

    EstimateResult r;
    r.value = st.log_mean - 0.5 * beta * g.abs_sum();
    r.std_error = st.std_error;
    r.samples = samples;
    r.seed = seed;
    r.ess = st.ess;
    r.bias_jackknife = st.bias_jackknife;
    r.low_ess_warning = st.ess < 10.0;
    if (!std::isfinite(r.value) || !std::isfinite(r.std_error))
        throw NumericalError("free-energy estimate is not finite (degenerate weights)");
    if (opts.bootstrap_resamples > 0)
        r.std_error_bootstrap =
            detail::bootstrap_std_error(st.unit_weights, opts.bootstrap_resamples, seed);
    r.elapsed_seconds = seconds_since(t0);
    return r;
}

EstimateResult formula_free_energy(const CouplingMatrix& g, double beta, double h,
                                   std::uint64_t samples, std::uint64_t seed,
                                   const EstimatorOptions& opts) {
    return formula_free_energy(g, beta, broadcast(h, g.n()), samples, seed, opts);
}

namespace {

// Self-normalized accumulators for tanh observables, sharing one running
// maximum of S. Linear fields rescale by k on a new maximum, squared fields
// by k^2. One unit = one antithetic pair (or one sample).
struct WeightedObsAccum {
    int n = 0;
    double max_s = -std::numeric_limits<double>::infinity();
    double w_sum = 0.0, w_sq = 0.0;
    double raw_sum = 0.0, raw_sq = 0.0;
    std::vector<double> num, num_sq, num_w;  // per site
    std::vector<double> q, q_sq, q_w;        // packed pairs i<j

    explicit WeightedObsAccum(int n_)
        : n(n_), num(n_, 0.0), num_sq(n_, 0.0), num_w(n_, 0.0) {
        const std::size_t pairs = static_cast<std::size_t>(n_) * (n_ - 1) / 2;
        q.assign(pairs, 0.0);
        q_sq.assign(pairs, 0.0);
        q_w.assign(pairs, 0.0);
    }

    void rescale(double k) {
        const double k2 = k * k;
        w_sum *= k;
        raw_sum *= k;
        w_sq *= k2;
        raw_sq *= k2;
        for (double& v : num) v *= k;
        for (double& v : q) v *= k;
        for (double& v : num_sq) v *= k2;
        for (double& v : num_w) v *= k2;
        for (double& v : q_sq) v *= k2;
        for (double& v : q_w) v *= k2;
    }

    void bump_max(double s) {
        if (s <= max_s) return;
        rescale(max_s == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(max_s - s));
        max_s = s;
    }

    // tb may be null (no antithetic partner)
    void add_unit(double sa, const double* ta, const double* sb_tb, double sb) {
        bump_max(std::max(sa, sb_tb ? sb : sa));
        const double wa = std::exp(sa - max_s);
        const double wb = sb_tb ? std::exp(sb - max_s) : 0.0;
        const double wu = wa + wb;
        w_sum += wu;
        w_sq += wu * wu;
        raw_sum += wa + wb;
        raw_sq += wa * wa + wb * wb;
        std::size_t p = 0;
        for (int i = 0; i < n; ++i) {
            const double nu = sb_tb ? wa * ta[i] + wb * sb_tb[i] : wa * ta[i];
            num[i] += nu;
            num_sq[i] += nu * nu;
            num_w[i] += nu * wu;
            for (int j = i + 1; j < n; ++j, ++p) {
                const double qu =
                    sb_tb ? wa * ta[i] * ta[j] + wb * sb_tb[i] * sb_tb[j] : wa * ta[i] * ta[j];
                q[p] += qu;
                q_sq[p] += qu * qu;
                q_w[p] += qu * wu;
            }
        }
    }

    void merge(const WeightedObsAccum& o) {
        if (o.max_s == -std::numeric_limits<double>::infinity()) return;
        double k = 1.0;
        if (o.max_s > max_s) {
            bump_max(o.max_s);
        } else {
            k = std::exp(o.max_s - max_s);
        }
        const double k2 = k * k;
        w_sum += o.w_sum * k;
        raw_sum += o.raw_sum * k;
        w_sq += o.w_sq * k2;
        raw_sq += o.raw_sq * k2;
        for (std::size_t i = 0; i < num.size(); ++i) {
            num[i] += o.num[i] * k;
            num_sq[i] += o.num_sq[i] * k2;
            num_w[i] += o.num_w[i] * k2;
        }
        for (std::size_t p = 0; p < q.size(); ++p) {
            q[p] += o.q[p] * k;
            q_sq[p] += o.q_sq[p] * k2;
            q_w[p] += o.q_w[p] * k2;
        }
    }
};

}  // namespace

ObservableEstimate formula_observables(const CouplingMatrix& g, double beta,
                                       const std::vector<double>& h, std::uint64_t samples,
                                       std::uint64_t seed, const EstimatorOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    check_inputs(g, beta, h, samples, opts);
    const int n = g.n();

    ObservableEstimate out;
    out.n = n;
    out.samples = samples;
    out.seed = seed;
    out.magnetizations.assign(n, 0.0);
    out.magnetization_errors.assign(n, 0.0);
    out.correlations.assign(static_cast<std::size_t>(n) * n, 1.0);
    out.correlation_errors.assign(static_cast<std::size_t>(n) * n, 0.0);

    if (beta == 0.0) {
        // spins decouple; the estimate is deterministic
        for (int i = 0; i < n; ++i) out.magnetizations[i] = odd_tanh(h[i]);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double c = out.magnetizations[i] * out.magnetizations[j];
                out.correlations[static_cast<std::size_t>(i) * n + j] = c;
                out.correlations[static_cast<std::size_t>(j) * n + i] = c;
            }
        out.ess = static_cast<double>(samples);
        out.elapsed_seconds = seconds_since(t0);
        return out;
    }

    const double sqrt_beta = std::sqrt(beta);
    const FieldSource src = make_field_source(g, seed, opts.sampler, beta);
    const std::uint64_t units = opts.antithetic ? samples / 2 : samples;

    std::vector<WeightedObsAccum> partial(static_cast<std::size_t>(opts.jobs),
                                          WeightedObsAccum(n));
    run_sharded(units, opts.jobs, [&](int worker, std::uint64_t begin, std::uint64_t end) {
        WeightedObsAccum& acc = partial[static_cast<std::size_t>(worker)];
        std::vector<double> x(n), ta(n), tb(n);
        for (std::uint64_t u = begin; u < end; ++u) {
            const double rho = src.draw(u, x);
            double scale = 1.0, log_w = 0.0;
            if (src.tilt) {
                const int k = detail::tilt_component(seed, u, 0);
                scale = detail::tilt_scale(k);
                log_w = detail::tilt_log_weight(scale * scale * rho, src.rank);
            }
            const double sb_scale = sqrt_beta * scale;
            KahanSum sa;
            for (int i = 0; i < n; ++i) {
                const double c = h[i] + sb_scale * x[i];
                ta[i] = odd_tanh(c);
                sa.add(log_cosh(c));
            }
            if (opts.antithetic) {
                KahanSum sb;
                for (int i = 0; i < n; ++i) {
                    const double c = h[i] - sb_scale * x[i];
                    tb[i] = odd_tanh(c);
                    sb.add(log_cosh(c));
                }
                acc.add_unit(sa.value() + log_w, ta.data(), tb.data(), sb.value() + log_w);
            } else {
                acc.add_unit(sa.value() + log_w, ta.data(), nullptr, 0.0);
            }
        }
    });

    WeightedObsAccum merged(n);
    for (const WeightedObsAccum& p : partial) merged.merge(p);

    if (!(merged.w_sum > 0.0) || !std::isfinite(merged.w_sum))
        throw NumericalError("observable weights are degenerate");

    const double w = merged.w_sum;
    auto finalize = [&](double numer, double numer_sq, double numer_w, double& value,
                        double& error) {
        value = numer / w;
        const double var = (numer_sq - 2.0 * value * numer_w + value * value * merged.w_sq) / (w * w);
        error = std::sqrt(std::max(var, 0.0));
    };

    for (int i = 0; i < n; ++i)
        finalize(merged.num[i], merged.num_sq[i], merged.num_w[i], out.magnetizations[i],
                 out.magnetization_errors[i]);
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++p) {
            double value = 0.0, error = 0.0;
            finalize(merged.q[p], merged.q_sq[p], merged.q_w[p], value, error);
            out.correlations[static_cast<std::size_t>(i) * n + j] = value;
            out.correlations[static_cast<std::size_t>(j) * n + i] = value;
            out.correlation_errors[static_cast<std::size_t>(i) * n + j] = error;
            out.correlation_errors[static_cast<std::size_t>(j) * n + i] = error;
        }

    out.ess = merged.raw_sum * merged.raw_sum / merged.raw_sq;
    out.low_ess_warning = out.ess < 10.0;
    out.elapsed_seconds = seconds_since(t0);
    return out;
}

ObservableEstimate formula_observables(const CouplingMatrix& g, double beta, double h,
                                       std::uint64_t samples, std::uint64_t seed,
                                       const EstimatorOptions& opts) {
    return formula_observables(g, beta, broadcast(h, g.n()), samples, seed, opts);
}

std::vector<EstimateResult> sweep(const CouplingMatrix& g, const std::vector<double>& beta_grid,
                                  const std::vector<double>& h, std::uint64_t samples,
                                  std::uint64_t seed, const EstimatorOptions& opts) {
    if (beta_grid.empty()) throw std::invalid_argument("beta grid must be nonempty");
    for (std::size_t k = 1; k < beta_grid.size(); ++k)
        if (!(beta_grid[k] > beta_grid[k - 1]))
            throw std::invalid_argument("beta grid must be strictly increasing");

    std::vector<EstimateResult> results;
    results.reserve(beta_grid.size());
    // identical seed per point: the same field samples serve the whole grid
    for (double beta : beta_grid)
        results.push_back(formula_free_energy(g, beta, h, samples, seed, opts));
    return results;
}

std::vector<EstimateResult> sweep(const CouplingMatrix& g, const std::vector<double>& beta_grid,
                                  double h, std::uint64_t samples, std::uint64_t seed,
                                  const EstimatorOptions& opts) {
    return sweep(g, beta_grid, broadcast(h, g.n()), samples, seed, opts);
}

}  // namespace babylon
