#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "babylon/couplings.hpp"
#include "babylon/gaussfield.hpp"

namespace babylon {

enum class SamplerKind { factorized, constructive };

struct EstimatorOptions {
    bool antithetic = true;  // pair every field sample with its negation
    int jobs = 1;
    int bootstrap_resamples = 0;  // 0 disables the bootstrap error
    SamplerKind sampler = SamplerKind::factorized;
};

struct EstimateResult {
    double value = 0.0;
    double std_error = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0;

    // honesty diagnostics for the exponential-in-n variance hazard
    double ess = 0.0;             // (sum w)^2 / sum w^2 over raw samples
    double bias_jackknife = 0.0;  // leave-one-out estimate of the log-of-mean bias
    double std_error_bootstrap = std::numeric_limits<double>::quiet_NaN();
    bool low_ess_warning = false;
};

// Monte Carlo evaluation of
//   N f = log E exp( sum_i log cosh(h_i + sqrt(beta) X_i) ) - (beta/2) sum_{ij} |g_ij|
// with the max-shifted log of the sample mean. The value is a pure function
// of (seed, samples, flags); worker count never changes it.
EstimateResult formula_free_energy(const CouplingMatrix& g, double beta,
                                   const std::vector<double>& h, std::uint64_t samples,
                                   std::uint64_t seed, const EstimatorOptions& opts = {});
EstimateResult formula_free_energy(const CouplingMatrix& g, double beta, double h,
                                   std::uint64_t samples, std::uint64_t seed,
                                   const EstimatorOptions& opts = {});

struct ObservableEstimate {
    int n = 0;
    std::vector<double> magnetizations;
    std::vector<double> magnetization_errors;
    std::vector<double> correlations;  // n*n, unit diagonal with zero error
    std::vector<double> correlation_errors;
    double ess = 0.0;
    bool low_ess_warning = false;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    double elapsed_seconds = 0.0;

    double corr_at(int i, int j) const { return correlations[static_cast<std::size_t>(i) * n + j]; }
    double corr_err_at(int i, int j) const {
        return correlation_errors[static_cast<std::size_t>(i) * n + j];
    }
};

// Conditionally on X the spins are independent with mean tanh(h_i + sqrt(beta) X_i),
// so magnetizations and pair correlations are self-normalized averages of
// tanh products weighted by exp(S). Errors follow the standard
// self-normalized importance-sampling variance formula.
ObservableEstimate formula_observables(const CouplingMatrix& g, double beta,
                                       const std::vector<double>& h, std::uint64_t samples,
                                       std::uint64_t seed, const EstimatorOptions& opts = {});
ObservableEstimate formula_observables(const CouplingMatrix& g, double beta, double h,
                                       std::uint64_t samples, std::uint64_t seed,
                                       const EstimatorOptions& opts = {});

// One estimate per beta, reusing the same field samples across the grid
// (the field only ever enters through sqrt(beta) X).
std::vector<EstimateResult> sweep(const CouplingMatrix& g, const std::vector<double>& beta_grid,
                                  const std::vector<double>& h, std::uint64_t samples,
                                  std::uint64_t seed, const EstimatorOptions& opts = {});
std::vector<EstimateResult> sweep(const CouplingMatrix& g, const std::vector<double>& beta_grid,
                                  double h, std::uint64_t samples, std::uint64_t seed,
                                  const EstimatorOptions& opts = {});

namespace detail {

// Defensive scale mixture for importance sampling in the space of the
// standard normals behind a field or auxiliary draw. Component choice is
// counter-based so draws stay pure functions of (seed, unit).
int tilt_component(std::uint64_t seed, std::uint64_t unit, std::uint64_t salt);
double tilt_scale(int component);
// log( N(z; 0, I) / sum_k pi_k N(z; 0, s_k^2 I) ) given rho = |z|^2 in dims
// dimensions; z is the proposal draw (already scaled).
double tilt_log_weight(double rho, int dims);

struct LogMeanStats {
    double log_mean = 0.0;
    double std_error = 0.0;
    double bias_jackknife = 0.0;
    double ess = 0.0;
    double max_s = 0.0;
    std::vector<double> unit_weights;  // exp(S_u - max_s), one per independent unit
};

// Statistics of log( (1/M) sum_m exp(S_m) ). With antithetic pairing the
// independent unit is the consecutive (even, odd) pair.
LogMeanStats log_mean_stats(const std::vector<double>& s, bool antithetic);

double bootstrap_std_error(const std::vector<double>& unit_weights, int resamples,
                           std::uint64_t seed);

}  // namespace detail

}  // namespace babylon
