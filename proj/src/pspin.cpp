#include "babylon/pspin.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "babylon/numerics.hpp"
#include "babylon/rng.hpp"

namespace babylon {

namespace {
constexpr double kLn2 = 0.6931471805599453094172321214581766;
constexpr std::uint64_t kRefreshInterval = 4096;
}  // namespace

ThreeBodyCouplings ThreeBodyCouplings::from_triples(int n, std::vector<Triple> triples) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::erase_if(triples, [](const Triple& t) { return t.w == 0.0; });
    for (const Triple& t : triples) {
        if (t.i < 0 || t.k >= n || t.i >= t.j || t.j >= t.k)
            throw ValidationError("triple (" + std::to_string(t.i) + ", " + std::to_string(t.j) +
                                  ", " + std::to_string(t.k) +
                                  ") violates 0 <= i < j < k < n with n=" + std::to_string(n));
        if (!std::isfinite(t.w)) throw ValidationError("3-body coupling is not finite");
    }
    std::sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) {
        return std::tuple(a.i, a.j, a.k) < std::tuple(b.i, b.j, b.k);
    });
    for (std::size_t t = 1; t < triples.size(); ++t)
        if (triples[t - 1].i == triples[t].i && triples[t - 1].j == triples[t].j &&
            triples[t - 1].k == triples[t].k)
            throw ValidationError("duplicate triple (" + std::to_string(triples[t].i) + ", " +
                                  std::to_string(triples[t].j) + ", " +
                                  std::to_string(triples[t].k) + ")");

    ThreeBodyCouplings out;
    out.n_ = n;
    out.triples_ = std::move(triples);
    KahanSum acc;
    for (const Triple& t : out.triples_) acc.add(std::abs(t.w));
    out.abs_sum_ = acc.value();
    return out;
}

std::pair<double, double> babylonian_triple(int si, int sj, int sk) {
    if ((si != 1 && si != -1) || (sj != 1 && sj != -1) || (sk != 1 && sk != -1))
        throw std::invalid_argument("spins must be +-1");
    const double p = si + sj * sk;
    const double m = si - sj * sk;
    return {0.5 * p * p - 1.0, 0.5 * m * m - 1.0};
}

namespace {

// Shared by the public one-draw reduction (scale 1) and the tilted nested
// estimator. rho_used collects |z|^2 over the auxiliary components a triple
// actually consumes (one per triple: z0 for g+ > 0, z1 for g- > 0).
ReducedInstance reduce_scaled(const ThreeBodyCouplings& t, double beta, std::uint64_t seed,
                              std::uint64_t aux_index, double scale, double* rho_used) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    const int n = t.n();
    std::vector<double> field(static_cast<std::size_t>(n), 0.0);
    std::map<std::pair<int, int>, double> pair_acc;
    KahanSum constant;
    double rho = 0.0;

    for (std::size_t idx = 0; idx < t.triples().size(); ++idx) {
        const Triple& tr = t.triples()[idx];
        const double gp = std::max(tr.w, 0.0);
        const double gm = std::max(-tr.w, 0.0);
        const auto z = rng::normal_pair(seed, rng::Domain::pspin_aux, aux_index, idx);
        rho += (gp > 0.0) ? z.z0 * z.z0 : z.z1 * z.z1;
        // exp(beta g+ (s_i + s_j s_k)^2 / 2) = E exp(sqrt(beta g+) (s_i + s_j s_k) Z)
        const double a = std::sqrt(beta * gp) * (scale * z.z0);
        const double b = std::sqrt(beta * gm) * (scale * z.z1);
        field[tr.i] += a + b;
        pair_acc[{tr.j, tr.k}] += a - b;
        constant.add(-beta * (gp + gm));
    }
    if (rho_used) *rho_used = rho;

    std::vector<Edge> edges;
    edges.reserve(pair_acc.size());
    for (const auto& [jk, w] : pair_acc)
        if (w != 0.0) edges.push_back({jk.first, jk.second, w});

    return {CouplingMatrix::from_edges(n, std::move(edges)), std::move(field), constant.value()};
}

}  // namespace

ReducedInstance reduce_one_level(const ThreeBodyCouplings& t, double beta, std::uint64_t seed,
                                 std::uint64_t aux_index) {
    return reduce_scaled(t, beta, seed, aux_index, 1.0, nullptr);
}

double exact_free_energy_pspin3(const ThreeBodyCouplings& t, double beta, double h,
                                const OracleOptions& opts) {
    const int n = t.n();
    if (n > opts.cap) throw CapExceededError(n, opts.cap);
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (!std::isfinite(h)) throw std::invalid_argument("field must be finite");
    if (opts.jobs < 1) throw std::invalid_argument("jobs must be >= 1");

    // triple indices touching each site, for O(degree) flip updates
    std::vector<std::vector<int>> site_triples(static_cast<std::size_t>(n));
    for (std::size_t idx = 0; idx < t.triples().size(); ++idx) {
        const Triple& tr = t.triples()[idx];
        site_triples[tr.i].push_back(static_cast<int>(idx));
        site_triples[tr.j].push_back(static_cast<int>(idx));
        site_triples[tr.k].push_back(static_cast<int>(idx));
    }

    const std::uint64_t total = 1ull << n;
    std::vector<LogSumExp> partial(static_cast<std::size_t>(opts.jobs));
    run_sharded(total, opts.jobs, [&](int worker, std::uint64_t begin, std::uint64_t end) {
        if (begin == end) return;
        std::vector<int> sigma(n, 1);
        const std::uint64_t gray = begin ^ (begin >> 1);
        for (int b = 0; b < n; ++b)
            if (gray & (1ull << b)) sigma[b] = -1;

        double ham = 0.0, field_sum = 0.0;
        const auto refresh = [&] {
            KahanSum hacc;
            for (const Triple& tr : t.triples())
                hacc.add(tr.w * sigma[tr.i] * sigma[tr.j] * sigma[tr.k]);
            ham = hacc.value();
            KahanSum facc;
            for (int i = 0; i < n; ++i) facc.add(h * sigma[i]);
            field_sum = facc.value();
        };
        refresh();

        LogSumExp& lse = partial[static_cast<std::size_t>(worker)];
        for (std::uint64_t m = begin; m < end; ++m) {
            lse.add(beta * ham + field_sum);
            if (m + 1 < end) {
                const int k = std::countr_zero(m + 1);
                for (int idx : site_triples[k]) {
                    const Triple& tr = t.triples()[idx];
                    ham -= 2.0 * tr.w * sigma[tr.i] * sigma[tr.j] * sigma[tr.k];
                }
                field_sum -= 2.0 * h * sigma[k];
                sigma[k] = -sigma[k];
                if ((m + 1 - begin) % kRefreshInterval == 0) refresh();
            }
        }
    });

    LogSumExp merged;
    for (const LogSumExp& p : partial) merged.merge(p);
    const double result = merged.log_sum() - n * kLn2;
    if (!std::isfinite(result)) throw NumericalError("enumeration produced a non-finite result");
    return result;
}

EstimateResult nested_free_energy(const ThreeBodyCouplings& t, double beta, double h,
                                  std::uint64_t outer_samples, std::uint64_t seed,
                                  const NestedOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    if (outer_samples < 2) throw std::invalid_argument("outer_samples must be >= 2");
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
    if (!std::isfinite(h)) throw std::invalid_argument("field must be finite");
    const int n = t.n();
    if (n > opts.inner_cap) throw CapExceededError(n, opts.inner_cap);

    EstimateResult r;
    r.samples = outer_samples;
    r.seed = seed;

    if (beta == 0.0 || t.triples().empty()) {
        // no interactions left: spins decouple and the value is deterministic
        KahanSum acc;
        for (int i = 0; i < n; ++i) acc.add(log_cosh(h));
        r.value = acc.value();
        r.std_error = 0.0;
        r.ess = static_cast<double>(outer_samples);
        r.bias_jackknife = 0.0;
        r.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }

    const OracleOptions inner{opts.inner_cap, 1};
    const int aux_dims = static_cast<int>(t.triples().size());
    std::vector<double> inner_log_z(outer_samples);
    run_sharded(outer_samples, opts.jobs, [&](int, std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t m = begin; m < end; ++m) {
            // same defensive scale mixture as the two-body estimator, applied
            // to the auxiliary Gaussians (the outer integrand is heavy-tailed)
            const double scale = detail::tilt_scale(detail::tilt_component(seed, m, 1));
            double rho = 0.0;
            ReducedInstance red = reduce_scaled(t, beta, seed, m, scale, &rho);
            std::vector<double> field = std::move(red.effective_field);
            for (double& v : field) v += h;
            // the conditioned problem is two-body at unit temperature
            inner_log_z[m] = exact_free_energy(red.effective_pair, 1.0, field, inner) +
                             detail::tilt_log_weight(scale * scale * rho, aux_dims);
        }
    });
    // the -beta sum_t |g_ijk| constant is identical across draws
    KahanSum const_acc;
    for (const Triple& tr : t.triples()) const_acc.add(-beta * std::abs(tr.w));
    const double constant = const_acc.value();

    const auto st = detail::log_mean_stats(inner_log_z, /*antithetic=*/false);
    r.value = st.log_mean + constant;
    r.std_error = st.std_error;
    r.ess = st.ess;
    r.bias_jackknife = st.bias_jackknife;
    r.low_ess_warning = st.ess < 10.0;
    if (!std::isfinite(r.value) || !std::isfinite(r.std_error))
        throw NumericalError("nested estimate is not finite");
    r.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

namespace {

std::string content_of(const std::string& raw) {
    std::string line = raw;
    if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = line.find_last_not_of(" \t\r\n");
    return line.substr(first, last - first + 1);
}

}  // namespace

ThreeBodyCouplings load_three_body(std::istream& in) {
    std::string raw;
    long lineno = 0;
    long n = -1;
    std::vector<Triple> triples;

    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = content_of(raw);
        if (line.empty()) continue;

        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> n) || !(ls >> std::ws).eof() || n < 1)
                throw ParseError("expected the number of spins (a positive integer)", lineno);
            continue;
        }
        long i = 0, j = 0, k = 0;
        double v = 0.0;
        if (!(ls >> i >> j >> k >> v) || !(ls >> std::ws).eof())
            throw ParseError("expected \"i j k value\"", lineno);
        if (!std::isfinite(v)) throw ParseError("coupling value must be finite", lineno);
        if (i < 0 || k >= n || i >= j || j >= k)
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": triple must satisfy 0 <= i < j < k < n");
        triples.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                           static_cast<std::int32_t>(k), v});
    }
    if (n < 0) throw ParseError("empty 3-body couplings stream", std::max(lineno, 1L));
    return ThreeBodyCouplings::from_triples(static_cast<int>(n), std::move(triples));
}

ThreeBodyCouplings load_three_body_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open 3-body couplings file: " + path);
    return load_three_body(in);
}

void save_three_body(const ThreeBodyCouplings& t, std::ostream& out) {
    out << t.n() << "\n";
    char buf[80];
    for (const Triple& tr : t.triples()) {
        std::snprintf(buf, sizeof(buf), "%d %d %d %.17g\n", tr.i, tr.j, tr.k, tr.w);
        out << buf;
    }
}

void save_three_body_file(const ThreeBodyCouplings& t, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    save_three_body(t, out);
    if (!out) throw ValidationError("failed writing 3-body couplings file: " + path);
}

}  // namespace babylon
