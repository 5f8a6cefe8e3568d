// Command-line front end: model generation, exact and estimated free
// energies, observables, beta sweeps, and the built-in verification suites.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "babylon/couplings.hpp"
#include "babylon/decomposition.hpp"
#include "babylon/estimator.hpp"
#include "babylon/gaussfield.hpp"
#include "babylon/numerics.hpp"
#include "babylon/oracle.hpp"
#include "babylon/pspin.hpp"

using json = nlohmann::ordered_json;
using namespace babylon;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 usage, 3 validation, 4 numerical, 5 verification failure
enum ExitCode { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4, kVerifyFailed = 5 };

int enum_cap_from_env() {
    if (const char* env = std::getenv("BABYLON_ENUM_CAP")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || cap < 1 || cap > 62)
            throw std::invalid_argument("BABYLON_ENUM_CAP must be an integer in [1, 62]");
        return static_cast<int>(cap);
    }
    return kDefaultEnumCap;
}

// "--h 0.3" is a scalar field; anything unparsable as a number is read as a
// per-site file with one value per line ('#' comments allowed)
std::vector<double> resolve_field(const std::string& arg, int n) {
    char* end = nullptr;
    const double v = std::strtod(arg.c_str(), &end);
    if (end != arg.c_str() && *end == '\0')
        return std::vector<double>(static_cast<std::size_t>(n), v);

    std::ifstream in(arg);
    if (!in) throw ValidationError("cannot open field file: " + arg);
    std::vector<double> h;
    std::string raw;
    long lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (const auto pos = raw.find('#'); pos != std::string::npos) raw.erase(pos);
        std::istringstream ls(raw);
        double x;
        if (ls >> x) {
            h.push_back(x);
            if (!(ls >> std::ws).eof()) throw ParseError("expected one value per line", lineno);
        }
    }
    if (h.size() != static_cast<std::size_t>(n))
        throw ValidationError("field file holds " + std::to_string(h.size()) +
                              " values, expected " + std::to_string(n));
    return h;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void emit(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot open output file: " + out_path);
    out << report.dump(2) << "\n";
}

json field_to_json(const std::vector<double>& h) {
    const bool constant = std::all_of(h.begin(), h.end(), [&](double v) { return v == h[0]; });
    if (constant && !h.empty()) return h[0];
    return h;
}

json matrix_to_json(const std::vector<double>& m, int n) {
    json rows = json::array();
    for (int i = 0; i < n; ++i) {
        json row = json::array();
        for (int j = 0; j < n; ++j) row.push_back(m[static_cast<std::size_t>(i) * n + j]);
        rows.push_back(std::move(row));
    }
    return rows;
}

json estimate_to_json(const EstimateResult& r, int n) {
    json j;
    j["value"] = r.value;
    j["value_per_site"] = r.value / n;
    j["std_error"] = r.std_error;
    j["samples"] = r.samples;
    j["seed"] = r.seed;
    j["ess"] = r.ess;
    j["bias_jackknife"] =
        std::isfinite(r.bias_jackknife) ? json(r.bias_jackknife) : json(nullptr);
    j["std_error_bootstrap"] =
        std::isfinite(r.std_error_bootstrap) ? json(r.std_error_bootstrap) : json(nullptr);
    j["low_ess_warning"] = r.low_ess_warning;
    j["elapsed_seconds"] = r.elapsed_seconds;
    return j;
}

struct CommonFlags {
    std::string couplings;
    double beta = 1.0;
    std::string h = "0";
    std::uint64_t samples = 1000000;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::string antithetic = "on";
    int bootstrap = 0;
    std::string sampler = "factorized";
    std::string out;
};

EstimatorOptions estimator_options(const CommonFlags& f) {
    EstimatorOptions opts;
    if (f.antithetic != "on" && f.antithetic != "off")
        throw std::invalid_argument("--antithetic takes on|off");
    opts.antithetic = f.antithetic == "on";
    opts.jobs = f.jobs;
    opts.bootstrap_resamples = f.bootstrap;
    if (f.sampler == "factorized")
        opts.sampler = SamplerKind::factorized;
    else if (f.sampler == "constructive")
        opts.sampler = SamplerKind::constructive;
    else
        throw std::invalid_argument("--sampler takes factorized|constructive");
    return opts;
}

int cmd_gen(const ModelSpec& spec_in, const std::string& dims_arg, const std::string& boundary_arg,
            const std::string& in_path, const std::string& out_path) {
    ModelSpec spec = spec_in;
    if (!dims_arg.empty()) {
        std::istringstream ls(dims_arg);
        std::string tok;
        while (std::getline(ls, tok, ',')) spec.dims.push_back(std::stoi(tok));
    }
    if (boundary_arg == "free")
        spec.boundary = Boundary::free;
    else if (boundary_arg == "periodic")
        spec.boundary = Boundary::periodic;
    else
        throw std::invalid_argument("--boundary takes free|periodic");
    spec.path = in_path;
    spec.validate();

    const auto g = generate(spec);
    save_couplings_file(g, out_path);

    json meta;
    meta["generator_version"] = kVersion;
    switch (spec.kind) {
        case ModelKind::sk:
            meta["model"] = "sk";
            break;
        case ModelKind::ea_lattice:
            meta["model"] = "ea";
            meta["dims"] = spec.dims;
            meta["boundary"] = boundary_arg;
            break;
        case ModelKind::hopfield:
            meta["model"] = "hopfield";
            meta["patterns"] = spec.patterns;
            break;
        case ModelKind::file:
            meta["model"] = "file";
            meta["source"] = spec.path;
            break;
    }
    meta["n"] = g.n();
    meta["seed"] = spec.seed;
    meta["edges"] = g.edges().size();
    std::ofstream side(out_path + ".meta.json");
    if (!side) throw ValidationError("cannot write metadata sidecar for " + out_path);
    side << meta.dump(2) << "\n";

    json report;
    report["command"] = "gen";
    report["out"] = out_path;
    report["n"] = g.n();
    report["edges"] = g.edges().size();
    report["seed"] = spec.seed;
    emit(report, "");
    return kOk;
}

int cmd_exact(const std::string& couplings, double beta, const std::string& h_arg, int jobs,
              const std::string& out_path) {
    const auto g = load_couplings_file(couplings);
    const auto h = resolve_field(h_arg, g.n());
    const OracleOptions opts{enum_cap_from_env(), jobs};

    const auto obs = exact_observables(g, beta, h, opts);
    json report;
    report["command"] = "exact";
    report["couplings"] = couplings;
    report["n"] = g.n();
    report["beta"] = beta;
    report["h"] = field_to_json(h);
    report["free_energy"] = obs.free_energy;
    report["free_energy_per_site"] = obs.free_energy / g.n();
    report["magnetizations"] = obs.magnetizations;
    report["correlations"] = matrix_to_json(obs.correlations, g.n());
    report["enum_cap"] = opts.cap;
    report["jobs"] = jobs;
    emit(report, out_path);
    return kOk;
}

int cmd_estimate(const CommonFlags& f) {
    const auto g = load_couplings_file(f.couplings);
    const auto h = resolve_field(f.h, g.n());
    const auto seed = resolve_seed(f.seed);
    const auto r = formula_free_energy(g, f.beta, h, f.samples, seed, estimator_options(f));

    json report;
    report["command"] = "estimate";
    report["couplings"] = f.couplings;
    report["n"] = g.n();
    report["beta"] = f.beta;
    report["h"] = field_to_json(h);
    report["antithetic"] = f.antithetic == "on";
    report["sampler"] = f.sampler;
    report.update(estimate_to_json(r, g.n()));
    emit(report, f.out);
    return kOk;
}

int cmd_observables(const CommonFlags& f) {
    const auto g = load_couplings_file(f.couplings);
    const auto h = resolve_field(f.h, g.n());
    const auto seed = resolve_seed(f.seed);
    const auto obs = formula_observables(g, f.beta, h, f.samples, seed, estimator_options(f));

    json report;
    report["command"] = "observables";
    report["couplings"] = f.couplings;
    report["n"] = g.n();
    report["beta"] = f.beta;
    report["h"] = field_to_json(h);
    report["antithetic"] = f.antithetic == "on";
    report["magnetizations"] = obs.magnetizations;
    report["magnetization_errors"] = obs.magnetization_errors;
    report["correlations"] = matrix_to_json(obs.correlations, g.n());
    report["correlation_errors"] = matrix_to_json(obs.correlation_errors, g.n());
    report["samples"] = obs.samples;
    report["seed"] = obs.seed;
    report["ess"] = obs.ess;
    report["low_ess_warning"] = obs.low_ess_warning;
    report["elapsed_seconds"] = obs.elapsed_seconds;
    emit(report, f.out);
    return kOk;
}

int cmd_sweep(const CommonFlags& f, double beta_min, double beta_max, int steps,
              const std::string& format) {
    if (steps < 1) throw std::invalid_argument("--steps must be >= 1");
    if (steps > 1 && !(beta_max > beta_min))
        throw std::invalid_argument("--beta-max must exceed --beta-min for steps > 1");

    const auto g = load_couplings_file(f.couplings);
    const auto h = resolve_field(f.h, g.n());
    const auto seed = resolve_seed(f.seed);

    std::vector<double> grid;
    for (int k = 0; k < steps; ++k)
        grid.push_back(steps == 1 ? beta_min
                                  : beta_min + (beta_max - beta_min) * k / (steps - 1));

    const auto rows = sweep(g, grid, h, f.samples, seed, estimator_options(f));

    if (format == "csv") {
        std::ostringstream csv;
        csv << "beta,f_per_site,std_error,ess\n";
        char buf[160];
        for (std::size_t k = 0; k < rows.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g\n", grid[k],
                          rows[k].value / g.n(), rows[k].std_error / g.n(), rows[k].ess);
            csv << buf;
        }
        if (f.out.empty()) {
            std::cout << csv.str();
        } else {
            std::ofstream out(f.out);
            if (!out) throw ValidationError("cannot open output file: " + f.out);
            out << csv.str();
        }
        return kOk;
    }
    if (format != "json") throw std::invalid_argument("--format takes json|csv");

    json report;
    report["command"] = "sweep";
    report["couplings"] = f.couplings;
    report["n"] = g.n();
    report["h"] = field_to_json(h);
    report["seed"] = seed;
    json points = json::array();
    for (std::size_t k = 0; k < rows.size(); ++k) {
        json p = estimate_to_json(rows[k], g.n());
        p.erase("elapsed_seconds");
        json row;
        row["beta"] = grid[k];
        row.update(p);
        points.push_back(std::move(row));
    }
    report["points"] = points;
    emit(report, f.out);
    return kOk;
}

int cmd_pspin3(const std::string& tensor, double beta, double h, std::uint64_t outer_samples,
               const std::optional<std::uint64_t>& seed_opt, bool exact, int jobs,
               const std::string& out_path) {
    const auto t = load_three_body_file(tensor);
    json report;
    report["command"] = "pspin3";
    report["tensor"] = tensor;
    report["n"] = t.n();
    report["beta"] = beta;
    report["h"] = h;
    if (exact) {
        const OracleOptions opts{enum_cap_from_env(), jobs};
        const double f = exact_free_energy_pspin3(t, beta, h, opts);
        report["free_energy"] = f;
        report["free_energy_per_site"] = f / t.n();
    } else {
        const auto seed = resolve_seed(seed_opt);
        const NestedOptions opts{enum_cap_from_env(), jobs};
        const auto r = nested_free_energy(t, beta, h, outer_samples, seed, opts);
        report["outer_samples"] = outer_samples;
        report.update(estimate_to_json(r, t.n()));
    }
    emit(report, out_path);
    return kOk;
}

// ---- verification suites -------------------------------------------------

struct SuiteResult {
    std::string name;
    int passed = 0;
    int total = 0;
};

SuiteResult verify_decomposition(std::uint64_t seed, int trials) {
    SuiteResult res{"decomposition-identity", 0, trials};
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + t % 9;
        const auto g = generate_sk(n, seed + 17 * static_cast<std::uint64_t>(t));
        const auto d = decompose(g);
        const double tol = 1e-10 * (1.0 + g.abs_sum());
        bool ok = true;
        for (std::uint64_t bits = 0; bits < (1ull << n) && ok; ++bits) {
            SpinConfig s = SpinConfig::all_up(n);
            for (int b = 0; b < n; ++b)
                if (bits & (1ull << b)) s.spins[b] = -1;
            ok = std::abs(hamiltonian_raw(g, s) - hamiltonian_decomposed(d, s)) <= tol;
        }
        if (ok) ++res.passed;
    }
    return res;
}

SuiteResult verify_covariance(std::uint64_t seed, int trials, std::uint64_t samples) {
    SuiteResult res{"covariance-equivalence", 0, trials};
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + t % 5;
        const auto g = generate_sk(n, seed + 31 * static_cast<std::uint64_t>(t));
        const auto c = build_covariance(g);
        FactorizedSampler fs(factorize(c), seed + 2 * t);
        ConstructiveSampler cs(sign_split(g), seed + 2 * t + 1);
        const auto mf = empirical_moments(
            [&](std::uint64_t m, std::span<double> out) { fs.sample(m, out); }, n, samples);
        const auto mc = empirical_moments(
            [&](std::uint64_t m, std::span<double> out) { cs.sample(m, out); }, n, samples);
        bool ok = true;
        for (int i = 0; i < n && ok; ++i)
            for (int j = 0; j < n && ok; ++j) {
                const double se = std::sqrt(
                    (c.at(i, i) * c.at(j, j) + c.at(i, j) * c.at(i, j)) /
                    static_cast<double>(samples));
                ok = std::abs(mf.cov_at(i, j) - c.at(i, j)) <= 5.0 * se &&
                     std::abs(mc.cov_at(i, j) - c.at(i, j)) <= 5.0 * se &&
                     std::abs(mf.cov_at(i, j) - mc.cov_at(i, j)) <= 7.0 * se * std::sqrt(2.0);
            }
        if (ok) ++res.passed;
    }
    return res;
}

SuiteResult verify_oracle_vs_formula(std::uint64_t seed, int trials, std::uint64_t samples,
                                     int jobs, bool inject_sign_flip) {
    SuiteResult res{"oracle-vs-formula", 0, trials};
    const double betas[] = {0.25, 0.5, 1.0};
    const double fields[] = {0.0, 0.3};
    for (int t = 0; t < trials; ++t) {
        const int n = 2 + t % 7;
        const double beta = betas[t % 3];
        const double h = fields[t % 2];
        const auto g = generate_sk(n, seed + 13 * static_cast<std::uint64_t>(t));
        EstimatorOptions opts;
        opts.jobs = jobs;
        auto r = formula_free_energy(g, beta, h, samples, seed + 1000 + t, opts);
        if (inject_sign_flip) r.value += beta * g.abs_sum();  // wrong constant sign
        const double exact = exact_free_energy(g, beta, h, {enum_cap_from_env(), jobs});
        if (std::abs(r.value - exact) <= 4.0 * std::max(r.std_error, 1e-14)) ++res.passed;
    }
    return res;
}

int cmd_verify(std::uint64_t seed, int trials, std::uint64_t samples, int jobs,
               bool inject_sign_flip) {
    if (trials < 1) throw std::invalid_argument("--trials must be >= 1");
    const SuiteResult suites[] = {
        verify_decomposition(seed, trials),
        verify_covariance(seed, trials, samples),
        verify_oracle_vs_formula(seed, trials, samples, jobs, inject_sign_flip),
    };
    bool all_ok = true;
    for (const auto& s : suites) {
        const bool ok = s.passed == s.total;
        all_ok = all_ok && ok;
        std::cout << s.name << ": " << (ok ? "pass " : "FAIL ") << s.passed << "/" << s.total
                  << "\n";
    }
    return all_ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact Gaussian-integral free energies for Ising-type spin systems"};
    app.set_help_flag("--help", "print this help and exit");  // frees -h / --h for the field
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    const auto make_sub = [&](const char* name, const char* desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->set_help_flag("--help", "print this help and exit");
        return sub;
    };

    // gen
    auto* gen = make_sub("gen", "generate a coupling file plus metadata sidecar");
    ModelSpec spec;
    std::string model = "sk", dims_arg, boundary_arg = "free", in_path, gen_out;
    gen->add_option("--model", model, "sk|ea|hopfield|file");
    gen->add_option("--n", spec.n, "number of spins (sk, hopfield)");
    gen->add_option("--dims", dims_arg, "lattice extents, e.g. 3,3 (ea)");
    gen->add_option("--boundary", boundary_arg, "free|periodic (ea)");
    gen->add_option("--patterns", spec.patterns, "pattern count (hopfield)");
    gen->add_option("--seed", spec.seed, "generator seed");
    gen->add_option("--in", in_path, "source file (model=file)");
    gen->add_option("--out", gen_out, "output coupling file")->required();

    auto add_common = [&](CLI::App* cmd, CommonFlags& f, bool with_sampling) {
        cmd->add_option("--couplings", f.couplings, "coupling file")->required();
        cmd->add_option("--beta", f.beta, "inverse temperature");
        cmd->add_option("--h", f.h, "external field: scalar or per-site file");
        cmd->add_option("--jobs", f.jobs, "worker threads");
        cmd->add_option("--out", f.out, "write the report here instead of stdout");
        if (with_sampling) {
            cmd->add_option("--samples", f.samples, "Monte Carlo sample count");
            cmd->add_option("--seed", f.seed, "sampling seed (generated and printed if omitted)");
            cmd->add_option("--antithetic", f.antithetic, "on|off");
            cmd->add_option("--bootstrap", f.bootstrap, "bootstrap resamples for the error");
            cmd->add_option("--sampler", f.sampler, "factorized|constructive");
        }
    };

    auto* exact = make_sub("exact", "enumerate the free energy and observables");
    CommonFlags fe;
    add_common(exact, fe, false);

    auto* estimate = make_sub("estimate", "Monte Carlo free energy via the field formula");
    CommonFlags fm;
    add_common(estimate, fm, true);

    auto* observables = make_sub("observables", "Monte Carlo magnetizations and correlations");
    CommonFlags fo;
    add_common(observables, fo, true);

    auto* sw = make_sub("sweep", "free energy across a beta grid");
    CommonFlags fs;
    double beta_min = 0.0, beta_max = 1.0;
    int steps = 1;
    std::string format = "csv";
    add_common(sw, fs, true);
    sw->add_option("--beta-min", beta_min, "grid start")->required();
    sw->add_option("--beta-max", beta_max, "grid end");
    sw->add_option("--steps", steps, "grid points")->required();
    sw->add_option("--format", format, "csv|json");

    auto* pspin3 = make_sub("pspin3", "3-spin free energy (nested estimate or exact)");
    std::string tensor, ps_out;
    double ps_beta = 1.0, ps_h = 0.0;
    std::uint64_t outer_samples = 100000;
    std::optional<std::uint64_t> ps_seed;
    bool ps_exact = false;
    int ps_jobs = 1;
    pspin3->add_option("--tensor", tensor, "3-body coupling file")->required();
    pspin3->add_option("--beta", ps_beta, "inverse temperature");
    pspin3->add_option("--h", ps_h, "scalar external field");
    pspin3->add_option("--outer-samples", outer_samples, "auxiliary Gaussian draws");
    pspin3->add_option("--seed", ps_seed, "sampling seed");
    pspin3->add_flag("--exact", ps_exact, "enumerate instead of estimating");
    pspin3->add_option("--jobs", ps_jobs, "worker threads");
    pspin3->add_option("--out", ps_out, "write the report here instead of stdout");

    auto* verify = make_sub("verify", "run the built-in verification suites");
    std::uint64_t v_seed = 12345;
    int v_trials = 20, v_jobs = 1;
    std::uint64_t v_samples = 100000;
    bool inject_sign_flip = false;
    verify->add_option("--seed", v_seed, "suite seed");
    verify->add_option("--trials", v_trials, "instances per suite");
    verify->add_option("--samples", v_samples, "Monte Carlo samples per instance");
    verify->add_option("--jobs", v_jobs, "worker threads");
    verify->add_flag("--inject-sign-flip", inject_sign_flip)->group("");  // test hook

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (gen->parsed()) {
            if (model == "sk")
                spec.kind = ModelKind::sk;
            else if (model == "ea")
                spec.kind = ModelKind::ea_lattice;
            else if (model == "hopfield")
                spec.kind = ModelKind::hopfield;
            else if (model == "file")
                spec.kind = ModelKind::file;
            else
                throw std::invalid_argument("--model takes sk|ea|hopfield|file");
            return cmd_gen(spec, dims_arg, boundary_arg, in_path, gen_out);
        }
        if (exact->parsed()) return cmd_exact(fe.couplings, fe.beta, fe.h, fe.jobs, fe.out);
        if (estimate->parsed()) return cmd_estimate(fm);
        if (observables->parsed()) return cmd_observables(fo);
        if (sw->parsed()) return cmd_sweep(fs, beta_min, beta_max, steps, format);
        if (pspin3->parsed())
            return cmd_pspin3(tensor, ps_beta, ps_h, outer_samples, ps_seed, ps_exact, ps_jobs,
                              ps_out);
        if (verify->parsed())
            return cmd_verify(v_seed, v_trials, v_samples, v_jobs, inject_sign_flip);
        return kUsage;
    } catch (const CapExceededError& e) {
        std::cerr << "error: " << e.what()
                  << "\nhint: use 'babylon estimate' for systems beyond the enumeration cap\n";
        return kValidation;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
