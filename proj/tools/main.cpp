// capwater: capacity, optimal spectra, coherent rate and gain of bosonic
// additive-noise channels with correlated Gaussian noise.
//
// Subcommands: one-mode, finite, spectral, gain, input-cov, sweep, verify.
// Output is CSV (default) or JSON with 12 significant digits; errors go to
// stderr with a machine-readable kind and map to exit codes 1 (domain or
// model) and 2 (convergence).

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capwater/capwater.hpp"
#include "capwater/model_io.hpp"

namespace {

using capwater::SolverTolerances;

// ---------------------------------------------------------------------------
// Records and serialization

using Value = std::variant<double, long long, std::string, bool>;

struct Record {
    std::vector<std::pair<std::string, Value>> fields;

    void add(std::string name, double v) { fields.emplace_back(std::move(name), v); }
    void add(std::string name, int v) {
        fields.emplace_back(std::move(name), static_cast<long long>(v));
    }
    void add(std::string name, bool v) { fields.emplace_back(std::move(name), v); }
    void add(std::string name, std::string v) {
        fields.emplace_back(std::move(name), std::move(v));
    }
};

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string to_csv(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return format_double(*d);
    if (const auto* i = std::get_if<long long>(&v)) return std::to_string(*i);
    if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::get<std::string>(v);
}

std::string to_json_value(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v))
        return "\"" + json_escape(*s) + "\"";
    return to_csv(v);
}

std::string serialize(const std::vector<std::string>& columns,
                      const std::vector<Record>& records,
                      const std::string& format) {
    std::string out;
    if (format == "csv") {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i];
        }
        out += '\n';
        for (const auto& r : records) {
            for (std::size_t i = 0; i < r.fields.size(); ++i) {
                if (i) out += ',';
                out += to_csv(r.fields[i].second);
            }
            out += '\n';
        }
        return out;
    }
    out += "[\n";
    for (std::size_t k = 0; k < records.size(); ++k) {
        out += "  {";
        const auto& r = records[k];
        for (std::size_t i = 0; i < r.fields.size(); ++i) {
            if (i) out += ", ";
            out += "\"" + r.fields[i].first + "\": " + to_json_value(r.fields[i].second);
        }
        out += k + 1 < records.size() ? "},\n" : "}\n";
    }
    out += "]\n";
    return out;
}

// Whole payload at once; files go through temp-and-rename so a failure never
// leaves a partial table behind.
void write_output(const std::string& payload, const std::string& path) {
    if (path.empty()) {
        std::fwrite(payload.data(), 1, payload.size(), stdout);
        return;
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw capwater::error("cannot open output file: " + tmp);
        out << payload;
        if (!out) throw capwater::error("failed writing output file: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw capwater::error("cannot rename output into place: " + path);
    }
}

// ---------------------------------------------------------------------------
// Sweep grids and the worker pool

std::vector<double> parse_grid(const std::string& spec, bool log_spaced) {
    double lo = 0.0, hi = 0.0;
    int steps = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &steps) != 3 || steps < 1)
        throw capwater::domain_error("bad sweep grid \"" + spec +
                                     "\" (expected lo:hi:steps)");
    std::vector<double> grid(steps);
    if (steps == 1) {
        grid[0] = lo;
        return grid;
    }
    if (log_spaced) {
        if (!(lo > 0.0) || !(hi > 0.0))
            throw capwater::domain_error("log grid needs positive endpoints");
        const double llo = std::log(lo), lhi = std::log(hi);
        for (int i = 0; i < steps; ++i)
            grid[i] = std::exp(llo + (lhi - llo) * i / (steps - 1));
    } else {
        for (int i = 0; i < steps; ++i) grid[i] = lo + (hi - lo) * i / (steps - 1);
    }
    return grid;
}

int worker_count() {
    if (const char* env = std::getenv("CAPWATER_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<int>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Run f(i) for i in [0, n); results land in input order, first failure
// rethrows after the pool drains.
template <typename F>
void parallel_for(std::size_t n, F&& f) {
    const std::size_t workers =
        std::min(static_cast<std::size_t>(worker_count()), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Subcommand runners

struct Table {
    std::vector<std::string> columns;
    std::vector<Record> records;
};

Table run_one_mode(double gq, double gp, double nbar, const SolverTolerances& tol) {
    const capwater::OneModeNoise noise(gq, gp);
    const auto sol =
        capwater::solve_one_mode(noise, capwater::InputEnergy::from_nbar(nbar), tol);
    Table t;
    t.columns = {"gq", "gp", "nbar", "lambda", "regime", "gin_q", "gin_p",
                 "gmod_q", "gmod_p", "mu", "nu_bar", "nu_out", "chi"};
    Record r;
    r.add("gq", gq);
    r.add("gp", gp);
    r.add("nbar", nbar);
    r.add("lambda", sol.lambda());
    r.add("regime", std::string(capwater::to_string(sol.regime)));
    r.add("gin_q", sol.gin_q);
    r.add("gin_p", sol.gin_p);
    r.add("gmod_q", sol.gmod_q);
    r.add("gmod_p", sol.gmod_p);
    r.add("mu", sol.mu);
    r.add("nu_bar", sol.nu_bar);
    r.add("nu_out", sol.nu_out);
    r.add("chi", sol.chi);
    t.records.push_back(std::move(r));
    return t;
}

capwater::ModeEnsemble ensemble_from_model(const capwater::NoiseModel& model,
                                           int n_modes) {
    if (const auto* mm = std::get_if<capwater::ModesModel>(&model.variant()))
        return capwater::ModeEnsemble(mm->modes);
    if (const auto* gm = std::get_if<capwater::GaussMarkovModel>(&model.variant())) {
        const auto blocks = capwater::gauss_markov_blocks(n_modes, gm->N, gm->phi);
        return capwater::diagonalize_noise(blocks).first;
    }
    throw capwater::model_error(
        "finite: model must be of type \"modes\" or \"gauss_markov\"");
}

Table run_finite(const capwater::NoiseModel& model, int n_modes, double nbar,
                 double lambda_total, const SolverTolerances& tol) {
    const auto ens = ensemble_from_model(model, n_modes);
    const double n = static_cast<double>(ens.size());
    const double lambda = lambda_total > 0.0 ? lambda_total : n * (2.0 * nbar + 1.0);
    const auto sol = capwater::solve_mu(ens, lambda, tol);
    Table t;
    t.columns = {"mode", "set", "gq", "gp", "lambda_i", "gin_q", "gin_p",
                 "gmod_q", "gmod_p", "chi", "mu", "c1", "c1_per_mode"};
    const auto set_name = [&](std::size_t i) -> std::string {
        const auto in = [&](const std::vector<int>& v) {
            return std::find(v.begin(), v.end(), static_cast<int>(i)) != v.end();
        };
        if (in(sol.partition.n3)) return "N3";
        if (in(sol.partition.n2)) return "N2";
        return "N1";
    };
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& m = ens.modes[i];
        const auto& s = sol.per_mode[i];
        Record r;
        r.add("mode", static_cast<int>(i));
        r.add("set", set_name(i));
        r.add("gq", m.swapped ? m.gp : m.gq);
        r.add("gp", m.swapped ? m.gq : m.gp);
        r.add("lambda_i", s.lambda());
        r.add("gin_q", s.gin_q);
        r.add("gin_p", s.gin_p);
        r.add("gmod_q", s.gmod_q);
        r.add("gmod_p", s.gmod_p);
        r.add("chi", s.chi);
        r.add("mu", sol.mu);
        r.add("c1", sol.c1);
        r.add("c1_per_mode", sol.c1_per_mode);
        t.records.push_back(std::move(r));
    }
    return t;
}

Table run_spectral(const capwater::NoiseModel& model, double nbar,
                   const SolverTolerances& tol, bool spectra) {
    const auto sol = capwater::solve_mu_spectral(model, nbar, tol);
    Table t;
    if (!spectra) {
        t.columns = {"nbar", "lambda", "mu", "capacity", "global_wf", "grid_size"};
        Record r;
        r.add("nbar", nbar);
        r.add("lambda", sol.lambda());
        r.add("mu", sol.mu);
        r.add("capacity", sol.capacity);
        r.add("global_wf", sol.rate_is_global_wf);
        r.add("grid_size", tol.grid_size);
        t.records.push_back(std::move(r));
        return t;
    }
    t.columns = {"x", "weight", "set", "genv_q", "genv_p", "gin_q", "gin_p",
                 "gmod_q", "gmod_p"};
    for (std::size_t j = 0; j < sol.x.size(); ++j) {
        Record r;
        r.add("x", sol.x[j]);
        r.add("weight", sol.w[j]);
        r.add("set", std::string(capwater::to_string(sol.set_label[j])));
        r.add("genv_q", sol.genv_q[j]);
        r.add("genv_p", sol.genv_p[j]);
        r.add("gin_q", sol.gin_q[j]);
        r.add("gin_p", sol.gin_p[j]);
        r.add("gmod_q", sol.gmod_q[j]);
        r.add("gmod_p", sol.gmod_p[j]);
        t.records.push_back(std::move(r));
    }
    return t;
}

Record gain_record(const capwater::GainPoint& pt) {
    Record r;
    r.add("nbar", pt.nbar);
    r.add("snr", pt.snr);
    r.add("phi", pt.phi);
    r.add("capacity", pt.capacity);
    r.add("rate", pt.rate);
    r.add("gain", pt.gain);
    return r;
}

Table run_gain(const capwater::NoiseModel& model, const std::vector<double>& nbars,
               double snr, bool two_mode, const SolverTolerances& tol) {
    Table t;
    t.columns = {"nbar", "snr", "phi", "capacity", "rate", "gain"};
    t.records.resize(nbars.size());
    const auto* gm = std::get_if<capwater::GaussMarkovModel>(&model.variant());
    if ((snr > 0.0 || two_mode) && gm == nullptr)
        throw capwater::model_error(
            "gain: --snr and --two-mode need a gauss_markov model");
    parallel_for(nbars.size(), [&](std::size_t i) {
        const double nbar = nbars[i];
        capwater::GainPoint pt;
        if (two_mode) {
            const double N = snr > 0.0 ? nbar / snr : gm->N;
            pt = capwater::two_mode_gain(N, gm->phi, nbar, tol);
        } else if (snr > 0.0) {
            pt = capwater::gain(
                capwater::NoiseModel::gauss_markov(nbar / snr, gm->phi), nbar, tol);
            pt.snr = snr;
        } else {
            pt = capwater::gain(model, nbar, tol);
        }
        t.records[i] = gain_record(pt);
    });
    return t;
}

Table run_sweep(const capwater::NoiseModel& model, const std::vector<double>& nbars,
                const SolverTolerances& tol) {
    Table t;
    t.columns = {"nbar", "lambda", "mu", "capacity", "rate", "gain", "global_wf"};
    t.records.resize(nbars.size());
    parallel_for(nbars.size(), [&](std::size_t i) {
        const double nbar = nbars[i];
        const auto sol = capwater::solve_mu_spectral(model, nbar, tol);
        const double rate = capwater::coherent_rate_spectral(model, nbar, tol);
        Record r;
        r.add("nbar", nbar);
        r.add("lambda", sol.lambda());
        r.add("mu", sol.mu);
        r.add("capacity", sol.capacity);
        r.add("rate", rate);
        r.add("gain", rate > 0.0 ? sol.capacity / rate : 1.0);
        r.add("global_wf", sol.rate_is_global_wf);
        t.records[i] = std::move(r);
    });
    return t;
}

Table run_input_cov(const capwater::NoiseModel& model, double nbar, int k_max,
                    const SolverTolerances& tol) {
    const auto sol = capwater::solve_mu_spectral(model, nbar, tol);
    const auto cov = capwater::input_fourier_coefficients(sol, k_max);
    const auto witness = capwater::entanglement_witness(sol);

    // Truncation report: worst relative reconstruction error over the nodes.
    double worst = 0.0;
    for (std::size_t j = 0; j < sol.x.size(); j += 17) {
        const double rec = capwater::toeplitz_reconstruct(cov.q_diagonals, sol.x[j]);
        worst = std::max(worst, std::abs(rec - sol.gin_q[j]) /
                                    std::max(sol.gin_q[j], 1e-12));
    }
    std::fprintf(stderr,
                 "input-cov: det0=%s entangled=%s truncation_rel_err=%s (k_max=%d)\n",
                 format_double(witness.det0).c_str(),
                 witness.entangled ? "true" : "false", format_double(worst).c_str(),
                 k_max);

    Table t;
    t.columns = {"k", "gin_q_k", "gin_p_k"};
    for (int k = 0; k <= k_max; ++k) {
        Record r;
        r.add("k", k);
        r.add("gin_q_k", cov.q_diagonals[k]);
        r.add("gin_p_k", cov.p_diagonals[k]);
        t.records.push_back(std::move(r));
    }
    return t;
}

// ---------------------------------------------------------------------------
// verify: the built-in validation battery

struct VerifyRng {
    std::uint64_t s;
    double uniform() {
        std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<double>((z ^ (z >> 31)) >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

bool run_verify(bool quick, const SolverTolerances& tol) {
    using namespace capwater;
    bool ok = true;
    const auto report = [&](const char* name, bool pass, const std::string& detail) {
        std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", name,
                    detail.empty() ? "" : ": ", detail.c_str());
        ok = ok && pass;
    };

    {  // one-mode oracle equivalence
        VerifyRng rng{20240605ULL};
        const int n = quick ? 10 : 50;
        double worst = 0.0;
        bool never_beaten = true;
        for (int i = 0; i < n; ++i) {
            const double gp = rng.uniform(0.05, 2.0);
            const double gq = gp * rng.uniform(1.0, 20.0);
            const OneModeNoise noise(gq, gp);
            const double lambda = rng.uniform(1.0, 2.0 * lambda_threshold(noise));
            const auto sol = solve_one_mode(noise, InputEnergy(lambda), tol);
            const auto ora = oracle::brute_force_one_mode(noise, lambda);
            worst = std::max(worst, std::abs(sol.chi - ora.chi));
            never_beaten = never_beaten && ora.chi <= sol.chi + 1e-6;
        }
        report("one-mode oracle equivalence", worst <= 1e-4 && never_beaten,
               "max |dchi| = " + format_double(worst));
    }
    {  // two-mode oracle equivalence
        VerifyRng rng{77001ULL};
        const int n = quick ? 3 : 10;
        double worst = 0.0;
        for (int i = 0; i < n; ++i) {
            const double N = rng.uniform(0.2, 2.0);
            const double phi = rng.uniform(0.1, 0.9);
            const std::vector<OneModeNoise> modes{
                OneModeNoise(N * (1 + phi), N * (1 - phi)),
                OneModeNoise(N * (1 - phi), N * (1 + phi))};
            const double lambda = rng.uniform(2.2, 12.0);
            const auto sol = solve_mu(ModeEnsemble(modes), lambda, tol);
            const double ora = oracle::brute_force_finite(modes, lambda);
            worst = std::max(worst, std::abs(sol.c1 - ora));
        }
        report("two-mode oracle equivalence", worst <= 1e-4,
               "max |dchi| = " + format_double(worst));
    }
    {  // stationarity + Hessian
        VerifyRng rng{4242ULL};
        const int n = quick ? 5 : 20;
        double worst_res = 0.0;
        bool hessian_ok = true;
        for (int i = 0; i < n; ++i) {
            const double gp = rng.uniform(0.05, 2.0);
            const double gq = gp * rng.uniform(1.05, 15.0);
            const OneModeNoise noise(gq, gp);
            const double lthr = lambda_threshold(noise);
            const auto wf = solve_one_mode(
                noise, InputEnergy(lthr * rng.uniform(1.01, 2.0)), tol);
            for (double r : oracle::stationarity_residuals(noise, wf))
                worst_res = std::max(worst_res, std::abs(r));
            const auto hw = oracle::hessian_check(noise, wf);
            hessian_ok = hessian_ok && hw.var_eigs[0] < 0 && hw.var_eigs[1] < 0 &&
                         (!hw.has_cov_block ||
                          (hw.cov_eigs[0] < 0 && hw.cov_eigs[1] < 0));
            const auto sq = solve_one_mode(
                noise, InputEnergy(1.0 + (lthr - 1.0) * rng.uniform(0.05, 0.95)), tol);
            if (sq.regime == Regime::SingleQuadrature) {
                const auto hs = oracle::hessian_check(noise, sq);
                hessian_ok = hessian_ok && hs.var_eigs[0] < 0 && hs.var_eigs[1] < 0;
            }
        }
        report("stationarity residuals <= 1e-8", worst_res <= 1e-8,
               "max residual = " + format_double(worst_res));
        report("Hessian blocks negative definite", hessian_ok, "");
    }
    {  // concavity / monotonicity across the threshold
        VerifyRng rng{909090ULL};
        bool pass = true;
        const int n = quick ? 2 : 5;
        for (int i = 0; i < n; ++i) {
            const double gp = rng.uniform(0.1, 1.0);
            const double gq = gp * rng.uniform(1.5, 10.0);
            const OneModeNoise noise(gq, gp);
            std::vector<double> grid(200);
            const double hi = 2.0 * lambda_threshold(noise);
            for (int k = 0; k < 200; ++k) grid[k] = 1.0 + (hi - 1.0) * k / 199.0;
            const auto rep = oracle::concavity_probe(noise, grid, tol);
            pass = pass && rep.mu_strictly_decreasing && rep.max_chi_second_diff <= 1e-8;
        }
        report("mu decreasing and chi concave in lambda", pass, "");
    }
    return ok;
}

// ---------------------------------------------------------------------------

int dispatch(int argc, char** argv) {
    CLI::App app{"Gaussian capacity of bosonic channels with correlated "
                 "additive Gaussian noise"};
    app.require_subcommand(1);

    std::string format = "csv", output, model_path, nbar_grid_spec;
    bool log_grid = false;
    SolverTolerances tol;
    double nbar = -1.0, lambda_total = -1.0, gq = -1.0, gp = -1.0, snr = -1.0;
    int k_max = 64, n_modes = 2;
    bool spectra = false, two_mode = false, quick = false;

    const auto add_common = [&](CLI::App* sub, bool needs_model) {
        sub->add_option("--format", format, "Output format: csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--output", output, "Output path (default stdout)");
        sub->add_option("--grid-size", tol.grid_size, "Quadrature panels on [0, pi]")
            ->check(CLI::PositiveNumber);
        sub->add_option("--root-tol", tol.root_tol, "Root bracket tolerance");
        sub->add_option("--mu-tol", tol.mu_tol, "Multiplier tolerance");
        sub->add_option("--max-iter", tol.max_iter, "Bisection iteration cap");
        if (needs_model)
            sub->add_option("--model", model_path, "Noise model JSON file")->required();
    };

    auto* one = app.add_subcommand("one-mode", "Solve a single phase-dependent mode (columns: gq,gp,nbar,lambda,regime,gin_q,gin_p,gmod_q,gmod_p,mu,nu_bar,nu_out,chi)");
    one->add_option("--gq", gq, "q quadrature noise variance")->required();
    one->add_option("--gp", gp, "p quadrature noise variance")->required();
    one->add_option("--nbar", nbar, "Mean photon number")->required();
    add_common(one, false);

    auto* finite = app.add_subcommand("finite", "Finite mode ensemble solver (columns: mode,set,gq,gp,lambda_i,gin_q,gin_p,gmod_q,gmod_p,chi,mu,c1,c1_per_mode)");
    finite->add_option("--nbar", nbar, "Mean photon number per mode");
    finite->add_option("--lambda", lambda_total, "Total input energy");
    finite->add_option("--n-modes", n_modes, "Block size for gauss_markov models");
    add_common(finite, true);

    auto* spectral = app.add_subcommand("spectral", "Continuous-spectrum solver (columns: nbar,lambda,mu,capacity,global_wf,grid_size; with --spectra: x,weight,set,genv_q,genv_p,gin_q,gin_p,gmod_q,gmod_p)");
    spectral->add_option("--nbar", nbar, "Mean photon number")->required();
    spectral->add_flag("--spectra", spectra, "Emit per-node spectra instead of summary");
    add_common(spectral, true);

    auto* gain_cmd = app.add_subcommand("gain", "Capacity over coherent rate (columns: nbar,snr,phi,capacity,rate,gain)");
    gain_cmd->add_option("--nbar", nbar, "Single nbar point");
    gain_cmd->add_option("--nbar-grid", nbar_grid_spec, "Sweep grid lo:hi:steps");
    gain_cmd->add_flag("--log", log_grid, "Log-spaced sweep grid");
    gain_cmd->add_option("--snr", snr, "Fix nbar/N (N varies along the sweep)");
    gain_cmd->add_flag("--two-mode", two_mode, "Two-mode reduction instead of spectral");
    add_common(gain_cmd, true);

    auto* sweep = app.add_subcommand("sweep", "Capacity/rate/gain over an nbar grid (columns: nbar,lambda,mu,capacity,rate,gain,global_wf)");
    sweep->add_option("--nbar-grid", nbar_grid_spec, "Sweep grid lo:hi:steps")
        ->required();
    sweep->add_flag("--log", log_grid, "Log-spaced sweep grid");
    add_common(sweep, true);

    auto* cov = app.add_subcommand("input-cov", "Toeplitz diagonals of the optimal input (columns: k,gin_q_k,gin_p_k)");
    cov->add_option("--nbar", nbar, "Mean photon number")->required();
    cov->add_option("--kmax", k_max, "Highest diagonal index");
    add_common(cov, true);

    auto* verify = app.add_subcommand("verify", "Run the built-in validation battery");
    verify->add_flag("--quick", quick, "Smaller instance counts");
    add_common(verify, false);

    CLI11_PARSE(app, argc, argv);
    tol.validate();

    if (verify->parsed()) return run_verify(quick, tol) ? 0 : 1;

    Table table;
    if (one->parsed()) {
        table = run_one_mode(gq, gp, nbar, tol);
    } else {
        const auto model = capwater::load_noise_model(model_path);
        if (finite->parsed()) {
            if (nbar < 0.0 && lambda_total < 0.0)
                throw capwater::domain_error("finite: need --nbar or --lambda");
            table = run_finite(model, n_modes, nbar, lambda_total, tol);
        } else if (spectral->parsed()) {
            table = run_spectral(model, nbar, tol, spectra);
        } else if (gain_cmd->parsed()) {
            std::vector<double> nbars;
            if (!nbar_grid_spec.empty())
                nbars = parse_grid(nbar_grid_spec, log_grid);
            else if (nbar > 0.0)
                nbars = {nbar};
            else
                throw capwater::domain_error("gain: need --nbar or --nbar-grid");
            table = run_gain(model, nbars, snr, two_mode, tol);
        } else if (sweep->parsed()) {
            table = run_sweep(model, parse_grid(nbar_grid_spec, log_grid), tol);
        } else if (cov->parsed()) {
            table = run_input_cov(model, nbar, k_max, tol);
        }
    }
    write_output(serialize(table.columns, table.records, format), output);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const capwater::convergence_error& e) {
        std::fprintf(stderr, "error: convergence: %s\n", e.what());
        return 2;
    } catch (const capwater::bracket_error& e) {
        std::fprintf(stderr, "error: bracket: %s\n", e.what());
        return 2;
    } catch (const capwater::model_error& e) {
        std::fprintf(stderr, "error: model: %s\n", e.what());
        return 1;
    } catch (const capwater::domain_error& e) {
        std::fprintf(stderr, "error: domain: %s\n", e.what());
        return 1;
    } catch (const capwater::regime_error& e) {
        std::fprintf(stderr, "error: regime: %s\n", e.what());
        return 1;
    } catch (const capwater::error& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return 1;
    } catch (const nlohmann::json::parse_error& e) {
        std::fprintf(stderr, "error: parse: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
}
