#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <variant>
#include <vector>

#include "capwater/core.hpp"
#include "capwater/multi_mode.hpp"
#include "capwater/one_mode.hpp"

/// Continuous-spectrum (infinite-mode) solver: noise spectral models on
/// x in [0, pi], nodewise set classification, the mu equation with
/// integrals, and the capacity with its closed-form shortcuts.
namespace capwater {

inline constexpr double pi = 3.14159265358979323846264338327950288;

/// Gauss-Markov noise quadrature spectra,
/// gq = N(1-phi^2)/(1+phi^2-2phi cos x), gp with the opposite sign.
/// Mirror property: gq(x) = gp(pi - x).
inline std::pair<double, double> gauss_markov_spectrum(double N, double phi,
                                                       double x) {
    if (!(phi >= 0.0) || !(phi < 1.0))
        throw domain_error("gauss_markov_spectrum: requires 0 <= phi < 1");
    if (!(N >= 0.0)) throw domain_error("gauss_markov_spectrum: requires N >= 0");
    const double num = N * (1.0 - phi * phi);
    const double c = 2.0 * phi * std::cos(x);
    return {num / (1.0 + phi * phi - c), num / (1.0 + phi * phi + c)};
}

/// Spectrum of a stationary AR process: Var / |1 - sum phi_k e^{ikx}|^2.
inline double ar_spectrum(const std::vector<double>& coeffs, double variance,
                          double x) {
    if (!(variance >= 0.0)) throw domain_error("ar_spectrum: variance >= 0");
    std::complex<double> s(1.0, 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        s -= coeffs[k] * std::exp(std::complex<double>(0.0, (k + 1.0) * x));
    const double denom = std::norm(s);
    if (!(denom > 0.0))
        throw model_error("ar_spectrum: nonstationary coefficients (spectrum pole)");
    return variance / denom;
}

namespace detail {

// Durand-Kerner roots of c[0] + c[1] y + ... + c[d] y^d, c[d] != 0.
inline std::vector<std::complex<double>> poly_roots(std::vector<double> c) {
    const int d = static_cast<int>(c.size()) - 1;
    std::vector<std::complex<double>> r(d);
    const std::complex<double> seed(0.4, 0.9);
    std::complex<double> p(1.0, 0.0);
    for (int i = 0; i < d; ++i) {
        p *= seed;
        r[i] = p;
    }
    const auto eval = [&](std::complex<double> y) {
        std::complex<double> acc(0.0, 0.0);
        for (int k = d; k >= 0; --k) acc = acc * y + c[k];
        return acc;
    };
    for (int iter = 0; iter < 512; ++iter) {
        double max_step = 0.0;
        for (int i = 0; i < d; ++i) {
            std::complex<double> denom(c[d], 0.0);
            for (int j = 0; j < d; ++j)
                if (j != i) denom *= (r[i] - r[j]);
            const std::complex<double> step = eval(r[i]) / denom;
            r[i] -= step;
            max_step = std::max(max_step, std::abs(step));
        }
        if (max_step < 1e-13) break;
    }
    return r;
}

}  // namespace detail

/// True iff every root of 1 - sum phi_k y^k lies strictly outside the unit
/// circle (margin 1e-9; on-circle roots count as nonstationary).
inline bool ar_is_stationary(const std::vector<double>& coeffs) {
    std::vector<double> c;
    c.push_back(1.0);
    for (double phi : coeffs) c.push_back(-phi);
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.size() == 1) return true;  // white noise
    for (const auto& root : detail::poly_roots(c))
        if (!(std::abs(root) > 1.0 + 1e-9)) return false;
    return true;
}

/// Markov-1 style sign alternation phi_k -> (-1)^k phi_k, mapping a
/// q-quadrature AR coefficient set to its mirrored p-quadrature set.
inline std::vector<double> ar_mirror_coeffs(std::vector<double> coeffs) {
    for (std::size_t k = 0; k < coeffs.size(); ++k)
        if (k % 2 == 0) coeffs[k] = -coeffs[k];  // coeffs[k] is phi_{k+1}
    return coeffs;
}

/// Gauss-Markov input energy above which the solution is a global water
/// filling: nbar >= 2 phi (N + 1/2) / (1 - phi).
inline double gm_threshold_nbar(double N, double phi) {
    if (!(phi >= 0.0) || !(phi < 1.0))
        throw domain_error("gm_threshold_nbar: requires 0 <= phi < 1");
    return 2.0 * phi * (N + 0.5) / (1.0 - phi);
}

struct GaussMarkovModel {
    double N;
    double phi;
};

struct ArModel {
    std::vector<double> q_coeffs, p_coeffs;
    double q_variance = 0.0, p_variance = 0.0;
};

struct TabulatedModel {
    std::vector<double> x, gq, gp;
};

struct ModesModel {
    std::vector<OneModeNoise> modes;
};

/// Noise description: Gauss-Markov (N, phi), AR coefficient sets per
/// quadrature, a tabulated spectrum on [0, pi], or an explicit finite mode
/// list.  Correlation phi is capped at 0.999; the phi -> 1 limit has
/// delta-like spectra and is validated by trend only.
class NoiseModel {
public:
    using Variant = std::variant<GaussMarkovModel, ArModel, TabulatedModel, ModesModel>;

    static NoiseModel gauss_markov(double N, double phi) {
        if (!(N >= 0.0)) throw model_error("NoiseModel: requires N >= 0");
        if (!(phi >= 0.0) || !(phi <= 0.999))
            throw model_error("NoiseModel: requires 0 <= phi <= 0.999");
        return NoiseModel(GaussMarkovModel{N, phi});
    }

    static NoiseModel ar(std::vector<double> q_coeffs, std::vector<double> p_coeffs,
                         double q_variance, double p_variance) {
        if (!(q_variance >= 0.0) || !(p_variance >= 0.0))
            throw model_error("NoiseModel: AR variances must be >= 0");
        if (!ar_is_stationary(q_coeffs) || !ar_is_stationary(p_coeffs))
            throw model_error("NoiseModel: nonstationary AR coefficients");
        return NoiseModel(ArModel{std::move(q_coeffs), std::move(p_coeffs),
                                  q_variance, p_variance});
    }

    static NoiseModel tabulated(std::vector<double> x, std::vector<double> gq,
                                std::vector<double> gp) {
        if (x.empty() || x.size() != gq.size() || x.size() != gp.size())
            throw model_error("NoiseModel: tabulated arrays must be same nonempty size");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!(x[i] >= 0.0) || !(x[i] <= pi))
                throw model_error("NoiseModel: tabulated x nodes must lie in [0, pi]");
            if (i > 0 && !(x[i] > x[i - 1]))
                throw model_error("NoiseModel: tabulated x nodes must be increasing");
            if (!(gq[i] >= 0.0) || !(gp[i] >= 0.0))
                throw model_error("NoiseModel: tabulated spectra must be >= 0");
        }
        return NoiseModel(TabulatedModel{std::move(x), std::move(gq), std::move(gp)});
    }

    static NoiseModel modes(std::vector<OneModeNoise> m) {
        if (m.empty()) throw model_error("NoiseModel: empty mode list");
        return NoiseModel(ModesModel{std::move(m)});
    }

    const Variant& variant() const { return v_; }
    bool is_modes() const { return std::holds_alternative<ModesModel>(v_); }

    /// Quadrature noise spectra at x in [0, pi] (continuous variants only).
    std::pair<double, double> spectrum(double x) const {
        if (const auto* gm = std::get_if<GaussMarkovModel>(&v_))
            return gauss_markov_spectrum(gm->N, gm->phi, x);
        if (const auto* ar = std::get_if<ArModel>(&v_))
            return {ar_spectrum(ar->q_coeffs, ar->q_variance, x),
                    ar_spectrum(ar->p_coeffs, ar->p_variance, x)};
        if (const auto* tab = std::get_if<TabulatedModel>(&v_))
            return {interp(tab->x, tab->gq, x), interp(tab->x, tab->gp, x)};
        throw model_error("NoiseModel: mode-list model has no continuous spectrum");
    }

private:
    explicit NoiseModel(Variant v) : v_(std::move(v)) {}

    // Piecewise-linear interpolation, clamped at the table ends.
    static double interp(const std::vector<double>& xs, const std::vector<double>& ys,
                         double x) {
        if (x <= xs.front()) return ys.front();
        if (x >= xs.back()) return ys.back();
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin());
        const double t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
        return ys[i - 1] + t * (ys[i] - ys[i - 1]);
    }

    Variant v_;
};

enum class SetLabel { N1, N2, N3 };

inline const char* to_string(SetLabel s) {
    switch (s) {
        case SetLabel::N1: return "N1";
        case SetLabel::N2: return "N2";
        case SetLabel::N3: return "N3";
    }
    return "?";
}

namespace detail {

// Shared regime classifier; must match the dispatch inside solve_for_mu.
inline SetLabel label_of(const OneModeNoise& noise, double mu) {
    if (mu <= mu_threshold_bound(noise)) return SetLabel::N3;
    if (mu >= mu_zero(noise)) return SetLabel::N1;
    return SetLabel::N2;
}

inline std::vector<OneModeNoise> node_noises(const NoiseModel& model,
                                             const QuadratureGrid& grid) {
    std::vector<OneModeNoise> nodes;
    nodes.reserve(grid.size());
    for (double x : grid.x) {
        const auto [gq, gp] = model.spectrum(x);
        nodes.emplace_back(gq, gp);
    }
    return nodes;
}

}  // namespace detail

/// Per-node regime labels of a continuous model at multiplier mu.
inline std::vector<SetLabel> classify_spectrum(const NoiseModel& model, double mu,
                                               const QuadratureGrid& grid) {
    if (!(mu > 0.0)) throw domain_error("classify_spectrum: requires mu > 0");
    std::vector<SetLabel> labels;
    labels.reserve(grid.size());
    for (double x : grid.x) {
        const auto [gq, gp] = model.spectrum(x);
        labels.push_back(detail::label_of(OneModeNoise(gq, gp), mu));
    }
    return labels;
}

/// Optimal input/modulation spectra on a quadrature grid over [0, pi].
/// Spectra are stored in the original orientation of the model (node
/// solutions are un-swapped), so mirror symmetry of the model carries over.
struct SpectralSolution {
    double mu = 0.0;
    double nbar = 0.0;
    std::vector<double> x, w;                    ///< nodes and weights
    std::vector<double> genv_q, genv_p;          ///< noise spectra at nodes
    std::vector<double> gin_q, gin_p;            ///< optimal input spectra
    std::vector<double> gmod_q, gmod_p;          ///< optimal modulation spectra
    std::vector<SetLabel> set_label;
    double capacity = 0.0;                       ///< bits per channel use
    bool rate_is_global_wf = false;

    double lambda() const { return 2.0 * nbar + 1.0; }
};

namespace detail {

inline SpectralSolution from_modes(const ModesModel& mm, double nbar,
                                   const SolverTolerances& tol) {
    const ModeEnsemble ens(mm.modes);
    const double n = static_cast<double>(ens.size());
    const auto multi = solve_mu(ens, n * (2.0 * nbar + 1.0), tol);
    SpectralSolution out;
    out.mu = multi.mu;
    out.nbar = nbar;
    out.capacity = multi.c1_per_mode;
    out.rate_is_global_wf = multi.partition.n3.size() == ens.size();
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const auto& m = ens.modes[i];
        const auto& s = multi.per_mode[i];
        out.x.push_back((i + 0.5) * pi / n);  // nominal positions
        out.w.push_back(pi / n);
        out.genv_q.push_back(m.swapped ? m.gp : m.gq);
        out.genv_p.push_back(m.swapped ? m.gq : m.gp);
        out.gin_q.push_back(s.gin_q);
        out.gin_p.push_back(s.gin_p);
        out.gmod_q.push_back(s.gmod_q);
        out.gmod_p.push_back(s.gmod_p);
        out.set_label.push_back(label_of(m, multi.mu));
    }
    return out;
}

}  // namespace detail

/// Solve the continuous closed equation on mu,
/// (1/pi) integral of lambda(x, mu) = 2 nbar + 1, and assemble the optimal
/// spectra and the capacity.  A Modes model delegates to the finite solver.
inline SpectralSolution solve_mu_spectral(const NoiseModel& model, double nbar,
                                          const SolverTolerances& tol = {}) {
    tol.validate();
    if (!(nbar >= 0.0)) throw domain_error("solve_mu_spectral: requires nbar >= 0");
    if (const auto* mm = std::get_if<ModesModel>(&model.variant()))
        return detail::from_modes(*mm, nbar, tol);

    const QuadratureGrid grid = make_quadrature_grid(0.0, pi, tol.grid_size);
    const auto nodes = detail::node_noises(model, grid);
    const double lambda = 2.0 * nbar + 1.0;

    double hi = 0.0;
    bool hi_finite = true;
    for (const auto& m : nodes) {
        const double m0 = mu_zero(m);
        if (!std::isfinite(m0)) hi_finite = false;
        hi = std::max(hi, m0);
    }

    const auto demand = [&](double mu) {
        double acc = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            acc += grid.w[j] * solve_for_mu(nodes[j], mu, tol).first;
        return acc / pi;
    };
    if (!hi_finite) {
        hi = 1.0;
        while (demand(hi) > lambda && hi < 1e12) hi *= 2.0;
    }

    double mu_star;
    if (nbar == 0.0) {
        mu_star = hi;
    } else {
        double lo = std::min(1e-12, 0.5 * hi);
        while (demand(lo) < lambda && lo > 1e-300) lo /= 16.0;
        double hi_b = hi;
        const double width_tol =
            std::numeric_limits<double>::epsilon() * std::max(1.0, hi_b);
        int it = 0;
        while (hi_b - lo > width_tol && it++ < tol.max_iter) {
            const double mid = 0.5 * (lo + hi_b);
            if (mid == lo || mid == hi_b) break;
            const double h = demand(mid) - lambda;
            if (h == 0.0) {
                lo = hi_b = mid;
                break;
            }
            (h > 0.0 ? lo : hi_b) = mid;
        }
        mu_star = 0.5 * (lo + hi_b);
        const double slack = std::max(1e-8, 1e-10 * lambda);
        if (std::abs(demand(mu_star) - lambda) > slack)
            throw convergence_error("solve_mu_spectral: mu bisection did not "
                                    "close the energy constraint; final mu = " +
                                    std::to_string(mu_star));
    }

    SpectralSolution out;
    out.mu = mu_star;
    out.nbar = nbar;
    out.x = grid.x;
    out.w = grid.w;
    const std::size_t n = nodes.size();
    out.genv_q.resize(n);
    out.genv_p.resize(n);
    out.gin_q.resize(n);
    out.gin_p.resize(n);
    out.gmod_q.resize(n);
    out.gmod_p.resize(n);
    out.set_label.resize(n);
    double cap = 0.0;
    bool all_n3 = true;
    for (std::size_t j = 0; j < n; ++j) {
        const auto& m = nodes[j];
        const auto [lj, sol] = solve_for_mu(m, mu_star, tol);
        out.genv_q[j] = m.swapped ? m.gp : m.gq;
        out.genv_p[j] = m.swapped ? m.gq : m.gp;
        out.gin_q[j] = sol.gin_q;
        out.gin_p[j] = sol.gin_p;
        out.gmod_q[j] = sol.gmod_q;
        out.gmod_p[j] = sol.gmod_p;
        out.set_label[j] = detail::label_of(m, mu_star);
        all_n3 = all_n3 && out.set_label[j] == SetLabel::N3;
        cap += grid.w[j] * sol.chi;
    }
    out.capacity = cap / pi;
    out.rate_is_global_wf = all_n3;
    return out;
}

/// Gaussian capacity of the channel.  Above the global water-filling
/// threshold the closed form is used (for Gauss-Markov the g(nbar + N)
/// simplification); below it, the full spectral solve.
inline double capacity_spectral(const NoiseModel& model, double nbar,
                                const SolverTolerances& tol = {}) {
    tol.validate();
    if (!(nbar >= 0.0)) throw domain_error("capacity_spectral: requires nbar >= 0");
    if (const auto* mm = std::get_if<ModesModel>(&model.variant()))
        return detail::from_modes(*mm, nbar, tol).capacity;

    const QuadratureGrid grid = make_quadrature_grid(0.0, pi, tol.grid_size);
    const auto nodes = detail::node_noises(model, grid);

    // Global threshold: the flat output level must clear every node's own
    // water-filling threshold level.
    double mean_env = 0.0;
    double level_needed = 0.0;
    bool finite_threshold = true;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const auto& m = nodes[j];
        mean_env += grid.w[j] * (m.gq + m.gp);
        if (m.gp == 0.0 && m.gq > 0.0) {
            finite_threshold = false;
            continue;
        }
        const double lthr = lambda_threshold(m);
        level_needed = std::max(level_needed, 0.5 * (lthr + m.gq + m.gp));
    }
    mean_env /= pi;
    const double level = nbar + 0.5 + 0.5 * mean_env;

    if (finite_threshold && level >= level_needed) {
        double out_entropy = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j)
            out_entropy += grid.w[j] * g(std::sqrt(nodes[j].gq * nodes[j].gp));
        out_entropy /= pi;
        if (const auto* gm = std::get_if<GaussMarkovModel>(&model.variant()))
            return g(nbar + gm->N) - out_entropy;
        return g(level - 0.5) - out_entropy;
    }
    return solve_mu_spectral(model, nbar, tol).capacity;
}

}  // namespace capwater
