#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "capwater/core.hpp"
#include "capwater/one_mode.hpp"
#include "capwater/spectral.hpp"

/// Coherent-state transmission rate R (classical water filling over the
/// noise-plus-vacuum spectra), the gain G = C/R, and the two-mode reduction.
namespace capwater {

/// One sweep point: capacity, coherent rate and their ratio.
struct GainPoint {
    double nbar;
    double snr;       ///< nbar / mean noise variance
    double phi;       ///< correlation (NaN for models without one)
    double capacity;  ///< bits
    double rate;      ///< bits
    double gain;      ///< capacity / rate, >= 1
};

namespace detail {

// Subchannel view of a model: noise-plus-vacuum variances per quadrature,
// one entry per node (or per mode), with weights summing to `norm`.
struct Subchannels {
    std::vector<double> gq, gp;  // noise spectra (without the vacuum 1/2)
    std::vector<double> w;
    double norm = 0.0;
};

inline Subchannels subchannels(const NoiseModel& model,
                               const SolverTolerances& tol) {
    Subchannels s;
    if (const auto* mm = std::get_if<ModesModel>(&model.variant())) {
        for (const auto& m : mm->modes) {
            s.gq.push_back(m.swapped ? m.gp : m.gq);
            s.gp.push_back(m.swapped ? m.gq : m.gp);
            s.w.push_back(1.0);
        }
        s.norm = static_cast<double>(mm->modes.size());
        return s;
    }
    const QuadratureGrid grid = make_quadrature_grid(0.0, pi, tol.grid_size);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto [gq, gp] = model.spectrum(grid.x[j]);
        s.gq.push_back(gq);
        s.gp.push_back(gp);
        s.w.push_back(grid.w[j]);
    }
    s.norm = pi;
    return s;
}

// Rate of the coherent encoding with water level L (modulation fills both
// quadratures up to L where the noise-plus-vacuum floor allows it).
inline double coherent_rate_at_level(const Subchannels& s, double level) {
    double rate = 0.0;
    for (std::size_t j = 0; j < s.gq.size(); ++j) {
        const double fq = s.gq[j] + 0.5, fp = s.gp[j] + 0.5;
        const double bq = std::max(level, fq), bp = std::max(level, fp);
        const double nu_bar = std::sqrt(bq * bp);
        const double nu_out = std::sqrt(fq * fp);
        rate += s.w[j] * (g(nu_bar - 0.5) - g(nu_out - 0.5));
    }
    return rate / s.norm;
}

inline double modulation_budget(const Subchannels& s, double level) {
    double acc = 0.0;
    for (std::size_t j = 0; j < s.gq.size(); ++j) {
        acc += s.w[j] * (std::max(level - s.gq[j] - 0.5, 0.0) +
                         std::max(level - s.gp[j] - 0.5, 0.0));
    }
    return acc / s.norm;
}

}  // namespace detail

/// Coherent water-filling edge for Gauss-Markov noise: the x value that
/// separates modulated from unmodulated q components below the coherent
/// threshold nbar < 2 phi N / (1 - phi).  Found by bisection on (0, pi).
inline double gm_coherent_alpha(double N, double phi, double nbar,
                                const SolverTolerances& tol = {}) {
    if (!(phi > 0.0) || !(phi < 1.0))
        throw domain_error("gm_coherent_alpha: requires 0 < phi < 1");
    if (!(nbar >= 0.0)) throw domain_error("gm_coherent_alpha: requires nbar >= 0");
    if (!(nbar < 2.0 * phi * N / (1.0 - phi)))
        throw regime_error("gm_coherent_alpha: above the coherent threshold");
    const double ratio = (1.0 + phi) / (1.0 - phi);
    // Closed-form tail mass: int_a^pi gq dx = N pi - 2 N atan(ratio tan(a/2)).
    const auto h = [&](double a) {
        const double gq_a = gauss_markov_spectrum(N, phi, a).first;
        const double tail = N * pi - 2.0 * N * std::atan(ratio * std::tan(0.5 * a));
        return (pi - a) / pi * gq_a - tail / pi - nbar;
    };
    return bisect(h, Bracket(1e-12, pi - 1e-12), tol);
}

/// Best transmission rate with coherent-state inputs, in bits.  Above the
/// coherent threshold this is the closed-form global water filling; below
/// it the common water level is found per quadrature (for Gauss-Markov the
/// alpha-equation fixes the level).
inline double coherent_rate_spectral(const NoiseModel& model, double nbar,
                                     const SolverTolerances& tol = {}) {
    tol.validate();
    if (!(nbar >= 0.0))
        throw domain_error("coherent_rate_spectral: requires nbar >= 0");
    const auto s = detail::subchannels(model, tol);

    double mean_q = 0.0, mean_p = 0.0, max_floor = 0.0;
    for (std::size_t j = 0; j < s.gq.size(); ++j) {
        mean_q += s.w[j] * s.gq[j];
        mean_p += s.w[j] * s.gp[j];
        max_floor = std::max(max_floor, std::max(s.gq[j], s.gp[j]) + 0.5);
    }
    mean_q /= s.norm;
    mean_p /= s.norm;

    const double level_wf = nbar + 0.5 + 0.5 * (mean_q + mean_p);
    if (level_wf >= max_floor)
        return detail::coherent_rate_at_level(s, level_wf);
    if (nbar == 0.0) return 0.0;

    double level;
    if (const auto* gm = std::get_if<GaussMarkovModel>(&model.variant());
        gm != nullptr && gm->phi > 0.0) {
        const double alpha = gm_coherent_alpha(gm->N, gm->phi, nbar, tol);
        level = gauss_markov_spectrum(gm->N, gm->phi, alpha).first + 0.5;
    } else {
        // Generic spectra: find the level by bisection on the budget.
        double lo = 0.5, hi = max_floor + 2.0 * nbar + 1.0;
        const auto f = [&](double L) {
            return detail::modulation_budget(s, L) - 2.0 * nbar;
        };
        SolverTolerances ltol = tol;
        ltol.root_tol = 1e-13 * std::max(1.0, hi);
        level = bisect(f, Bracket(lo, hi), ltol);
    }
    return detail::coherent_rate_at_level(s, level);
}

/// Capacity over coherent rate at one operating point.
inline GainPoint gain(const NoiseModel& model, double nbar,
                      const SolverTolerances& tol = {}) {
    if (!(nbar > 0.0))
        throw domain_error("gain: requires nbar > 0 (rate degenerates at 0)");
    const double c = capacity_spectral(model, nbar, tol);
    const double r = coherent_rate_spectral(model, nbar, tol);
    GainPoint pt{};
    pt.nbar = nbar;
    pt.capacity = c;
    pt.rate = r;
    pt.gain = c / r;
    pt.phi = std::numeric_limits<double>::quiet_NaN();
    double mean_noise;
    if (const auto* gm = std::get_if<GaussMarkovModel>(&model.variant())) {
        pt.phi = gm->phi;
        mean_noise = gm->N;
    } else {
        const auto s = detail::subchannels(model, tol);
        double mq = 0.0, mp = 0.0;
        for (std::size_t j = 0; j < s.gq.size(); ++j) {
            mq += s.w[j] * s.gq[j];
            mp += s.w[j] * s.gp[j];
        }
        mean_noise = 0.5 * (mq + mp) / s.norm;
    }
    pt.snr = mean_noise > 0.0 ? nbar / mean_noise
                              : std::numeric_limits<double>::infinity();
    return pt;
}

/// Two correlated uses reduce to a single phase-dependent mode with noise
/// (N(1+phi), N(1-phi)); the gain compares its optimal encoding with the
/// coherent restriction of the same one-mode problem.
inline GainPoint two_mode_gain(double N, double phi, double nbar,
                               const SolverTolerances& tol = {}) {
    if (!(phi >= 0.0) || !(phi < 1.0))
        throw domain_error("two_mode_gain: requires 0 <= phi < 1");
    if (!(nbar > 0.0)) throw domain_error("two_mode_gain: requires nbar > 0");
    const OneModeNoise noise(N * (1.0 + phi), N * (1.0 - phi));
    const double c = solve_one_mode(noise, InputEnergy::from_nbar(nbar), tol).chi;

    const double fq = noise.gq + 0.5, fp = noise.gp + 0.5;
    const double level = nbar + 0.5 + 0.5 * (noise.gq + noise.gp);
    double bq, bp;
    if (level >= fq) {  // both quadratures modulated
        bq = bp = level;
    } else {  // all modulation into the quiet quadrature
        bq = fq;
        bp = fp + 2.0 * nbar;
    }
    const double r =
        g(std::sqrt(bq * bp) - 0.5) - g(std::sqrt(fq * fp) - 0.5);
    GainPoint pt{};
    pt.nbar = nbar;
    pt.snr = N > 0.0 ? nbar / N : std::numeric_limits<double>::infinity();
    pt.phi = phi;
    pt.capacity = c;
    pt.rate = r;
    pt.gain = c / r;
    return pt;
}

enum class GainChannel { Spectral, TwoMode };

/// Scan a nbar grid at fixed SNR and phi (N = nbar/snr per point) and
/// return the point of maximal gain; ties break to the smallest nbar.
inline GainPoint max_gain_over_nbar(GainChannel kind, double snr, double phi,
                                    const std::vector<double>& nbar_grid,
                                    const SolverTolerances& tol = {}) {
    if (nbar_grid.empty())
        throw domain_error("max_gain_over_nbar: empty nbar grid");
    if (!(snr > 0.0)) throw domain_error("max_gain_over_nbar: requires snr > 0");
    GainPoint best{};
    best.gain = -std::numeric_limits<double>::infinity();
    for (double nbar : nbar_grid) {
        const double N = nbar / snr;
        GainPoint pt = (kind == GainChannel::TwoMode)
                           ? two_mode_gain(N, phi, nbar, tol)
                           : gain(NoiseModel::gauss_markov(N, phi), nbar, tol);
        pt.snr = snr;
        if (pt.gain > best.gain) best = pt;
    }
    return best;
}

}  // namespace capwater
