#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "capwater/core.hpp"

/// Exact solution of the single-mode phase-dependent additive-noise channel,
/// in all three energy regimes, plus the mu-parametrized per-mode energy
/// functions that drive the multimode and spectral solvers.
namespace capwater {

/// Per-mode noise quadrature variances (dimensionless, vacuum = 1/2 scale).
///
/// Construction enforces the canonical orientation gq >= gp and records
/// whether the quadratures were swapped; a swap does not change the one-shot
/// capacity, and solutions are un-swapped before they are returned.
struct OneModeNoise {
    double gq;       ///< noisier quadrature variance (canonical)
    double gp;       ///< quieter quadrature variance (canonical)
    bool swapped;    ///< true if the caller's (q, p) were exchanged

    OneModeNoise(double q_variance, double p_variance)
        : gq(q_variance), gp(p_variance), swapped(false) {
        if (!(q_variance >= 0.0) || !(p_variance >= 0.0))
            throw domain_error("OneModeNoise: variances must be >= 0");
        if (gq < gp) {
            std::swap(gq, gp);
            swapped = true;
        }
    }
};

/// Total per-mode input energy lambda = 2 nbar + 1 (vacuum floor lambda = 1).
struct InputEnergy {
    double lambda;

    explicit InputEnergy(double lambda_) : lambda(lambda_) {
        if (!(lambda >= 1.0))
            throw domain_error("InputEnergy: requires lambda >= 1");
    }

    static InputEnergy from_nbar(double nbar) {
        if (!(nbar >= 0.0))
            throw domain_error("InputEnergy: requires nbar >= 0");
        return InputEnergy(2.0 * nbar + 1.0);
    }

    double nbar() const { return 0.5 * (lambda - 1.0); }
};

enum class Regime {
    WaterFilling,      ///< both quadratures modulated, common output level
    SingleQuadrature,  ///< the noisier quadrature carries no modulation
    Vacuum             ///< no modulation at all (lambda = 1)
};

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::WaterFilling: return "water_filling";
        case Regime::SingleQuadrature: return "single_quadrature";
        case Regime::Vacuum: return "vacuum";
    }
    return "?";
}

/// Optimal one-mode encoding: pure squeezed carrier (gin_q * gin_p = 1/4)
/// plus classical Gaussian modulation, with the multiplier and the output
/// symplectic eigenvalues that produced it.  Quadrature labels follow the
/// caller's original orientation (see OneModeNoise::swapped).
struct OneModeSolution {
    Regime regime;
    double gin_q, gin_p;    ///< input (carrier) variances
    double gmod_q, gmod_p;  ///< classical modulation variances
    double mu;              ///< Lagrange multiplier, bits per unit variance
    double nu_bar;          ///< overall modulated output symplectic eigenvalue
    double nu_out;          ///< nonmodulated output symplectic eigenvalue
    double chi;             ///< Holevo quantity, bits
    bool swap_applied;

    double lambda() const { return gin_q + gin_p + gmod_q + gmod_p; }
};

/// Energy threshold lambda_thr = sqrt(gq/gp) + gq - gp separating the
/// water-filling regime from the single-quadrature regime.
inline double lambda_threshold(const OneModeNoise& noise) {
    if (noise.gp == 0.0) {
        if (noise.gq == 0.0) return 1.0;  // pure vacuum noise, always WF
        throw domain_error("lambda_threshold: divergent for gp = 0");
    }
    return std::sqrt(noise.gq / noise.gp) + noise.gq - noise.gp;
}

/// Multiplier at the water-filling threshold,
/// mu_thr = (1/2) g'((lambda_thr + gq + gp)/2 - 1/2).
inline double mu_threshold(const OneModeNoise& noise) {
    const double lthr = lambda_threshold(noise);
    return 0.5 * g_prime(0.5 * (lthr + noise.gq + noise.gp) - 0.5);
}

/// mu_thr with the degenerate cases resolved: pure q-noise never reaches
/// water filling (0), pure vacuum noise always does (+inf).
inline double mu_threshold_bound(const OneModeNoise& noise) {
    if (noise.gp == 0.0)
        return noise.gq == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return mu_threshold(noise);
}

/// Upper bound mu_0 on the multiplier, reached at vacuum input energy:
/// mu_0 = (1/2) g'(sqrt((gq+1/2)(gp+1/2)) - 1/2) sqrt((gq+1/2)/(gp+1/2)).
inline double mu_zero(const OneModeNoise& noise) {
    const double aq = noise.gq + 0.5;
    const double ap = noise.gp + 0.5;
    const double arg = std::sqrt(aq * ap) - 0.5;
    if (arg <= 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * g_prime(arg) * std::sqrt(aq / ap);
}

namespace detail {

// Upper end of the gin_q range below threshold (antisqueezing bound).
inline double gin_q_threshold(const OneModeNoise& noise) {
    if (noise.gp == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * std::sqrt(noise.gq / noise.gp);
}

// Single-quadrature state at a candidate gin_q: gmod_q = 0, purity and the
// energy budget fix everything else.
struct BelowState {
    double gin_q, gin_p, gmod_p;
    double gout_q, gout_p;   // nonmodulated output variances
    double gbar_q, gbar_p;   // overall modulated output variances
    double nu_bar, nu_out;
};

inline BelowState below_state(const OneModeNoise& noise, double lambda,
                              double gin_q) {
    BelowState s;
    s.gin_q = gin_q;
    s.gin_p = 0.25 / gin_q;
    s.gmod_p = lambda - gin_q - s.gin_p;
    s.gout_q = gin_q + noise.gq;
    s.gout_p = s.gin_p + noise.gp;
    s.gbar_q = s.gout_q;
    s.gbar_p = s.gout_p + s.gmod_p;  // = lambda - gin_q + gp
    s.nu_bar = std::sqrt(s.gbar_q * s.gbar_p);
    s.nu_out = std::sqrt(s.gout_q * s.gout_p);
    return s;
}

inline OneModeSolution finish(const OneModeNoise& noise, OneModeSolution sol) {
    if (noise.swapped) {
        std::swap(sol.gin_q, sol.gin_p);
        std::swap(sol.gmod_q, sol.gmod_p);
        sol.swap_applied = true;
    }
    return sol;
}

inline OneModeSolution vacuum_solution(const OneModeNoise& noise, double mu) {
    OneModeSolution sol{};
    sol.regime = Regime::Vacuum;
    sol.gin_q = sol.gin_p = 0.5;
    sol.gmod_q = sol.gmod_p = 0.0;
    sol.nu_out = std::sqrt((0.5 + noise.gq) * (0.5 + noise.gp));
    sol.nu_bar = sol.nu_out;
    sol.chi = 0.0;
    sol.mu = mu;
    sol.swap_applied = false;
    return finish(noise, sol);
}

inline double clamp_nonnegative(double v, const char* what) {
    if (v < 0.0) {
        if (v < -1e-9)
            throw regime_error(std::string(what) + " negative: " + std::to_string(v));
        return 0.0;
    }
    return v;
}

}  // namespace detail

/// Stationarity residual F(gin_q) of the single-quadrature regime; zero
/// exactly at the optimum.  Requires 1/2 <= gin_q < (1/2) sqrt(gq/gp) and
/// an energy budget that keeps the candidate physical.
inline double residual_F(const OneModeNoise& noise, double lambda,
                         double gin_q) {
    const double hi = detail::gin_q_threshold(noise);
    if (!(gin_q >= 0.5) || !(gin_q < hi))
        throw domain_error("residual_F: gin_q outside [1/2, gin_q_thr)");
    const auto s = detail::below_state(noise, lambda, gin_q);
    if (!(s.gbar_p > 0.0))
        throw domain_error("residual_F: candidate exhausts the energy budget");
    return kappa(s.nu_bar) * (s.gbar_p - s.gbar_q) -
           kappa(s.nu_out) * (s.gout_p - (s.gin_p / s.gin_q) * s.gout_q);
}

/// Water-filling solution, valid for lambda >= lambda_thr.
inline OneModeSolution solve_above_threshold(const OneModeNoise& noise,
                                             InputEnergy energy) {
    const double lambda = energy.lambda;
    OneModeSolution sol{};
    sol.regime = Regime::WaterFilling;
    if (noise.gp == 0.0 && noise.gq > 0.0)
        throw regime_error("solve_above_threshold: threshold diverges for gp = 0");
    const double ratio = (noise.gp > 0.0) ? noise.gq / noise.gp : 1.0;
    sol.gin_q = 0.5 * std::sqrt(ratio);
    sol.gin_p = 0.25 / sol.gin_q;
    sol.nu_bar = 0.5 * (lambda + noise.gq + noise.gp);
    sol.gmod_q = detail::clamp_nonnegative(sol.nu_bar - sol.gin_q - noise.gq,
                                           "solve_above_threshold: gmod_q");
    sol.gmod_p = detail::clamp_nonnegative(sol.nu_bar - sol.gin_p - noise.gp,
                                           "solve_above_threshold: gmod_p");
    sol.nu_out = 0.5 + std::sqrt(noise.gq * noise.gp);
    sol.chi = g(sol.nu_bar - 0.5) - g(sol.nu_out - 0.5);
    sol.mu = 0.5 * g_prime(sol.nu_bar - 0.5);
    sol.swap_applied = false;
    return detail::finish(noise, sol);
}

/// Single-quadrature solution, valid for 1 < lambda < lambda_thr and
/// strictly asymmetric noise.  Solves F(gin_q) = 0 by bisection on
/// [1/2, (1/2) sqrt(gq/gp)); the modulation of the noisier quadrature
/// vanishes in this regime.
inline OneModeSolution solve_below_threshold(const OneModeNoise& noise,
                                             InputEnergy energy,
                                             const SolverTolerances& tol = {}) {
    const double lambda = energy.lambda;
    if (!(lambda > 1.0))
        throw regime_error("solve_below_threshold: requires lambda > 1");
    if (noise.gp > 0.0 && lambda >= lambda_threshold(noise))
        throw regime_error("solve_below_threshold: lambda above threshold");
    if (!(noise.gq > noise.gp))
        throw regime_error("solve_below_threshold: requires gq > gp");

    // gmod_p >= 0 caps the antisqueezing reachable with this budget.
    const double hi_energy = 0.5 * (lambda + std::sqrt(lambda * lambda - 1.0));
    const double eps = 1e-12;
    const double lo = 0.5 + eps;
    const double hi = std::min(detail::gin_q_threshold(noise) - eps, hi_energy);
    const auto f = [&](double x) { return residual_F(noise, lambda, x); };
    double root;
    if (!(lo < hi)) {
        root = 0.5;  // budget barely above vacuum: root pinned at 1/2
    } else
    try {
        root = bisect(f, Bracket(lo, hi), tol);
    } catch (const bracket_error&) {
        // A root exists in the open interval; scan for a sign change on a
        // denser grid including the closed left end.
        constexpr int n_scan = 64;
        double prev_x = 0.5, prev_f = f(prev_x);
        root = std::numeric_limits<double>::quiet_NaN();
        for (int i = 1; i <= n_scan; ++i) {
            const double x = 0.5 + (hi - 0.5) * i / n_scan;
            const double fx = f(x);
            if ((fx > 0.0) != (prev_f > 0.0) || fx == 0.0) {
                root = bisect(f, Bracket(prev_x, x), tol);
                break;
            }
            prev_x = x;
            prev_f = fx;
        }
        if (std::isnan(root)) {
            // F decreases through its root; a sign-change miss at the
            // epsilon margins means the root is pinned at a regime
            // boundary, within root_tol of the endpoint.
            if (f(lo) > 0.0 && f(hi) > 0.0)
                root = hi;
            else if (f(lo) < 0.0 && f(hi) < 0.0)
                root = 0.5;
            else
                throw bracket_error(
                    "solve_below_threshold: no sign change of F on [0.5, " +
                    std::to_string(hi) + "] at lambda = " + std::to_string(lambda) +
                    ", gq = " + std::to_string(noise.gq) +
                    ", gp = " + std::to_string(noise.gp));
        }
    }

    const auto st = detail::below_state(noise, lambda, root);
    OneModeSolution sol{};
    sol.regime = Regime::SingleQuadrature;
    sol.gin_q = st.gin_q;
    sol.gin_p = st.gin_p;
    sol.gmod_q = 0.0;
    sol.gmod_p = detail::clamp_nonnegative(st.gmod_p,
                                           "solve_below_threshold: gmod_p");
    sol.nu_bar = st.nu_bar;
    sol.nu_out = st.nu_out;
    sol.chi = g(sol.nu_bar - 0.5) - g(sol.nu_out - 0.5);
    sol.mu = kappa(st.nu_bar) * st.gbar_q;
    sol.swap_applied = false;
    return detail::finish(noise, sol);
}

/// Full one-mode solve: dispatches to the vacuum, single-quadrature or
/// water-filling regime by the input energy.
inline OneModeSolution solve_one_mode(const OneModeNoise& noise,
                                      InputEnergy energy,
                                      const SolverTolerances& tol = {}) {
    const double lambda = energy.lambda;
    if (lambda == 1.0) return detail::vacuum_solution(noise, mu_zero(noise));
    if (noise.gp == 0.0 && noise.gq > 0.0)
        return solve_below_threshold(noise, energy, tol);
    if (lambda >= lambda_threshold(noise))
        return solve_above_threshold(noise, energy);
    return solve_below_threshold(noise, energy, tol);
}

namespace detail {

// Right-hand side f of the below-threshold stationarity equation, as a
// function of gin_q alone.
inline double f_of_gin_q(const OneModeNoise& noise, double gin_q) {
    const double gin_p = 0.25 / gin_q;
    const double gout_q = gin_q + noise.gq;
    const double gout_p = gin_p + noise.gp;
    const double nu_out = std::sqrt(gout_q * gout_p);
    return kappa(nu_out) * (gout_p - (gin_p / gin_q) * gout_q);
}

}  // namespace detail

/// Per-mode energy demand at a common multiplier mu: returns the energy
/// lambda_i the mode absorbs and the corresponding optimal solution.  The
/// returned lambda_i is strictly decreasing in mu and saturates at 1 once
/// mu reaches mu_0.  The stored solution mu is the multiplier passed in.
inline std::pair<double, OneModeSolution> solve_for_mu(
    const OneModeNoise& noise, double mu, const SolverTolerances& tol = {}) {
    if (!(mu > 0.0)) throw domain_error("solve_for_mu: requires mu > 0");

    const double mu_thr = mu_threshold_bound(noise);
    if (mu <= mu_thr) {
        const double nu = nu_from_mu(mu);
        const double lambda_i = 2.0 * nu - noise.gq - noise.gp;
        auto sol = solve_above_threshold(noise, InputEnergy(lambda_i));
        sol.mu = mu;
        return {lambda_i, sol};
    }
    if (mu >= mu_zero(noise)) return {1.0, detail::vacuum_solution(noise, mu)};

    // Single-quadrature regime: find gin_q from the implicit stationarity
    // equation g'(gout_q * s - 1/2) = 2 mu s, s = sqrt(1 + f(gin_q)/mu).
    const double hi_ratio = detail::gin_q_threshold(noise);
    const auto residual = [&](double gin_q) {
        const double gout_q = gin_q + noise.gq;
        const double t = 1.0 + detail::f_of_gin_q(noise, gin_q) / mu;
        if (!(t > 0.0)) return 1e300;  // unphysical candidate, steer right
        const double s = std::sqrt(t);
        const double arg = gout_q * s - 0.5;
        if (!(arg > 0.0)) return 1e300;
        return g_prime(arg) - 2.0 * mu * s;
    };
    const double eps = 1e-12;
    double lo = 0.5 + eps;
    double hi;
    if (std::isfinite(hi_ratio)) {
        hi = hi_ratio - eps;
    } else {  // gp = 0: expand until the residual turns negative
        hi = std::max(1.0, 2.0 * noise.gq);
        int guard = 0;
        while (residual(hi) > 0.0 && guard++ < 1024) hi *= 2.0;
    }
    double root;
    try {
        root = bisect(residual, Bracket(lo, hi), tol);
    } catch (const bracket_error&) {
        constexpr int n_scan = 64;
        double prev_x = 0.5, prev_f = residual(prev_x);
        root = std::numeric_limits<double>::quiet_NaN();
        for (int i = 1; i <= n_scan; ++i) {
            const double x = 0.5 + (hi - 0.5) * i / n_scan;
            const double fx = residual(x);
            if ((fx > 0.0) != (prev_f > 0.0) || fx == 0.0) {
                root = bisect(residual, Bracket(prev_x, x), tol);
                break;
            }
            prev_x = x;
            prev_f = fx;
        }
        if (std::isnan(root)) {
            // mu within an ulp of a regime boundary: the root coincides
            // with a bracket endpoint to root_tol.
            if (residual(lo) > 0.0 && residual(hi) > 0.0)
                root = hi;
            else if (residual(lo) < 0.0 && residual(hi) < 0.0)
                root = 0.5;
            else
                throw bracket_error("solve_for_mu: no root of the stationarity "
                                    "equation at mu = " + std::to_string(mu));
        }
    }

    const double gout_q = root + noise.gq;
    const double lambda_i = (gout_q / mu) * detail::f_of_gin_q(noise, root) +
                            2.0 * root + noise.gq - noise.gp;
    const auto st = detail::below_state(noise, lambda_i, root);
    OneModeSolution sol{};
    sol.regime = Regime::SingleQuadrature;
    sol.gin_q = st.gin_q;
    sol.gin_p = st.gin_p;
    sol.gmod_q = 0.0;
    sol.gmod_p = detail::clamp_nonnegative(st.gmod_p, "solve_for_mu: gmod_p");
    sol.nu_bar = st.nu_bar;
    sol.nu_out = st.nu_out;
    sol.chi = g(sol.nu_bar - 0.5) - g(sol.nu_out - 0.5);
    sol.mu = mu;
    sol.swap_applied = false;
    return {lambda_i, detail::finish(noise, sol)};
}

}  // namespace capwater
