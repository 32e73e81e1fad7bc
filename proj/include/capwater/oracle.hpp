#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "capwater/core.hpp"
#include "capwater/one_mode.hpp"

/// Independent brute-force verification: direct Holevo-quantity maximization
/// on small instances and executable checks of the analytic stationarity,
/// Hessian and concavity claims.  Nothing here reuses the solver path it is
/// meant to check.
namespace capwater::oracle {

/// Grid resolutions for the brute-force searches.
struct GridSpec {
    int gin_q_points = 96;
    int split_points = 96;
    int refine_rounds = 3;

    void validate() const {
        if (gin_q_points < 16 || split_points < 16)
            throw domain_error("GridSpec: resolutions must be >= 16");
        if (refine_rounds < 0)
            throw domain_error("GridSpec: refine_rounds must be >= 0");
    }
};

/// Holevo quantity of an explicit one-mode encoding, cross terms allowed.
/// Returns -inf for unphysical candidates.
inline double chi_direct(const OneModeNoise& noise, double gin_q, double gin_p,
                         double gmod_q, double gmod_p, double c_in = 0.0,
                         double c_mod = 0.0) {
    if (!(gin_q > 0.0) || !(gin_p > 0.0) || gmod_q < 0.0 || gmod_p < 0.0)
        return -std::numeric_limits<double>::infinity();
    if (gmod_q * gmod_p - c_mod * c_mod < 0.0)
        return -std::numeric_limits<double>::infinity();
    const double gout_q = gin_q + noise.gq;
    const double gout_p = gin_p + noise.gp;
    const double c_tot = c_in + c_mod;
    const double nu_out_sq = gout_q * gout_p - c_in * c_in;
    const double nu_bar_sq =
        (gout_q + gmod_q) * (gout_p + gmod_p) - c_tot * c_tot;
    if (!(nu_out_sq >= 0.25) || !(nu_bar_sq >= 0.25))
        return -std::numeric_limits<double>::infinity();
    return g(std::sqrt(nu_bar_sq) - 0.5) - g(std::sqrt(nu_out_sq) - 0.5);
}

struct BruteForceResult {
    double chi;     ///< best Holevo quantity found, bits
    double gin_q;   ///< argmax input variance (canonical orientation)
    double split;   ///< argmax modulation split gmod_q / (gmod_q + gmod_p)
};

/// Exhaustive grid search over (gin_q, modulation split) with purity and
/// the energy budget embedded; refine_rounds of window shrinking around the
/// incumbent.  Ties break to the lexicographically smallest grid point.
inline BruteForceResult brute_force_one_mode(const OneModeNoise& noise,
                                             double lambda,
                                             const GridSpec& grid = {}) {
    grid.validate();
    if (!(lambda >= 1.0))
        throw domain_error("brute_force_one_mode: requires lambda >= 1");

    // Energy feasibility: gin_q + 1/(4 gin_q) <= lambda.
    const double root = std::sqrt(std::max(lambda * lambda - 1.0, 0.0));
    const double lo_energy = 0.5 * (lambda - root);
    const double hi_energy = 0.5 * (lambda + root);
    const double ratio = (noise.gp > 0.0)
                             ? std::sqrt(noise.gq / noise.gp)
                             : std::numeric_limits<double>::infinity();
    double lo = std::max(0.25, lo_energy);
    double hi = std::min(std::isfinite(ratio) ? 2.0 * ratio : hi_energy,
                         hi_energy);
    double s_lo = 0.0, s_hi = 1.0;

    BruteForceResult best{0.0, 0.5, 0.0};  // vacuum point always feasible
    const int rounds = 1 + grid.refine_rounds;
    for (int round = 0; round < rounds; ++round) {
        if (!(lo < hi)) break;
        const double dg = (hi - lo) / (grid.gin_q_points - 1);
        const double ds = (s_hi - s_lo) / (grid.split_points - 1);
        double best_g = best.gin_q, best_s = best.split;
        for (int i = 0; i < grid.gin_q_points; ++i) {
            const double gq_in = lo + i * dg;
            const double gp_in = 0.25 / gq_in;
            const double budget = lambda - gq_in - gp_in;
            if (budget < 0.0) continue;
            for (int j = 0; j < grid.split_points; ++j) {
                const double s = s_lo + j * ds;
                const double chi = chi_direct(noise, gq_in, gp_in, s * budget,
                                              (1.0 - s) * budget);
                if (chi > best.chi) {
                    best = {chi, gq_in, s};
                    best_g = gq_in;
                    best_s = s;
                }
            }
        }
        const double wg = 2.0 * dg, ws = 2.0 * ds;
        lo = std::max(lo, best_g - wg);
        hi = std::min(hi, best_g + wg);
        s_lo = std::max(0.0, best_s - ws);
        s_hi = std::min(1.0, best_s + ws);
    }
    return best;
}

/// Coarse 4-D search that also scans the covariance cross terms of the
/// input and modulation matrices; guards the zero-cross-term conclusion
/// empirically.  Returns the best chi found.
inline double brute_force_one_mode_cross(const OneModeNoise& noise,
                                         double lambda, int points = 24) {
    const double root = std::sqrt(std::max(lambda * lambda - 1.0, 0.0));
    const double lo_energy = 0.5 * (lambda - root);
    const double hi_energy = 0.5 * (lambda + root);
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < points; ++i) {
        const double gq_in =
            lo_energy + (hi_energy - lo_energy) * i / (points - 1);
        // det(gamma_in) = 1/4 including the cross term.
        const double c_in_max = 0.45 * gq_in;  // keep gin_p finite
        for (int ci = 0; ci < points; ++ci) {
            const double c_in = -c_in_max + 2.0 * c_in_max * ci / (points - 1);
            const double gp_in = (0.25 + c_in * c_in) / gq_in;
            const double budget = lambda - gq_in - gp_in;
            if (budget < 0.0) continue;
            for (int j = 0; j < points; ++j) {
                const double s = static_cast<double>(j) / (points - 1);
                const double mq = s * budget, mp = (1.0 - s) * budget;
                const double c_mod_max = std::sqrt(mq * mp);
                for (int cj = 0; cj < points; ++cj) {
                    const double c_mod =
                        -c_mod_max + 2.0 * c_mod_max * cj / (points - 1);
                    best = std::max(best, chi_direct(noise, gq_in, gp_in, mq,
                                                     mp, c_in, c_mod));
                }
            }
        }
    }
    return best;
}

/// Two-mode brute force: outer grid over the energy split, inner one-mode
/// oracles.  n <= 2 by construction (cost control).
inline double brute_force_finite(const std::vector<OneModeNoise>& modes,
                                 double lambda, const GridSpec& grid = {}) {
    grid.validate();
    if (modes.size() > 2)
        throw domain_error("brute_force_finite: supports n <= 2 modes");
    if (modes.empty()) throw domain_error("brute_force_finite: empty ensemble");
    if (modes.size() == 1)
        return brute_force_one_mode(modes[0], lambda, grid).chi;
    if (!(lambda >= 2.0))
        throw domain_error("brute_force_finite: requires lambda >= n");

    GridSpec inner = grid;
    inner.gin_q_points = std::max(16, grid.gin_q_points / 2);
    inner.split_points = std::max(16, grid.split_points / 2);
    inner.refine_rounds = std::max(0, grid.refine_rounds - 1);

    double lo = 1.0, hi = lambda - 1.0;
    double best = 0.0, best_l1 = 0.5 * lambda;
    const int rounds = 1 + grid.refine_rounds;
    const int pts = grid.gin_q_points;
    for (int round = 0; round < rounds; ++round) {
        const double dl = (hi - lo) / (pts - 1);
        double round_best_l1 = best_l1;
        for (int i = 0; i < pts; ++i) {
            const double l1 = lo + i * dl;
            const double chi = brute_force_one_mode(modes[0], l1, inner).chi +
                               brute_force_one_mode(modes[1], lambda - l1, inner).chi;
            if (chi > best) {
                best = chi;
                round_best_l1 = l1;
            }
        }
        best_l1 = round_best_l1;
        lo = std::max(1.0, best_l1 - 2.0 * dl);
        hi = std::min(lambda - 1.0, best_l1 + 2.0 * dl);
    }
    return best;
}

namespace detail {

inline double gin_q_upper(const OneModeNoise& noise) {
    return (noise.gp > 0.0) ? 0.5 * std::sqrt(noise.gq / noise.gp)
                            : std::numeric_limits<double>::infinity();
}

// The analytic machinery works in the canonical orientation; undo a
// recorded swap before checking a solution against it.
inline OneModeSolution canonical(const OneModeSolution& sol) {
    OneModeSolution c = sol;
    if (c.swap_applied) {
        std::swap(c.gin_q, c.gin_p);
        std::swap(c.gmod_q, c.gmod_p);
        c.swap_applied = false;
    }
    return c;
}

}  // namespace detail

/// Residuals of the six stationarity equations of the full Lagrangian at a
/// water-filling solution (cross terms identically zero).  The purity
/// multiplier tau is recovered from the first equation; every residual of a
/// true optimum is <= 1e-8.
inline std::array<double, 6> stationarity_residuals(const OneModeNoise& noise,
                                                    const OneModeSolution& solution) {
    if (solution.regime != Regime::WaterFilling)
        throw regime_error("stationarity_residuals: needs a water-filling solution");
    const auto sol = detail::canonical(solution);
    const double gout_q = sol.gin_q + noise.gq;
    const double gout_p = sol.gin_p + noise.gp;
    const double gbar_q = gout_q + sol.gmod_q;
    const double gbar_p = gout_p + sol.gmod_p;
    const double nu_bar = std::sqrt(gbar_q * gbar_p);
    const double nu_out = std::sqrt(gout_q * gout_p);
    const double kb = kappa(nu_bar), ko = kappa(nu_out);
    const double mu = sol.mu;
    const double tau = (kb * gbar_p - ko * gout_p - mu) / sol.gin_p;
    return {
        kb * gbar_p - ko * gout_p - mu - tau * sol.gin_p,
        kb * gbar_q - ko * gout_q - mu - tau * sol.gin_q,
        kb * gbar_p - mu,
        kb * gbar_q - mu,
        0.0,  // cross-term equations with gamma_in^qp = gamma_mod^qp = 0
        0.0,
    };
}

/// Second-derivative (Hessian block) report at a solution.  All entries
/// that apply to the regime must be strictly negative.
struct HessianReport {
    Regime regime;
    // Variance block of chi(gin_q, gmod_q) [water-filling] or the scalar
    // d2chi/dgin_q2 [single-quadrature] packed into var_eigs[0].
    std::array<double, 2> var_eigs;
    // Cross-term block eigenvalues (water-filling, asymmetric noise only).
    std::array<double, 2> cov_eigs;
    bool has_cov_block;
};

inline HessianReport hessian_check(const OneModeNoise& noise,
                                   const OneModeSolution& solution) {
    const auto sol = detail::canonical(solution);
    const double gout_q = sol.gin_q + noise.gq;
    const double gout_p = sol.gin_p + noise.gp;
    const double nu_out = std::sqrt(gout_q * gout_p);
    HessianReport rep{};
    rep.regime = solution.regime;

    if (solution.regime == Regime::WaterFilling) {
        const double nu_bar = sol.nu_bar;
        const double A = g_prime(nu_bar - 0.5) / nu_bar;
        const double B = g_prime(nu_out - 0.5) * noise.gq /
                         (nu_out * 4.0 * sol.gin_q * sol.gin_q * sol.gin_q);
        const double disc = std::sqrt(A * A + 0.25 * B * B);
        rep.var_eigs = {-A - 0.5 * B + disc, -A - 0.5 * B - disc};
        if (noise.gq > noise.gp) {
            const double c = 2.0 * std::sqrt(noise.gq * noise.gp) *
                             (noise.gq + noise.gp) / (noise.gq - noise.gp);
            const double A2 = kappa(nu_bar);
            const double B2 = kappa(nu_out) * c;
            const double disc2 = std::sqrt(A2 * A2 + 0.25 * B2 * B2);
            rep.cov_eigs = {-A2 - 0.5 * B2 + disc2, -A2 - 0.5 * B2 - disc2};
            rep.has_cov_block = true;
        }
        return rep;
    }
    if (solution.regime == Regime::SingleQuadrature) {
        // d2L/d(gin_qp)2 in closed form; d2chi/d(gin_q)2 = dF/dgin_q by a
        // central difference of the residual.
        const double qp_second =
            -kappa(sol.nu_bar) - kappa(nu_out) * (gout_q / sol.gin_q - 1.0);
        const double lambda = sol.lambda();
        const double h = 1e-6 * std::max(1.0, sol.gin_q);
        const double thr = detail::gin_q_upper(noise);
        const double xl = std::max(sol.gin_q - h, 0.5);
        const double xr = std::min(sol.gin_q + h, thr - 1e-9);
        const double dF = (residual_F(noise, lambda, xr) -
                           residual_F(noise, lambda, xl)) /
                          (xr - xl);
        rep.var_eigs = {dF, qp_second};
        rep.cov_eigs = {qp_second, qp_second};
        rep.has_cov_block = false;
        return rep;
    }
    throw regime_error("hessian_check: vacuum solution has no interior Hessian");
}

/// mu(lambda) monotonicity and chi(lambda) concavity over a lambda grid
/// spanning both regimes.
struct ConcavityReport {
    bool mu_strictly_decreasing;
    double max_mu_step;          ///< max of mu[i+1] - mu[i] (negative if ok)
    double max_chi_second_diff;  ///< max central second difference of chi
};

inline ConcavityReport concavity_probe(const OneModeNoise& noise,
                                       const std::vector<double>& lambda_grid,
                                       const SolverTolerances& tol = {}) {
    std::vector<double> mu(lambda_grid.size()), chi(lambda_grid.size());
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        const auto sol = solve_one_mode(noise, InputEnergy(lambda_grid[i]), tol);
        mu[i] = sol.mu;
        chi[i] = sol.chi;
    }
    ConcavityReport rep{true, -std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) {
        rep.max_mu_step = std::max(rep.max_mu_step, mu[i + 1] - mu[i]);
        if (!(mu[i + 1] < mu[i])) rep.mu_strictly_decreasing = false;
    }
    for (std::size_t i = 1; i + 1 < chi.size(); ++i)
        rep.max_chi_second_diff = std::max(
            rep.max_chi_second_diff, chi[i - 1] - 2.0 * chi[i] + chi[i + 1]);
    return rep;
}

}  // namespace capwater::oracle
