#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "capwater/core.hpp"
#include "capwater/spectral.hpp"

/// Reconstruction of the optimal input covariance in the original
/// correlated basis: Toeplitz diagonals from Fourier coefficients of the
/// solved spectra, the entanglement witness, and the modulated-output
/// identity certificate.
namespace capwater {

/// k-th diagonals of the (asymptotically Toeplitz) input covariance blocks.
struct ToeplitzCovariance {
    std::vector<double> q_diagonals;  ///< k = 0..k_max
    std::vector<double> p_diagonals;
};

namespace detail {

// (1/pi) sum w_j cos(k x_j) f_j -- the [0, 2pi] Fourier coefficient of the
// even mirror extension of samples on [0, pi].
inline double cos_coefficient(const std::vector<double>& x,
                              const std::vector<double>& w,
                              const std::vector<double>& f, int k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        acc += w[j] * std::cos(k * x[j]) * f[j];
    return acc / pi;
}

}  // namespace detail

/// Toeplitz diagonals of the optimal input state: the spectra on [0, pi]
/// are mirror-extended to [0, 2pi], so every coefficient is real.
inline ToeplitzCovariance input_fourier_coefficients(const SpectralSolution& solution,
                                                     int k_max) {
    if (k_max < 0) throw domain_error("input_fourier_coefficients: k_max >= 0");
    ToeplitzCovariance cov;
    cov.q_diagonals.reserve(k_max + 1);
    cov.p_diagonals.reserve(k_max + 1);
    for (int k = 0; k <= k_max; ++k) {
        cov.q_diagonals.push_back(
            detail::cos_coefficient(solution.x, solution.w, solution.gin_q, k));
        cov.p_diagonals.push_back(
            detail::cos_coefficient(solution.x, solution.w, solution.gin_p, k));
    }
    return cov;
}

/// Reconstruct the spectrum value at x from truncated Toeplitz diagonals:
/// f(x) = c0 + 2 sum_k c_k cos(kx).
inline double toeplitz_reconstruct(const std::vector<double>& diagonals, double x) {
    if (diagonals.empty()) return 0.0;
    double acc = diagonals[0];
    for (std::size_t k = 1; k < diagonals.size(); ++k)
        acc += 2.0 * diagonals[k] * std::cos(k * x);
    return acc;
}

/// Closed-route input diagonals in the Gauss-Markov global water-filling
/// regime: the input spectrum is half the square root of the noise spectrum
/// ratio, independent of N.  Returns the (q, p) pair; they differ by the
/// parity factor (-1)^k.
inline std::pair<double, double> gm_global_wf_input(double phi, int k,
                                                    const SolverTolerances& tol = {}) {
    if (!(phi >= 0.0) || !(phi < 1.0))
        throw domain_error("gm_global_wf_input: requires 0 <= phi < 1");
    if (k < 0) throw domain_error("gm_global_wf_input: requires k >= 0");
    const auto gin_q = [&](double x) {
        const double c = 2.0 * phi * std::cos(x);
        return 0.5 * std::sqrt((1.0 + phi * phi + c) / (1.0 + phi * phi - c));
    };
    const double q = integrate([&](double x) { return std::cos(k * x) * gin_q(x); },
                               0.0, pi, tol) / pi;
    const double p = (k % 2 == 0) ? q : -q;
    return {q, p};
}

/// det of the reduced single-mode input covariance and the mixedness
/// (entanglement) verdict.
struct WitnessReport {
    double det0;     ///< gamma_in,0^q * gamma_in,0^p
    bool entangled;  ///< det0 > 1/4 (mixed reduced state)
};

inline WitnessReport entanglement_witness(const SpectralSolution& solution) {
    const double q0 = detail::cos_coefficient(solution.x, solution.w, solution.gin_q, 0);
    const double p0 = detail::cos_coefficient(solution.x, solution.w, solution.gin_p, 0);
    const double det0 = q0 * p0;
    return {det0, det0 > 0.25 + 1e-10};
}

/// Closed-route witness for Gauss-Markov noise in the global water-filling
/// regime (N-independent).
inline WitnessReport entanglement_witness_gm(double phi,
                                             const SolverTolerances& tol = {}) {
    const auto [q0, p0] = gm_global_wf_input(phi, 0, tol);
    const double det0 = q0 * p0;
    return {det0, det0 > 0.25 + 1e-10};
}

/// Scalar overall modulated output in the global water-filling regime,
/// with a certificate that every k >= 1 Fourier coefficient of the output
/// spectra vanishes (the optimal encoding cancels the noise correlations).
struct ModulatedOutputCertificate {
    double scalar;             ///< nbar + N + 1/2
    double max_nonzero_coeff;  ///< max |coefficient| over k = 1..k_checked
    int k_checked;
};

inline ModulatedOutputCertificate modulated_output_covariance(
    double N, double phi, double nbar, const SolverTolerances& tol = {},
    int k_checked = 8) {
    if (!(nbar >= gm_threshold_nbar(N, phi)))
        throw regime_error("modulated_output_covariance: below the global "
                           "water-filling threshold");
    const auto sol = solve_mu_spectral(NoiseModel::gauss_markov(N, phi), nbar, tol);
    const std::size_t n = sol.x.size();
    std::vector<double> bar_q(n), bar_p(n);
    for (std::size_t j = 0; j < n; ++j) {
        bar_q[j] = sol.gin_q[j] + sol.gmod_q[j] + sol.genv_q[j];
        bar_p[j] = sol.gin_p[j] + sol.gmod_p[j] + sol.genv_p[j];
    }
    ModulatedOutputCertificate cert{};
    cert.scalar = nbar + N + 0.5;
    cert.k_checked = k_checked;
    cert.max_nonzero_coeff = 0.0;
    for (int k = 1; k <= k_checked; ++k) {
        cert.max_nonzero_coeff = std::max(
            cert.max_nonzero_coeff,
            std::abs(detail::cos_coefficient(sol.x, sol.w, bar_q, k)));
        cert.max_nonzero_coeff = std::max(
            cert.max_nonzero_coeff,
            std::abs(detail::cos_coefficient(sol.x, sol.w, bar_p, k)));
    }
    return cert;
}

}  // namespace capwater
