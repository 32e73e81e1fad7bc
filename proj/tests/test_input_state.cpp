#include <doctest.h>

#include <cmath>

#include "capwater/input_state.hpp"
#include "test_helpers.hpp"

using namespace capwater;

namespace {
SolverTolerances fast_tol() {
    SolverTolerances tol;
    tol.grid_size = 512;
    return tol;
}
}  // namespace

TEST_CASE("gm_global_wf_input: uncorrelated limit and parity") {
    const auto [q0, p0] = gm_global_wf_input(0.0, 0);
    CHECK(q0 == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p0 == doctest::Approx(0.5).epsilon(1e-12));
    for (int k = 1; k <= 4; ++k) {
        const auto [qk, pk] = gm_global_wf_input(0.0, k);
        CHECK(std::abs(qk) <= 1e-12);
        CHECK(std::abs(pk) <= 1e-12);
    }
    for (int k = 0; k <= 5; ++k) {
        const auto [qk, pk] = gm_global_wf_input(0.5, k);
        CHECK(pk == doctest::Approx((k % 2 == 0 ? 1.0 : -1.0) * qk).epsilon(1e-14));
    }
    CHECK_THROWS_AS(gm_global_wf_input(1.0, 0), domain_error);
    CHECK_THROWS_AS(gm_global_wf_input(0.5, -1), domain_error);
}

TEST_CASE("gm_global_wf_input: quadrature stability across grid sizes") {
    SolverTolerances coarse;
    coarse.grid_size = 1024;
    SolverTolerances fine;
    fine.grid_size = 4096;
    const auto [qa, pa] = gm_global_wf_input(0.5, 0, coarse);
    const auto [qb, pb] = gm_global_wf_input(0.5, 0, fine);
    CHECK(qa == doctest::Approx(qb).epsilon(1e-10));
    CHECK(qa > 0.5);  // squeezed input has excess reduced variance
}

TEST_CASE("input_fourier_coefficients: matches closed route in global WF") {
    const double N = 1.0, phi = 0.5;
    const double nbar = gm_threshold_nbar(N, phi) + 1.0;
    const auto sol = solve_mu_spectral(NoiseModel::gauss_markov(N, phi), nbar, fast_tol());
    REQUIRE(sol.rate_is_global_wf);
    const auto cov = input_fourier_coefficients(sol, 6);
    for (int k = 0; k <= 6; ++k) {
        const auto [qk, pk] = gm_global_wf_input(phi, k, fast_tol());
        CHECK(cov.q_diagonals[k] == doctest::Approx(qk).epsilon(1e-7));
        CHECK(cov.p_diagonals[k] == doctest::Approx(pk).epsilon(1e-7));
        CHECK(std::abs(cov.q_diagonals[k]) <= cov.q_diagonals[0] + 1e-12);
    }
    // k = 0 equal across quadratures and at least the vacuum variance.
    CHECK(cov.q_diagonals[0] == doctest::Approx(cov.p_diagonals[0]).epsilon(1e-10));
    CHECK(cov.q_diagonals[0] >= 0.5 - 1e-12);
    CHECK(cov.p_diagonals[0] >= 0.5 - 1e-12);
    CHECK_THROWS_AS(input_fourier_coefficients(sol, -1), domain_error);
}

TEST_CASE("Parseval: mean of the input spectrum equals the k = 0 diagonal") {
    const auto sol = solve_mu_spectral(NoiseModel::gauss_markov(1.0, 0.85), 1.0, fast_tol());
    double mean = 0.0;
    for (std::size_t j = 0; j < sol.x.size(); ++j) mean += sol.w[j] * sol.gin_q[j];
    mean /= pi;
    const auto cov = input_fourier_coefficients(sol, 0);
    CHECK(cov.q_diagonals[0] == doctest::Approx(mean).epsilon(1e-13));
}

TEST_CASE("truncated Toeplitz reconstruction within 1% at k_max = 64") {
    for (double phi : {0.5, 0.9}) {
        // Below threshold: kinked input spectrum, the harder case.
        const auto sol =
            solve_mu_spectral(NoiseModel::gauss_markov(1.0, phi), 1.0, fast_tol());
        const auto cov = input_fourier_coefficients(sol, 64);
        for (std::size_t j = 0; j < sol.x.size(); j += 37) {
            const double rec = toeplitz_reconstruct(cov.q_diagonals, sol.x[j]);
            CHECK(rec == doctest::Approx(sol.gin_q[j]).epsilon(0.01));
        }
    }
}

TEST_CASE("entanglement witness: coherent at phi = 0, entangled beyond") {
    const auto w0 = entanglement_witness_gm(0.0);
    CHECK(w0.det0 == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_FALSE(w0.entangled);

    double prev = 0.25;
    for (double phi : {0.2, 0.5, 0.7, 0.9}) {
        const auto w = entanglement_witness_gm(phi);
        CHECK(w.entangled);
        CHECK(w.det0 > prev);
        prev = w.det0;
    }

    // Witness from a solved solution agrees with the closed route.
    const double phi = 0.5;
    const double nbar = gm_threshold_nbar(1.0, phi) + 0.5;
    const auto sol = solve_mu_spectral(NoiseModel::gauss_markov(1.0, phi), nbar, fast_tol());
    const auto ws = entanglement_witness(sol);
    const auto wc = entanglement_witness_gm(phi, fast_tol());
    CHECK(ws.det0 == doctest::Approx(wc.det0).epsilon(1e-8));
    CHECK(ws.entangled);
}

TEST_CASE("modulated output is proportional to the identity in global WF") {
    const auto cert = modulated_output_covariance(1.0, 0.5, 3.0, fast_tol());
    CHECK(cert.scalar == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(cert.max_nonzero_coeff < 1e-10);

    const auto flat = modulated_output_covariance(1.0, 0.0, 2.0, fast_tol());
    CHECK(flat.scalar == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(flat.max_nonzero_coeff < 1e-10);

    CHECK_THROWS_AS(modulated_output_covariance(1.0, 0.5, 2.0, fast_tol()),
                    regime_error);
}
