#include <doctest.h>

#include <array>
#include <cmath>

#include "capwater/one_mode.hpp"
#include "capwater/oracle.hpp"
#include "test_helpers.hpp"

using namespace capwater;
using testutil::g_ref;

TEST_CASE("brute force one mode: symmetric hand value") {
    const auto res = oracle::brute_force_one_mode(OneModeNoise(1.0, 1.0), 3.0);
    CHECK(std::abs(res.chi - (g_ref(2.0) - g_ref(1.0))) <= 1e-4);
}

TEST_CASE("brute force one mode: matches water filling and finds gmod_q = 0") {
    const OneModeNoise noise(2.0, 0.5);
    const auto above = solve_above_threshold(noise, InputEnergy(5.0));
    const auto res = oracle::brute_force_one_mode(noise, 5.0);
    CHECK(std::abs(res.chi - above.chi) <= 1e-4);
    CHECK(std::abs(res.gin_q - above.gin_q) <= 0.05);

    const auto below = oracle::brute_force_one_mode(noise, 2.0);
    // Argmax sits on the gmod_q = 0 edge below threshold.
    const double budget = 2.0 - below.gin_q - 0.25 / below.gin_q;
    CHECK(below.split * budget <= 1e-3);
    CHECK_THROWS_AS(oracle::brute_force_one_mode(noise, 0.5), domain_error);
}

TEST_CASE("brute force finite: symmetry and vacuum") {
    const std::vector<OneModeNoise> two{OneModeNoise(1.0, 1.0), OneModeNoise(1.0, 1.0)};
    const double chi = oracle::brute_force_finite(two, 6.0);
    // Optimal split is lambda/2 per mode by symmetry.
    CHECK(std::abs(chi - 2.0 * (g_ref(2.0) - g_ref(1.0))) <= 1e-4);
    CHECK(oracle::brute_force_finite(two, 2.0) == doctest::Approx(0.0).epsilon(1e-9));
    const std::vector<OneModeNoise> three(3, OneModeNoise(1.0, 1.0));
    CHECK_THROWS_AS(oracle::brute_force_finite(three, 9.0), domain_error);
}

TEST_CASE("stationarity residuals at the water-filling optimum") {
    const OneModeNoise noise(2.0, 0.5);
    const auto sol = solve_above_threshold(noise, InputEnergy(5.0));
    const auto res = oracle::stationarity_residuals(noise, sol);
    for (double r : res) CHECK(std::abs(r) <= 1e-8);

    // Symmetric noise: the two input equations coincide.
    const OneModeNoise sym(1.0, 1.0);
    const auto ssol = solve_above_threshold(sym, InputEnergy(3.0));
    const auto sres = oracle::stationarity_residuals(sym, ssol);
    CHECK(std::abs(sres[0] - sres[1]) <= 1e-12);

    // Perturbed solution violates stationarity visibly.
    auto bad = sol;
    bad.gin_q += 0.01;
    bad.gin_p = 0.25 / bad.gin_q;
    const auto bres = oracle::stationarity_residuals(noise, bad);
    double worst = 0.0;
    for (double r : bres) worst = std::max(worst, std::abs(r));
    CHECK(worst > 1e-3);

    const auto vac = solve_one_mode(noise, InputEnergy(1.0));
    CHECK_THROWS_AS(oracle::stationarity_residuals(noise, vac), regime_error);
}

namespace {

// chi as a two-variable function with purity and the energy budget embedded,
// for finite-difference Hessian checks.
double chi2(const OneModeNoise& noise, double lambda, double gin_q, double gmod_q) {
    const double gin_p = 0.25 / gin_q;
    const double gmod_p = lambda - gin_q - gin_p - gmod_q;
    return oracle::chi_direct(noise, gin_q, gin_p, gmod_q, gmod_p);
}

}  // namespace

TEST_CASE("hessian check: water filling") {
    const OneModeNoise noise(2.0, 0.5);
    const auto sol = solve_above_threshold(noise, InputEnergy(5.0));
    const auto rep = oracle::hessian_check(noise, sol);
    CHECK(rep.var_eigs[0] < 0.0);
    CHECK(rep.var_eigs[1] < 0.0);
    CHECK(rep.has_cov_block);
    CHECK(rep.cov_eigs[0] < 0.0);
    CHECK(rep.cov_eigs[1] < 0.0);

    // Finite-difference Hessian of chi(gin_q, gmod_q) reproduces the
    // analytic block eigenvalues within 1%.
    const double h = 1e-5;
    const double f0 = chi2(noise, 5.0, sol.gin_q, sol.gmod_q);
    const double fqq = (chi2(noise, 5.0, sol.gin_q + h, sol.gmod_q) - 2 * f0 +
                        chi2(noise, 5.0, sol.gin_q - h, sol.gmod_q)) / (h * h);
    const double fmm = (chi2(noise, 5.0, sol.gin_q, sol.gmod_q + h) - 2 * f0 +
                        chi2(noise, 5.0, sol.gin_q, sol.gmod_q - h)) / (h * h);
    const double fqm = (chi2(noise, 5.0, sol.gin_q + h, sol.gmod_q + h) -
                        chi2(noise, 5.0, sol.gin_q + h, sol.gmod_q - h) -
                        chi2(noise, 5.0, sol.gin_q - h, sol.gmod_q + h) +
                        chi2(noise, 5.0, sol.gin_q - h, sol.gmod_q - h)) /
                       (4.0 * h * h);
    const double tr = fqq + fmm, det = fqq * fmm - fqm * fqm;
    const double disc = std::sqrt(tr * tr - 4.0 * det);
    const double e1 = 0.5 * (tr + disc), e2 = 0.5 * (tr - disc);
    CHECK(e1 == doctest::Approx(rep.var_eigs[0]).epsilon(0.01));
    CHECK(e2 == doctest::Approx(rep.var_eigs[1]).epsilon(0.01));
}

TEST_CASE("hessian check: single quadrature and vacuum") {
    const OneModeNoise noise(2.0, 0.5);
    const auto sol = solve_below_threshold(noise, InputEnergy(2.0));
    const auto rep = oracle::hessian_check(noise, sol);
    CHECK(rep.var_eigs[0] < 0.0);  // dF/dgin_q
    CHECK(rep.var_eigs[1] < 0.0);  // d2L/d(gin_qp)2

    const auto vac = solve_one_mode(noise, InputEnergy(1.0));
    CHECK_THROWS_AS(oracle::hessian_check(noise, vac), regime_error);
}

TEST_CASE("concavity probe across the threshold") {
    const OneModeNoise noise(2.0, 0.5);
    const auto grid = testutil::linspace(1.0, 2.0 * lambda_threshold(noise), 200);
    const auto rep = oracle::concavity_probe(noise, grid);
    CHECK(rep.mu_strictly_decreasing);
    CHECK(rep.max_chi_second_diff <= 1e-8);

    const OneModeNoise sym(1.0, 1.0);
    const auto srep = oracle::concavity_probe(sym, testutil::linspace(1.0, 8.0, 100));
    CHECK(srep.mu_strictly_decreasing);
    CHECK(srep.max_chi_second_diff <= 1e-8);

    // No jump in chi or mu across the threshold.
    const double lthr = lambda_threshold(noise);
    const auto lo = solve_one_mode(noise, InputEnergy(lthr * (1 - 1e-9)));
    const auto hi = solve_one_mode(noise, InputEnergy(lthr * (1 + 1e-9)));
    CHECK(std::abs(lo.chi - hi.chi) <= 1e-7);
    CHECK(std::abs(lo.mu - hi.mu) <= 1e-7);
}

TEST_CASE("oracle never beats the solver (seeded instances)") {
    testutil::Rng rng(1234);
    const oracle::GridSpec grid;
    for (int i = 0; i < 12; ++i) {
        const double gp = rng.uniform(0.05, 2.0);
        const double gq = gp * rng.uniform(1.0, 20.0);
        const OneModeNoise noise(gq, gp);
        const double lambda = rng.uniform(1.0, 2.0 * lambda_threshold(noise));
        const auto sol = solve_one_mode(noise, InputEnergy(lambda));
        const auto ora = oracle::brute_force_one_mode(noise, lambda, grid);
        CHECK(ora.chi <= sol.chi + 1e-6);
        CHECK(std::abs(ora.chi - sol.chi) <= 1e-4);
        if (lambda > 1.0 + 1e-6) {
            // Argmax within 2 steps of the oracle's initial grid.
            const double root = std::sqrt(lambda * lambda - 1.0);
            const double lo = std::max(0.25, 0.5 * (lambda - root));
            const double hi = std::min(2.0 * std::sqrt(gq / gp), 0.5 * (lambda + root));
            const double step = (hi - lo) / (grid.gin_q_points - 1);
            CHECK(std::abs(ora.gin_q - sol.gin_q) <= 2.0 * step + 1e-9);
        }
    }
}

TEST_CASE("cross terms do not improve chi (4-D spot check)") {
    const std::array<std::pair<OneModeNoise, double>, 3> instances{{
        {OneModeNoise(2.0, 0.5), 2.0},
        {OneModeNoise(2.0, 0.5), 5.0},
        {OneModeNoise(4.0, 1.0), 3.0},
    }};
    for (const auto& [noise, lambda] : instances) {
        const auto sol = solve_one_mode(noise, InputEnergy(lambda));
        const double best_cross = oracle::brute_force_one_mode_cross(noise, lambda);
        CHECK(best_cross <= sol.chi + 1e-6);
    }
}
