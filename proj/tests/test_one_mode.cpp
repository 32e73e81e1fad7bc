#include <doctest.h>

#include <cmath>

#include "capwater/one_mode.hpp"
#include "capwater/oracle.hpp"
#include "test_helpers.hpp"

using namespace capwater;
using testutil::g_ref;

namespace {

// Overall modulated output variances of a solution in canonical orientation.
struct Bars {
    double q, p;
};

Bars bars(const OneModeNoise& noise, OneModeSolution s) {
    if (s.swap_applied) {
        std::swap(s.gin_q, s.gin_p);
        std::swap(s.gmod_q, s.gmod_p);
    }
    return {s.gin_q + s.gmod_q + noise.gq, s.gin_p + s.gmod_p + noise.gp};
}

}  // namespace

TEST_CASE("noise canonicalization and validation") {
    OneModeNoise n(0.5, 2.0);
    CHECK(n.gq == 2.0);
    CHECK(n.gp == 0.5);
    CHECK(n.swapped);
    OneModeNoise m(2.0, 0.5);
    CHECK_FALSE(m.swapped);
    CHECK_THROWS_AS(OneModeNoise(-1.0, 0.5), domain_error);
}

TEST_CASE("input energy type") {
    CHECK(InputEnergy::from_nbar(2.0).lambda == 5.0);
    CHECK(InputEnergy(1.0).nbar() == 0.0);
    CHECK_THROWS_AS(InputEnergy(0.9), domain_error);
    CHECK_THROWS_AS(InputEnergy::from_nbar(-0.1), domain_error);
}

TEST_CASE("lambda_threshold") {
    CHECK(lambda_threshold(OneModeNoise(1.0, 1.0)) == doctest::Approx(1.0));
    CHECK(lambda_threshold(OneModeNoise(2.0, 0.5)) == doctest::Approx(3.5));
    CHECK(lambda_threshold(OneModeNoise(4.0, 1.0)) == doctest::Approx(5.0));
    CHECK_THROWS_AS(lambda_threshold(OneModeNoise(2.0, 0.0)), domain_error);
}

TEST_CASE("mu_threshold") {
    // (2, 0.5): (1/2) g'(2.5) = (1/2) log2(3.5/2.5)
    CHECK(mu_threshold(OneModeNoise(2.0, 0.5)) ==
          doctest::Approx(0.5 * std::log2(1.4)).epsilon(1e-14));
    CHECK(mu_threshold(OneModeNoise(1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-14));
    for (double N : {0.5, 1.0, 3.0})
        CHECK(mu_threshold(OneModeNoise(N, N)) ==
              doctest::Approx(0.5 * g_prime(N)).epsilon(1e-14));
}

TEST_CASE("mu_zero") {
    CHECK(mu_zero(OneModeNoise(1.0, 1.0)) == doctest::Approx(0.5).epsilon(1e-14));
    const double expect =
        0.5 * std::log2((std::sqrt(2.5) + 0.5) / (std::sqrt(2.5) - 0.5)) * std::sqrt(2.5);
    CHECK(mu_zero(OneModeNoise(2.0, 0.5)) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(mu_zero(OneModeNoise(2.0, 0.5)) == doctest::Approx(0.74693).epsilon(1e-4));
    CHECK(std::isinf(mu_zero(OneModeNoise(0.0, 0.0))));
    // mu_0 >= mu_thr, equality iff symmetric.
    testutil::Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        const double gp = rng.uniform(0.05, 2.0);
        const double gq = gp * rng.uniform(1.0, 20.0);
        OneModeNoise n(gq, gp);
        CHECK(mu_zero(n) >= mu_threshold(n) - 1e-12);
    }
    CHECK(mu_zero(OneModeNoise(1.0, 1.0)) ==
          doctest::Approx(mu_threshold(OneModeNoise(1.0, 1.0))).epsilon(1e-14));
}

TEST_CASE("solve_above_threshold: worked example (2, 0.5), lambda = 5") {
    const OneModeNoise noise(2.0, 0.5);
    const auto sol = solve_above_threshold(noise, InputEnergy(5.0));
    CHECK(sol.regime == Regime::WaterFilling);
    CHECK(sol.gin_q == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sol.gin_p == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.gmod_q == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(sol.gmod_p == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(sol.nu_bar == doctest::Approx(3.75).epsilon(1e-12));
    CHECK(sol.nu_out == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(sol.chi == doctest::Approx(g_ref(3.25) - g_ref(1.0)).epsilon(1e-12));
    CHECK(sol.chi == doctest::Approx(1.34528).epsilon(1e-5));
    CHECK(sol.mu == doctest::Approx(0.5 * g_prime(3.25)).epsilon(1e-12));
}

TEST_CASE("solve_above_threshold: symmetric noise closed form") {
    for (double N : {0.5, 1.0, 2.0}) {
        for (double nbar : {0.5, 1.0, 4.0}) {
            const auto sol = solve_one_mode(OneModeNoise(N, N),
                                            InputEnergy::from_nbar(nbar));
            CHECK(sol.regime == Regime::WaterFilling);
            CHECK(sol.chi == doctest::Approx(g_ref(nbar + N) - g_ref(N)).epsilon(1e-12));
        }
    }
}

TEST_CASE("solve_above_threshold: boundary has vanishing q modulation") {
    const auto sol = solve_above_threshold(OneModeNoise(2.0, 0.5), InputEnergy(3.5));
    CHECK(sol.gmod_q == 0.0);
    CHECK_THROWS_AS(solve_above_threshold(OneModeNoise(2.0, 0.5), InputEnergy(3.0)),
                    regime_error);
}

TEST_CASE("residual_F: boundary zeros and single sign change") {
    const OneModeNoise noise(2.0, 0.5);
    // Water-filling point just below the threshold: continuity with the
    // closed-form solution.
    const double lthr = lambda_threshold(noise);
    const double gin_thr = 0.5 * std::sqrt(noise.gq / noise.gp);
    CHECK(std::abs(residual_F(noise, lthr * (1.0 - 1e-12), gin_thr * (1.0 - 1e-12)))
          <= 1e-9);
    // Vacuum point at lambda = 1.
    CHECK(std::abs(residual_F(noise, 1.0, 0.5)) <= 1e-9);
    // Exactly one sign change on [1/2, gin_thr) at lambda = 2.
    int changes = 0;
    double prev = residual_F(noise, 2.0, 0.5);
    for (int i = 1; i < 200; ++i) {
        const double x = 0.5 + (gin_thr - 1e-9 - 0.5) * i / 199.0;
        const double f = residual_F(noise, 2.0, x);
        if ((f > 0.0) != (prev > 0.0)) ++changes;
        prev = f;
    }
    CHECK(changes == 1);
    CHECK_THROWS_AS(residual_F(noise, 2.0, 0.49), domain_error);
    CHECK_THROWS_AS(residual_F(noise, 2.0, gin_thr), domain_error);
}

TEST_CASE("solve_below_threshold: (2, 0.5), lambda = 2") {
    const OneModeNoise noise(2.0, 0.5);
    const auto sol = solve_below_threshold(noise, InputEnergy(2.0));
    CHECK(sol.regime == Regime::SingleQuadrature);
    CHECK(sol.gmod_q == 0.0);
    CHECK(sol.gin_q > 0.5);
    CHECK(sol.gin_q < 1.0);
    CHECK(sol.gin_q * sol.gin_p == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sol.lambda() == doctest::Approx(2.0).epsilon(1e-12));
    // Residual vanishes at the returned point.
    CHECK(std::abs(residual_F(noise, 2.0, sol.gin_q)) <= 1e-10);
    // Independent grid oracle.
    const auto ora = oracle::brute_force_one_mode(noise, 2.0);
    CHECK(std::abs(sol.chi - ora.chi) <= 1e-4);
    CHECK(sol.chi >= ora.chi - 1e-6);
}

TEST_CASE("solve_below_threshold: threshold and vacuum continuity") {
    const OneModeNoise noise(2.0, 0.5);
    const double lthr = lambda_threshold(noise);
    const auto below = solve_below_threshold(noise, InputEnergy(lthr * (1.0 - 1e-9)));
    const auto above = solve_above_threshold(noise, InputEnergy(lthr));
    CHECK(below.gin_q == doctest::Approx(above.gin_q).epsilon(1e-4));
    CHECK(below.chi == doctest::Approx(above.chi).epsilon(1e-8));
    CHECK(below.mu == doctest::Approx(above.mu).epsilon(1e-6));

    const auto near_vac = solve_below_threshold(noise, InputEnergy(1.0 + 1e-9));
    CHECK(near_vac.gin_q == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(near_vac.gmod_p <= 1e-8);
    CHECK_THROWS_AS(solve_below_threshold(noise, InputEnergy(1.0)), regime_error);
    CHECK_THROWS_AS(solve_below_threshold(noise, InputEnergy(4.0)), regime_error);
    CHECK_THROWS_AS(solve_below_threshold(OneModeNoise(1.0, 1.0), InputEnergy(1.5)),
                    regime_error);
}

TEST_CASE("solve_one_mode: dispatch and examples") {
    const auto vac = solve_one_mode(OneModeNoise(3.0, 0.2), InputEnergy(1.0));
    CHECK(vac.regime == Regime::Vacuum);
    CHECK(vac.gin_q == 0.5);
    CHECK(vac.gin_p == 0.5);
    CHECK(vac.chi == 0.0);

    const auto wf = solve_one_mode(OneModeNoise(1.0, 1.0), InputEnergy(3.0));
    CHECK(wf.regime == Regime::WaterFilling);
    CHECK(wf.chi == doctest::Approx(3.0 * std::log2(3.0) - 4.0).epsilon(1e-12));
    CHECK(wf.chi == doctest::Approx(0.754888).epsilon(1e-5));

    const auto boundary = solve_one_mode(OneModeNoise(2.0, 0.5), InputEnergy(3.5));
    CHECK(boundary.regime == Regime::WaterFilling);

    const auto mid = solve_one_mode(OneModeNoise(2.0, 0.5), InputEnergy(2.0));
    CHECK(mid.regime == Regime::SingleQuadrature);
}

TEST_CASE("solve_one_mode: pure q-noise limitation path") {
    const OneModeNoise noise(1.0, 0.0);
    const auto sol = solve_one_mode(noise, InputEnergy(2.0));
    CHECK(sol.regime == Regime::SingleQuadrature);
    CHECK(sol.gin_q * sol.gin_p == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(sol.lambda() == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(sol.chi > 0.0);
}

TEST_CASE("solve_one_mode: swap invariance") {
    const auto a = solve_one_mode(OneModeNoise(2.0, 0.5), InputEnergy(2.2));
    const auto b = solve_one_mode(OneModeNoise(0.5, 2.0), InputEnergy(2.2));
    CHECK(b.swap_applied);
    CHECK(a.chi == doctest::Approx(b.chi).epsilon(1e-15));
    CHECK(a.gin_q == doctest::Approx(b.gin_p).epsilon(1e-15));
    CHECK(a.gmod_q == doctest::Approx(b.gmod_p).epsilon(1e-15));
    CHECK(a.mu == doctest::Approx(b.mu).epsilon(1e-15));
}

TEST_CASE("solve_for_mu: regime boundaries and round trip") {
    const OneModeNoise noise(2.0, 0.5);
    const double mthr = mu_threshold(noise);
    const double m0 = mu_zero(noise);

    auto [l_thr, sol_thr] = solve_for_mu(noise, mthr);
    CHECK(l_thr == doctest::Approx(lambda_threshold(noise)).epsilon(1e-8));
    CHECK(sol_thr.regime == Regime::WaterFilling);

    auto [l_vac, sol_vac] = solve_for_mu(noise, m0);
    CHECK(l_vac == 1.0);
    CHECK(sol_vac.regime == Regime::Vacuum);
    CHECK(solve_for_mu(noise, 10.0 * m0).first == 1.0);

    const double mu_mid = 0.5 * (mthr + m0);
    auto [l_mid, sol_mid] = solve_for_mu(noise, mu_mid);
    CHECK(l_mid > 1.0);
    CHECK(l_mid < lambda_threshold(noise));
    CHECK(sol_mid.regime == Regime::SingleQuadrature);
    CHECK(sol_mid.lambda() == doctest::Approx(l_mid).epsilon(1e-10));
    // Invert through the lambda-based solver.
    const auto direct = solve_below_threshold(noise, InputEnergy(l_mid));
    CHECK(direct.mu == doctest::Approx(mu_mid).epsilon(1e-6));
    CHECK(direct.gin_q == doctest::Approx(sol_mid.gin_q).epsilon(1e-8));

    CHECK_THROWS_AS(solve_for_mu(noise, 0.0), domain_error);
}

TEST_CASE("solve_for_mu: lambda is strictly decreasing in mu") {
    const OneModeNoise noise(3.0, 0.4);
    double prev = std::numeric_limits<double>::infinity();
    for (double mu : testutil::logspace(1e-3, mu_zero(noise) * 0.999, 60)) {
        const double l = solve_for_mu(noise, mu).first;
        CHECK(l < prev);
        prev = l;
    }
}

TEST_CASE("invariants: purity, energy, water-filling equality, bounds") {
    testutil::Rng rng(2024);
    for (int i = 0; i < 40; ++i) {
        const double gp = rng.uniform(0.05, 2.0);
        const double gq = gp * rng.uniform(1.0, 20.0);
        const OneModeNoise noise(gq, gp);
        const double lthr = lambda_threshold(noise);
        const double lambda = rng.uniform(1.0, 2.0 * lthr);
        const auto sol = solve_one_mode(noise, InputEnergy(lambda));

        CHECK(sol.gin_q * sol.gin_p == doctest::Approx(0.25).epsilon(1e-10));
        CHECK(sol.lambda() == doctest::Approx(lambda).epsilon(1e-10));
        CHECK(sol.gin_q >= 0.0);
        CHECK(sol.gmod_q >= 0.0);
        CHECK(sol.gmod_p >= 0.0);
        CHECK(sol.nu_bar >= sol.nu_out - 1e-12);
        CHECK(sol.nu_out >= 0.5 - 1e-12);

        const auto gb = bars(noise, sol);
        if (sol.regime == Regime::WaterFilling) {
            CHECK(std::abs(gb.q - gb.p) <= 1e-10);
        } else if (sol.regime == Regime::SingleQuadrature) {
            CHECK(sol.gin_q >= 0.5 - 1e-12);
            CHECK(sol.gin_q < 0.5 * std::sqrt(gq / gp));
            CHECK(gb.p < gb.q);
            CHECK(gb.p >= 0.5 - 1e-10);
        }
    }
}

TEST_CASE("invariants: mu monotone, chi concave, antisqueezing grows") {
    const OneModeNoise noise(2.0, 0.5);
    const double lthr = lambda_threshold(noise);
    const auto grid = testutil::linspace(1.0, 2.0 * lthr, 100);
    std::vector<double> mu, chi, ginq;
    double prev_lambda_below = 0.0, prev_ginq = 0.0;
    for (double l : grid) {
        const auto sol = solve_one_mode(noise, InputEnergy(l));
        mu.push_back(sol.mu);
        chi.push_back(sol.chi);
        if (sol.regime == Regime::SingleQuadrature) {
            if (prev_lambda_below > 0.0) CHECK(sol.gin_q >= prev_ginq - 1e-12);
            prev_lambda_below = l;
            prev_ginq = sol.gin_q;
        }
    }
    for (std::size_t i = 0; i + 1 < mu.size(); ++i) CHECK(mu[i + 1] < mu[i]);
    for (std::size_t i = 1; i + 1 < chi.size(); ++i)
        CHECK(chi[i - 1] - 2.0 * chi[i] + chi[i + 1] <= 1e-8);
}

TEST_CASE("optimality: solver never loses to the grid oracle") {
    testutil::Rng rng(11);
    for (int i = 0; i < 8; ++i) {
        const double gp = rng.uniform(0.1, 1.5);
        const double gq = gp * rng.uniform(1.1, 10.0);
        const OneModeNoise noise(gq, gp);
        const double lambda = rng.uniform(1.05, 2.0 * lambda_threshold(noise));
        const auto sol = solve_one_mode(noise, InputEnergy(lambda));
        const auto ora = oracle::brute_force_one_mode(noise, lambda);
        CHECK(sol.chi >= ora.chi - 1e-6);
        CHECK(std::abs(sol.chi - ora.chi) <= 1e-4);
    }
}
