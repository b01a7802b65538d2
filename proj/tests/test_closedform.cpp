#include <doctest.h>

#include <cmath>
#include <random>

#include "dmpa/closedform.hpp"
#include "dmpa/dynamics.hpp"

using namespace dmpa;

namespace {

RotatingFrameParams qnd(double chi_prime, double mu, double eta, double N, double sign = -1.0) {
    RotatingFrameParams p;
    p.chi = chi_prime;
    p.delta = sign * chi_prime;
    p.mu = mu;
    p.eta = eta;
    p.N = N;
    return p;
}

double snr_of(const RotatingFrameParams& p) { return derive(p).snr; }

}  // namespace

TEST_CASE("mu_eff_ratio") {
    SUBCASE("direct evaluation at chi'=10, SNR=1") {
        CHECK(mu_eff_ratio(10, 1) == doctest::Approx(202.0 / (1 + std::sqrt(1625.0) - 4)).epsilon(1e-14));
        CHECK(mu_eff_ratio(10, 1) == doctest::Approx(5.414).epsilon(1e-3));
    }
    SUBCASE("endpoints") {
        for (const double cp : {0.1, 1.0, 10.0, 100.0, 1e4}) {
            CHECK(mu_eff_ratio(cp, 1e-8 / (cp * cp)) == doctest::Approx(1 + cp * cp).epsilon(1e-3));
            CHECK(mu_eff_ratio(cp, 1e8 * cp * cp) == doctest::Approx(1.0).epsilon(1e-3));
            CHECK(mu_eff_ratio(cp, 0.0) == doctest::Approx(1 + cp * cp).epsilon(1e-14));
        }
    }
    SUBCASE("no drive, no enhancement") {
        for (const double snr : {1e-6, 1.0, 1e6}) CHECK(mu_eff_ratio(0, snr) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("ratio equals 1 + g^2 and stays in [1, 1 + chi'^2]") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1, 1);
        for (int i = 0; i < 1000; ++i) {
            const double cp = std::pow(10.0, 3 * u(rng)), snr = std::pow(10.0, 8 * u(rng));
            const double r = mu_eff_ratio(cp, snr), g = covariance_gain(cp, snr);
            CHECK(r == doctest::Approx(1 + g * g).epsilon(1e-12));
            CHECK(r >= 1.0);
            CHECK(r <= 1 + cp * cp + 1e-9 * cp * cp);
        }
    }
    SUBCASE("monotone in SNR and chi'") {
        for (const double cp : {0.5, 5.0, 500.0}) {
            double prev = INFINITY;
            for (double snr = 1e-10; snr < 1e10; snr *= 3) {
                const double r = mu_eff_ratio(cp, snr);
                CHECK(r <= prev * (1 + 1e-14));
                prev = r;
            }
        }
        for (const double snr : {1e-4, 1.0, 1e4}) {
            double prev = 0.0;
            for (double cp = 1e-3; cp < 1e5; cp *= 2) {
                const double r = mu_eff_ratio(cp, snr);
                CHECK(r >= prev * (1 - 1e-14));
                prev = r;
            }
        }
    }
}

TEST_CASE("effective_measurement matches the numerical steady state") {
    for (const double cp : {0.1, 1.0, 10.0, 100.0})
        for (const double mu : {1e-3, 1.0, 1e3})
            for (const double eta : {0.1, 1.0})
                for (const double N : {0.0, 100.0})
                    for (const double sign : {-1.0, 1.0}) {
                        const auto p = qnd(cp, mu, eta, N, sign);
                        const auto em = effective_measurement(p);
                        const auto s = steady_state_numeric(p, Scheme::dmpa(int(sign)));
                        // At delta = +chi the QND quadrature is Y.
                        const double g_num = double(sign < 0 ? s.c / s.v_x : s.c / s.v_y);
                        CHECK(std::abs(em.g) == doctest::Approx(std::abs(g_num)).epsilon(1e-9));
                        CHECK(em.mu_eff_ratio == doctest::Approx(1 + em.g * em.g).epsilon(1e-14));
                        CHECK(em.n_bad_eff == doctest::Approx(mu / 2));
                        CHECK(1.0 / std::tan(2 * em.alpha) == doctest::Approx(em.g).epsilon(1e-12));
                        // Filter identity.
                        const double width = double(p.gamma + 2 * p.eta * p.mu * (s.v_x + s.v_y));
                        CHECK(width == doctest::Approx(em.gamma_filter).epsilon(1e-10));
                        CHECK(width == doctest::Approx(p.gamma * cp / em.g).epsilon(1e-10));
                    }
}

TEST_CASE("effective_measurement errors and limits") {
    auto p = qnd(3.0, 1.0, 1.0, 0.0);
    p.delta = 1.0;
    CHECK_THROWS_AS(effective_measurement(p), UnsupportedConfiguration);
    SUBCASE("zero measurement keeps the full enhancement") {
        const auto em = effective_measurement(qnd(3.0, 0.0, 1.0, 0.0));
        CHECK(em.g == doctest::Approx(3.0));
        CHECK(em.gamma_filter == doctest::Approx(1.0));
    }
    SUBCASE("undriven filter width is the standard expression") {
        RotatingFrameParams q;
        q.mu = 2.0;
        q.N = 0.0;
        // SNR = eta mu / (gamma (2N + 1 + 2 N_BA)) = 2 / 3
        CHECK(filter_width_ratio(0.0, 2.0) == doctest::Approx(3.0));
        CHECK(effective_measurement(q).gamma_filter == doctest::Approx(std::sqrt(1 + 4 * snr_of(q))));
    }
}

TEST_CASE("filter width limiting forms") {
    SUBCASE("ultraweak") {
        for (const double cp : {0.0, 1.0, 30.0}) {
            const double snr = 1e-3 / (1 + cp * cp);
            CHECK(filter_width_ratio(cp, snr) == doctest::Approx(std::sqrt(1 + 4 * snr * (1 + cp * cp))).epsilon(0.01));
        }
    }
    SUBCASE("strong") {
        // Exact asymptote for 1 << SNR chi'^2 and SNR << chi'^2 is sqrt(2) (chi'^2 SNR)^(1/4).
        CHECK(filter_width_ratio(1e4, 1.0) == doctest::Approx(std::sqrt(2.0) * 100).epsilon(0.01));
        CHECK(filter_width_ratio(1e6, 10.0) == doctest::Approx(std::sqrt(2.0) * std::pow(1e13, 0.25)).epsilon(0.01));
        const double a = filter_width_ratio(1e5, 1e2), b = filter_width_ratio(1e5, 1e4);
        CHECK(std::log(b / a) / std::log(100.0) == doctest::Approx(0.25).epsilon(0.02));
    }
}

TEST_CASE("dmpa_closed_form agrees with the Riccati steady state") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 200; ++i) {
        const auto p = qnd(std::pow(10.0, 4 * u(rng) - 1), std::pow(10.0, 6 * u(rng) - 3), 0.05 + 0.95 * u(rng),
                           100 * u(rng));
        const auto a = dmpa_closed_form(p);
        const auto b = steady_state_numeric(p, Scheme::dmpa());
        CHECK(double(a.v_x) == doctest::Approx(double(b.v_x)).epsilon(1e-9));
        CHECK(double(a.v_y) == doctest::Approx(double(b.v_y)).epsilon(1e-8));
        CHECK(double(a.c) == doctest::Approx(double(b.c)).epsilon(1e-9));
    }
    SUBCASE("zero measurement gives the Lyapunov state") {
        const auto p = qnd(4.0, 0.0, 1.0, 2.0);
        const auto a = dmpa_closed_form(p);
        CHECK(double(a.v_x) == doctest::Approx(2.5));
        CHECK(double(a.v_y) == doctest::Approx(2.5 * 33));
        CHECK(double(a.c) == doctest::Approx(10.0));
    }
}

TEST_CASE("strong_drive_asymptotics") {
    SUBCASE("optimal strength") {
        auto p = qnd(1e3, 1.0, 1.0, 10.0);
        CHECK(strong_drive_asymptotics(p).mu_opt_inf == doctest::Approx(10.5));
    }
    SUBCASE("optimal variance") {
        auto p = qnd(1e3, 10.5, 1.0, 10.0);
        const auto a = strong_drive_asymptotics(p);
        CHECK(a.v_x_optimal == doctest::Approx(std::pow(3.0, 0.75) / 2 * std::sqrt(0.021)).epsilon(1e-12));
        CHECK(a.v_x_optimal == doctest::Approx(0.1652).epsilon(1e-3));
        const double numeric = double(steady_state_numeric(p, Scheme::dmpa()).v_x);
        CHECK(numeric == doctest::Approx(a.v_x_optimal).epsilon(0.05));
        CHECK(a.valid);
    }
    SUBCASE("intermediate-regime form coincides with the quartic-root form") {
        for (const double cp : {1e2, 1e3, 1e5})
            for (const double mu : {0.3, 10.5, 70.0})
                for (const double N : {0.0, 10.0}) {
                    const auto a = strong_drive_asymptotics(qnd(cp, mu, 0.7, N));
                    CHECK(a.v_x_intermediate == doctest::Approx(a.v_x_quartic).epsilon(1e-6));
                }
    }
    SUBCASE("approximate V_Y and C track the numerical state deep in the regime") {
        const auto p = qnd(1e4, 10.5, 1.0, 10.0);
        const auto a = strong_drive_asymptotics(p);
        const auto s = steady_state_numeric(p, Scheme::dmpa());
        CHECK(a.v_x_quartic == doctest::Approx(double(s.v_x)).epsilon(0.05));
        CHECK(a.v_y_approx == doctest::Approx(double(s.v_y)).epsilon(0.05));
        CHECK(a.c_approx == doctest::Approx(double(s.c)).epsilon(0.05));
    }
    SUBCASE("validity flag") {
        CHECK_FALSE(strong_drive_asymptotics(qnd(5.0, 1.0, 1.0, 0.0)).valid);
        CHECK_FALSE(strong_drive_asymptotics(qnd(100.0, 1e7, 1.0, 0.0)).valid);
        CHECK(strong_drive_asymptotics(qnd(100.0, 1.0, 1.0, 0.0)).valid);
    }
}

TEST_CASE("bae_closed_form") {
    RotatingFrameParams p;
    SUBCASE("no measurement") {
        p.N = 3;
        const auto v = bae_closed_form(p);
        CHECK(double(v.v_x) == doctest::Approx(3.5));
        CHECK(double(v.v_y) == doctest::Approx(3.5));
    }
    SUBCASE("quadratic root") {
        p.mu = 4;
        CHECK(double(bae_closed_form(p).v_x) == doctest::Approx((std::sqrt(17.0) - 1) / 16).epsilon(1e-14));
        CHECK(double(bae_closed_form(p).v_x) == doctest::Approx(0.1952).epsilon(1e-3));
    }
    SUBCASE("agrees with the Riccati steady state") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 200; ++i) {
            p.mu = std::pow(10.0, 8 * u(rng) - 4);
            p.eta = 0.01 + 0.99 * u(rng);
            p.N = 100 * u(rng);
            p.n_bad = u(rng) * p.mu / 2;
            const auto a = bae_closed_form(p);
            const auto b = steady_state_numeric(p, Scheme::bae());
            CHECK(double(a.v_x) == doctest::Approx(double(b.v_x)).epsilon(1e-10));
            CHECK(double(a.v_y) == doctest::Approx(double(b.v_y)).epsilon(1e-10));
        }
    }
    SUBCASE("strong measurement scaling") {
        // Exact asymptote: V_X -> (1/2) sqrt((2N+1) gamma / (eta mu)).
        p.N = 10;
        p.mu = 1e6;
        const double v1 = double(bae_closed_form(p).v_x);
        p.mu = 1e7;
        const double v2 = double(bae_closed_form(p).v_x);
        CHECK(std::log(v2 / v1) / std::log(10.0) == doctest::Approx(-0.5).epsilon(0.03));
        CHECK(v1 == doctest::Approx(0.5 * std::sqrt(21.0 / 1e6)).epsilon(0.03));
    }
}

TEST_CASE("purity") {
    CHECK(purity({0.5, 0.5, 0.0}) == doctest::Approx(1.0));
    CHECK(purity({0.25, 1.0, 0.0}) == doctest::Approx(1.0));
    CHECK(purity({10.5, 10.5, 0.0}) == doctest::Approx(1.0 / 441));
    CHECK(purity({2.0, 3.0, 1.0}) == doctest::Approx(0.05));
    CHECK_THROWS_AS(purity({1.0, 1.0, 1.0}), InvalidStateError);
    CHECK_THROWS_AS(purity({-1.0, 1.0, 0.0}), InvalidStateError);
}

TEST_CASE("purity_closed") {
    SUBCASE("BAE formula equals purity of the closed-form state") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 500; ++i) {
            RotatingFrameParams p;
            p.mu = std::pow(10.0, 10 * u(rng) - 4);
            p.eta = 0.01 + 0.99 * u(rng);
            p.N = 100 * u(rng);
            p.n_bad = u(rng) * p.mu / 2;
            const auto pc = purity_closed(p, Scheme::bae());
            REQUIRE(pc.p.has_value());
            CHECK(*pc.p == doctest::Approx(purity(bae_closed_form(p))).epsilon(1e-10));
        }
    }
    SUBCASE("BAE strong measurement") {
        RotatingFrameParams p;
        p.N = 10;
        p.mu = 1e6;
        CHECK(*purity_closed(p, Scheme::bae()).p == doctest::Approx(std::sqrt(1.0 / (1e6 * 21))).epsilon(0.03));
    }
    SUBCASE("DMPA formula equals purity of the numerical state and respects the bound") {
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> u(0, 1);
        for (int i = 0; i < 200; ++i) {
            const auto p = qnd(std::pow(10.0, 5 * u(rng) - 1), std::pow(10.0, 6 * u(rng) - 3), 0.05 + 0.95 * u(rng),
                               100 * u(rng));
            const auto pc = purity_closed(p, Scheme::dmpa());
            REQUIRE(pc.p.has_value());
            const double numeric = purity(steady_state_numeric(p, Scheme::dmpa()));
            CHECK(*pc.p == doctest::Approx(numeric).epsilon(1e-8));
            CHECK(numeric >= pc.p_lower_bound * (1 - 1e-12));
            CHECK(pc.p_lower_bound == doctest::Approx(p.eta / (1 + (2 * p.N + 1) / p.mu)));
        }
    }
    SUBCASE("DMPA at the optimum approaches eta/3") {
        for (const double eta : {1.0, 0.5}) {
            const auto p = qnd(1e6, 10.5, eta, 10.0);
            CHECK(*purity_closed(p, Scheme::dmpa()).p == doctest::Approx(eta / 3).epsilon(0.02));
        }
    }
    SUBCASE("zero measurement diverges") {
        const auto p = qnd(10.0, 0.0, 1.0, 1.0);
        const auto pc = purity_closed(p, Scheme::dmpa());
        CHECK(pc.diverged);
        CHECK_FALSE(pc.p.has_value());
        CHECK(pc.p_lower_bound == 0.0);
    }
}
