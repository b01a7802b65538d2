#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dmpa/core_model.hpp"
#include "dmpa/errors.hpp"

using namespace dmpa;

TEST_CASE("from_lab_frame converts rates") {
    SUBCASE("undriven resonator") {
        const auto p = from_lab_frame({2 * std::numbers::pi * 1e6, 1e5, 1.0, 0.0, 0.0});
        CHECK(p.chi == 0.0);
        CHECK(p.gamma == doctest::Approx(2 * std::numbers::pi * 10).epsilon(1e-14));
        CHECK(p.mu == 0.0);
        CHECK(p.eta == 1.0);
        CHECK(p.N == 0.0);
        CHECK(p.n_bad == 0.0);
    }
    SUBCASE("direct substitution") {
        const auto p = from_lab_frame({1.0, 1.0, 1.0, 0.2, 0.3});
        CHECK(p.chi == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(p.gamma == 1.0);
        CHECK(p.delta == 0.3);
    }
    SUBCASE("chi' = 10") {
        // chi = 1e6 * 0.02 / 2 = 1e4, gamma = 1e6 / 1e3 = 1e3.
        const auto p = from_lab_frame({1e6, 1e3, 1.0, 0.02, 0.0});
        CHECK(derive(p).chi_prime == doctest::Approx(10.0).epsilon(1e-14));
        REQUIRE(p.quality_Q.has_value());
        CHECK(*p.quality_Q == 1e3);
    }
}

TEST_CASE("from_lab_frame rejects invalid input naming the bound") {
    auto message = [](LabFrameParams lab) {
        try {
            from_lab_frame(lab);
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message({0.0, 1.0, 1.0, 0.0, 0.0}).find("omega_m") != std::string::npos);
    CHECK(message({1.0, -1.0, 1.0, 0.0, 0.0}).find("quality_Q") != std::string::npos);
    CHECK(message({1.0, 1.0, 0.0, 0.0, 0.0}).find("k0") != std::string::npos);
    CHECK(message({1.0, 1.0, 1.0, -0.1, 0.0}).find("kr") != std::string::npos);
    CHECK(message({1.0, 1.0, 1.0, 1.5, 0.0}).find("kr must be < k0") != std::string::npos);
}

TEST_CASE("lab-frame RWA warning") {
    CHECK(validate(LabFrameParams{1.0, 1.0, 1.0, 0.05, 0.0}).warnings.empty());
    CHECK(validate(LabFrameParams{1.0, 1.0, 1.0, 0.2, 0.0}).warnings.size() == 1);
}

TEST_CASE("chi increases strictly with kr") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 0.99);
    for (int i = 0; i < 200; ++i) {
        double a = u(rng), b = u(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        const auto pa = from_lab_frame({3.0, 50.0, 1.0, a, 0.0});
        const auto pb = from_lab_frame({3.0, 50.0, 1.0, b, 0.0});
        CHECK(pa.chi < pb.chi);
    }
}

TEST_CASE("derived quantities recomputed independently") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        RotatingFrameParams p;
        p.gamma = 0.1 + 10 * u(rng);
        p.chi = 100 * u(rng);
        p.mu = 1000 * u(rng);
        p.eta = u(rng);
        p.N = 100 * u(rng);
        const auto d = derive(p);
        const double n_ba = p.mu / (2 * p.gamma);
        CHECK(d.n_ba == n_ba);
        CHECK(d.snr == doctest::Approx(p.eta * p.mu * (2 * p.N + 2 * n_ba + 1) / p.gamma).epsilon(1e-14));
        CHECK(d.chi_prime == p.chi / p.gamma);
        CHECK(d.sigma2 == p.N + 0.5);
        CHECK(d.v_g == 0.5);
        CHECK(d.snr >= 0);
    }
}

TEST_CASE("normalized rescales rates by gamma") {
    RotatingFrameParams p;
    p.gamma = 4;
    p.chi = 8;
    p.delta = -8;
    p.mu = 2;
    const auto n = p.normalized();
    CHECK(n.gamma == 1);
    CHECK(n.chi == 2);
    CHECK(n.delta == -2);
    CHECK(n.mu == 0.5);
    CHECK(derive(n).snr == doctest::Approx(derive(p).snr));
}

TEST_CASE("validate: drift stability from eigenvalues") {
    RotatingFrameParams p;
    p.gamma = 1;
    p.chi = 5;

    SUBCASE("QND detuning gives a double eigenvalue -gamma") {
        p.delta = -5;
        const auto r = validate(p, Scheme::dmpa());
        CHECK(r.stable);
        CHECK(r.ok());
        CHECK(r.eigenvalues[0][0] == doctest::Approx(-1.0));
        CHECK(r.eigenvalues[1][0] == doctest::Approx(-1.0));
    }
    SUBCASE("resonant drive above threshold") {
        p.delta = 0;
        const auto r = validate(p, Scheme::dmpa());
        CHECK_FALSE(r.stable);
        CHECK(r.max_real_eigenvalue == doctest::Approx(4.0));
        REQUIRE_FALSE(r.errors.empty());
        CHECK(r.errors.front().find("unstable") != std::string::npos);
    }
    SUBCASE("near threshold") {
        p.delta = 4.9;
        const auto r = validate(p, Scheme::dmpa());
        // Oracle: -gamma + sqrt(chi^2 - delta^2) = -1 + sqrt(0.99).
        CHECK(r.stable);
        CHECK(r.max_real_eigenvalue == doctest::Approx(-1.0 + std::sqrt(0.99)).epsilon(1e-12));
        bool warned = false;
        for (const auto& w : r.warnings) warned |= w.find("instability threshold") != std::string::npos;
        CHECK(warned);
    }
    SUBCASE("BAE has no coherent coupling") {
        p.delta = 0;
        CHECK(validate(p, Scheme::bae()).stable);
    }
}

TEST_CASE("validate: QND detuning is always stable") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        RotatingFrameParams p;
        p.gamma = 1e-3 + u(rng);
        p.chi = 1e4 * u(rng);
        for (const int sign : {-1, 1}) {
            const auto q = with_qnd_detuning(p, Scheme::dmpa(sign));
            CHECK(q.delta == sign * p.chi);
            CHECK(validate(q, Scheme::dmpa(sign)).stable);
        }
    }
}

TEST_CASE("validate: hard errors") {
    RotatingFrameParams p;
    p.eta = 1.5;
    CHECK_FALSE(validate(p, Scheme::dmpa()).errors.empty());
    p = {};
    p.mu = -1;
    CHECK_FALSE(validate(p, Scheme::dmpa()).errors.empty());
    p = {};
    p.gamma = 0;
    CHECK_FALSE(validate(p, Scheme::dmpa()).errors.empty());
    p = {};
    p.mu = 1;
    p.n_bad = 0.6;  // exceeds mu/(2 gamma) = 0.5
    CHECK_FALSE(validate(p, Scheme::bae()).errors.empty());
    p.n_bad = 0.4;
    CHECK(validate(p, Scheme::bae()).errors.empty());
}

TEST_CASE("validate: RWA warning when Q is known") {
    auto p = from_lab_frame({1e6, 100.0, 1.0, 0.001, 0.0});  // chi' = 500 / 1e4 = 0.05 <= 1
    CHECK(validate(with_qnd_detuning(p, Scheme::dmpa()), Scheme::dmpa()).warnings.empty());
    p = from_lab_frame({1e6, 100.0, 1.0, 0.05, 0.0});  // chi' = 2.5 > 0.01 Q = 1
    CHECK_FALSE(validate(with_qnd_detuning(p, Scheme::dmpa()), Scheme::dmpa()).warnings.empty());
}

TEST_CASE("config file parsing") {
    std::istringstream in(
        "# comment line\n"
        "Gamma = 2\n"
        "CHI=4   # trailing comment\n"
        "mu = 1.5\n"
        "n = 3\n"
        "N_Bad = 0.25\n"
        "Scheme = BAE\n"
        "detuning_sign = 1\n");
    const auto cfg = Config::parse(in);
    RotatingFrameParams p;
    Scheme s;
    bool delta_set = false;
    cfg.apply(p, s, delta_set);
    CHECK(p.gamma == 2);
    CHECK(p.chi == 4);
    CHECK(p.mu == 1.5);
    CHECK(p.N == 3);
    CHECK(p.n_bad == 0.25);
    CHECK(s.kind == SchemeKind::BAE);
    CHECK(s.qnd_sign == 1);
    CHECK_FALSE(delta_set);

    std::istringstream bad_key("foo = 1\n");
    CHECK_THROWS_AS(Config::parse(bad_key).apply(p, s, delta_set), UsageError);
    std::istringstream bad_line("gamma 1\n");
    CHECK_THROWS_AS(Config::parse(bad_line), UsageError);
    std::istringstream bad_value("chi = abc\n");
    CHECK_THROWS_AS(Config::parse(bad_value).apply(p, s, delta_set), UsageError);
    CHECK_THROWS_AS(Config::load("/nonexistent/params.cfg"), UsageError);
}
