#include "doctest.h"

#include "epib/model.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace epib;

namespace {
const double kE = std::exp(1.0);
}

TEST_CASE("value function anchors") {
    CHECK(value(0.0, 0.65, 1.0) == 0.0);
    CHECK(value(-1.0, 0.65, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    // -20^0.65 = -exp(0.65 ln 20)
    CHECK(value(-20.0, 0.65, 1.0) == doctest::Approx(-7.009216863860871).epsilon(1e-13));
    CHECK(value(4.0, 0.5, 2.0) == doctest::Approx(2.0));
    CHECK(value(-4.0, 0.5, 2.0) == doctest::Approx(-4.0));
    CHECK_THROWS_AS(value(std::numeric_limits<double>::quiet_NaN(), 0.65, 1.0), DomainError);
    CHECK_THROWS_AS(value(std::numeric_limits<double>::infinity(), 0.65, 1.0), DomainError);
}

TEST_CASE("value function is increasing through the origin") {
    double prev = value(-50.0, 0.65, 1.3);
    for (double x = -49.5; x <= 50.0; x += 0.5) {
        const double v = value(x, 0.65, 1.3);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("value derivative matches central differences") {
    for (double x : {-20.0, -3.0, -0.5, 0.7, 5.0}) {
        const double h = 1e-6;
        const double fd = (value(x + h, 0.65, 1.0) - value(x - h, 0.65, 1.0)) / (2 * h);
        CHECK(value_derivative(x, 0.65, 1.0) == doctest::Approx(fd).epsilon(1e-7));
    }
    CHECK(value_derivative(0.0, 1.0, 3.0) == 1.0);
}

TEST_CASE("weight anchors") {
    for (double p : {0.01, 0.2, 0.5, 0.99}) CHECK(weight(p, 1.0) == p);
    for (double a : {0.05, 0.3, 0.7, 1.0}) CHECK(weight(1.0 / kE, a) == doctest::Approx(1.0 / kE).epsilon(1e-15));
    CHECK(weight(0.1, 0.5) == doctest::Approx(std::exp(-std::sqrt(std::log(10.0)))).epsilon(1e-15));
    CHECK(weight(0.1, 0.5) == doctest::Approx(0.21927532886002093).epsilon(1e-13));
    CHECK(weight(0.0, 0.4) == 0.0);
    CHECK(weight(1.0, 0.4) == 1.0);
    CHECK_THROWS_AS(weight(-0.01, 0.5), DomainError);
    CHECK_THROWS_AS(weight(1.01, 0.5), DomainError);
}

TEST_CASE("weight is increasing and crosses the identity at 1/e") {
    for (double a : {0.2, 0.5, 0.8}) {
        double prev = 0.0;
        for (int k = 1; k < 1000; ++k) {
            const double p = k / 1000.0;
            const double w = weight(p, a);
            CHECK(w > prev);
            prev = w;
            if (std::abs(p - 1.0 / kE) > 1e-9) CHECK((p < 1.0 / kE) == (w > p));
        }
    }
}

TEST_CASE("weight sensitivity to alpha changes sign at 1/e") {
    for (double a : {0.3, 0.6, 0.9}) {
        for (double p : {0.05, 0.2, 0.3, 0.45, 0.7, 0.95}) {
            const double h = 1e-6;
            const double fd = (weight(p, a + h) - weight(p, a - h)) / (2 * h);
            CHECK(weight_dalpha(p, a) == doctest::Approx(fd).epsilon(1e-6));
            CHECK((p < 1.0 / kE) == (weight_dalpha(p, a) < 0.0));
        }
        CHECK(std::abs(weight_dalpha(1.0 / kE, a)) < 1e-15);
    }
}

TEST_CASE("weight derivative in p matches central differences") {
    for (double a : {0.3, 0.6, 1.0})
        for (double p : {0.05, 0.3, 0.6, 0.9}) {
            const double h = 1e-7;
            const double fd = (weight(p + h, a) - weight(p - h, a)) / (2 * h);
            CHECK(weight_dp(p, a) == doctest::Approx(fd).epsilon(1e-6));
        }
}

TEST_CASE("utility in both modes") {
    const ModelParams p = two_behavior(0.01, 0.0, -1.0, -20.0, 0.03, 10.0, 0.6);
    CHECK(utility(0, 0.0, p, Mode::EUT) == 0.0);
    CHECK(utility(0, 0.0, p, Mode::PT) == 0.0);
    CHECK(utility(1, 0.3, p, Mode::PT) == doctest::Approx(-1.0));
    // u(c_n) * k b i = -7.009216863860871 * 0.02
    CHECK(utility(0, 0.2, p, Mode::EUT) == doctest::Approx(-0.14018433727721742).epsilon(1e-12));
    CHECK(utility(0, 0.2, p, Mode::PT) ==
          doctest::Approx(-7.009216863860871 * weight(0.02, 0.6)).epsilon(1e-12));

    ModelParams high = two_behavior(0.2, 0.0, -1.0, -20.0, 0.03);
    CHECK_THROWS_AS(utility(0, 0.6, high, Mode::EUT), DomainError);
}

TEST_CASE("PT with alpha one is bit-identical to EUT") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        ModelParams p = two_behavior(0.001 + 0.05 * u01(rng), 2 * u01(rng) - 1, -1 - 2 * u01(rng),
                                     -1 - 30 * u01(rng), 0.01 + 0.1 * u01(rng));
        p.sigma = 0.2 + 0.8 * u01(rng);
        p.lambda = 0.5 + 2 * u01(rng);
        const double i = u01(rng) * std::min(1.0, 1.0 / (p.k_bar * p.beta(0)));
        for (std::size_t j = 0; j < 2; ++j) CHECK(utility(j, i, p, Mode::PT) == utility(j, i, p, Mode::EUT));
    }
}

TEST_CASE("imitation probability") {
    CHECK(imitation_prob(0.3, 0.3, 0.7, 2.0) == 0.5);
    CHECK(imitation_prob(0.0, 2.0, 1.0, 2.0) == 1.0);
    CHECK(imitation_prob(0.0, -2.0, 1.0, 2.0) == 0.0);
    CHECK_THROWS_AS(imitation_prob(0.0, 2.5, 1.0, 2.0), DomainError);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const double a = u(rng), b = u(rng);
        CHECK(imitation_prob(a, b, 0.8, 2.0) + imitation_prob(b, a, 0.8, 2.0) == 1.0);
    }
}

TEST_CASE("default payoff scale bounds every reachable payoff gap") {
    const ModelParams p = two_behavior(0.02, 0.0, -1.0, -20.0, 0.03);
    const double um = default_u_max(p);
    CHECK(um == doctest::Approx(std::abs(1.0 - 7.009216863860871 / kE)).epsilon(1e-12));
    CHECK(p.k0() == doctest::Approx(1.0 / um));
    for (double a : {0.05, 0.3, 0.6, 1.0}) {
        ModelParams q = p;
        q.alpha = a;
        for (int k = 0; k <= 500; ++k) {
            const double i = k / 500.0;
            for (Mode mode : {Mode::EUT, Mode::PT}) {
                if (mode == Mode::EUT && q.k_bar * q.beta(0) * i > 1.0) continue;
                const double gap = utility(0, i, q, mode) - utility(1, i, q, mode);
                CHECK(std::abs(gap) <= um * (1 + 1e-12));
            }
        }
    }
}

TEST_CASE("parameter validation") {
    ModelParams p = two_behavior(0.02, 0.0, -1.0, -20.0, 0.03);
    CHECK_NOTHROW(p.validate());
    p.alpha = 0.0;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    p.alpha = 0.5;
    p.c_n = 1.0;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    p.c_n = -20.0;
    p.m = 1.5;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    p.m = 1.0;
    p.u_max = -1.0;
    CHECK_THROWS_AS(p.validate(), PreconditionError);
}

TEST_CASE("custom value function") {
    ModelParams p = two_behavior(0.02, 0.0, -1.0, -20.0, 0.03);
    p.value_fn = ValueFunction{[](double x) { return x >= 0 ? std::log1p(x) : -2.0 * std::log1p(-x); }, {}};
    CHECK_NOTHROW(p.validate());
    CHECK(p.u(-20.0) == doctest::Approx(-2.0 * std::log(21.0)));
    CHECK(p.du(1.0) == doctest::Approx(0.5).epsilon(1e-6));
    p.value_fn = ValueFunction{[](double x) { return x + 1.0; }, {}};
    CHECK_THROWS_AS(p.validate(), PreconditionError);
    p.value_fn = ValueFunction{[](double x) { return -x; }, {}};
    CHECK_THROWS_AS(p.validate(), PreconditionError);
}
