#include <doctest.h>

#include <cmath>

#include "chainrisk/error.hpp"
#include "chainrisk/risk.hpp"
#include "test_support.hpp"

using namespace chainrisk;
namespace ct = chainrisk::testing;

namespace {

RiskModel default_model() { return RiskModel(10.0, 100, 10.0, 10.0); }

// Frozen with an independent library (scipy betainc + quad), T/T0 = 10.
constexpr double kIntegralP = 0.10850009187217004;
constexpr double kExpectedLoss = 4542.684321472111;
constexpr double kPremium15 = 4689.801125394703;
constexpr double kPremium2 = 4765.31897990907;

}  // namespace

TEST_CASE("attack probability boundary values") {
    CHECK(attack_probability(10.0, 0.3) == 1.0);
    CHECK(attack_probability(10.0, 0.0) == 1.0);
    CHECK(attack_probability(10.0, 0.5) == 1.0);
    CHECK(attack_probability(10.0, 1.0) == 0.0);
    CHECK(std::abs(attack_probability(10.0, 0.75) - 0.040968955955836175) < 1e-12);
    CHECK(std::abs(attack_probability(10.0, 0.6) - 0.4930037350399998) < 1e-12);
}

TEST_CASE("attack probability against the quadrature oracle") {
    ct::Rng rng(5);
    for (int k = 0; k < 50; ++k) {
        const double hbar = rng.uniform(0.5, 1.0);
        const double tt = rng.uniform(1.0, 50.0);
        CHECK(std::abs(attack_probability(tt, hbar) - ct::attack_probability_oracle(tt, hbar)) < 1e-9);
    }
}

TEST_CASE("attack probability is nonincreasing on [1/2, 1]") {
    for (double tt : {1.0, 5.0, 10.0, 40.0}) {
        double prev = 1.0;
        for (int i = 0; i <= 1000; ++i) {
            const double cur = attack_probability(tt, 0.5 + 0.5 * i / 1000.0);
            CHECK(cur <= prev + 1e-12);
            CHECK(cur >= 0.0);
            prev = cur;
        }
    }
}

TEST_CASE("attack probability domain errors") {
    CHECK_THROWS_AS(attack_probability(10.0, -0.1), DomainError);
    CHECK_THROWS_AS(attack_probability(10.0, 1.1), DomainError);
    CHECK_THROWS_AS(attack_probability(0.0, 0.7), DomainError);
}

TEST_CASE("risk cdf") {
    const auto model = default_model();
    CHECK(risk_cdf(model, 0.5) == 0.5);
    CHECK(std::abs(risk_cdf(model, 1.0) - (0.5 + kIntegralP)) < 1e-3);
    CHECK(std::abs(risk_cdf(model, 0.75) - 0.6072305805881654) < 1e-3);
    const auto prob = [](double t) { return ct::attack_probability_oracle(10.0, t); };
    for (double h : {0.55, 0.7, 0.9, 0.99}) {
        const double oracle = 0.5 + adaptive_simpson(prob, 0.5, h, 1e-11);
        CHECK(std::abs(risk_cdf(model, h) - oracle) < 1e-3);
    }
    double prev = 0.5;
    for (int i = 0; i <= 100; ++i) {
        const double cur = risk_cdf(model, 0.5 + 0.005 * i);
        CHECK(cur >= prev - 1e-15);
        CHECK(cur <= 1.0);
        prev = cur;
    }
    CHECK_THROWS_AS(risk_cdf(model, 0.4), DomainError);
}

TEST_CASE("decumulative grid on constant attack probabilities") {
    // P = 0: B = 1, loss = C / 2.  P = 1: B(t) = 3/2 - t, loss = 3C / 8.
    const DecumulativeGrid zero([](double) { return 0.0; }, 100);
    const DecumulativeGrid one([](double) { return 1.0; }, 100);
    CHECK(std::abs(zero.transformed_moment(1.0, 0) - 0.5) < 1e-14);
    CHECK(std::abs(one.transformed_moment(1.0, 0) - 0.375) < 1e-14);
    for (int k = 0; k < one.intervals(); ++k) {
        const double t = 0.5 + (k + 0.5) * one.cell_width();
        CHECK(std::abs(one.values()[k] - (1.5 - t)) < 1e-14);
    }
    CHECK_THROWS_AS(DecumulativeGrid([](double) { return 0.0; }, 0), DomainError);
}

TEST_CASE("expected loss at defaults") {
    const auto model = default_model();
    const double loss = expected_loss(model);
    CHECK(model.loss_scale() == 10000.0);
    CHECK(loss > 2500.0);
    CHECK(loss <= 5000.0);
    CHECK(std::abs(loss - kExpectedLoss) / kExpectedLoss < 1e-3);
    const double oracle = ct::premium_oracle(10.0, model.loss_scale(), 1.0);
    CHECK(std::abs(loss - oracle) / oracle < 1e-3);
}

TEST_CASE("premium values and bounds") {
    const auto model = default_model();
    CHECK(premium(model, 1.0) == expected_loss(model));
    CHECK(std::abs(premium(model, 1.5) - kPremium15) / kPremium15 < 1e-3);
    CHECK(std::abs(premium(model, 2.0) - kPremium2) / kPremium2 < 1e-3);
    const double oracle = ct::premium_oracle(10.0, model.loss_scale(), 2.0);
    CHECK(std::abs(premium(model, 2.0) - oracle) / oracle < 1e-3);
    // B^{1/gamma} -> 1 as gamma grows.
    CHECK(std::abs(premium(model, 1e6) - 5000.0) / 5000.0 < 1e-3);

    double prev = premium(model, 1.0);
    for (int i = 1; i <= 50; ++i) {
        const double cur = premium(model, 1.0 + i / 50.0);
        CHECK(cur >= prev);
        CHECK(cur <= model.loss_scale() / 2.0);
        prev = cur;
    }
    CHECK_THROWS_AS(premium(model, 0.5), DomainError);
}

TEST_CASE("premium derivatives match finite differences") {
    const auto model = default_model();
    for (double g : {1.1, 1.5, 1.9}) {
        const double fd1 = ct::central_difference([&](double x) { return premium(model, x); }, g, 1e-5);
        const double fd2 = ct::central_difference([&](double x) { return premium_slope(model, x); }, g, 1e-5);
        CHECK(std::abs(premium_slope(model, g) - fd1) <= 1e-6 * std::max(1.0, std::abs(fd1)));
        CHECK(std::abs(premium_curvature(model, g) - fd2) <= 1e-6 * std::max(1.0, std::abs(fd2)));
        CHECK(premium_slope(model, g) > 0.0);
        CHECK(premium_curvature(model, g) < 0.0);
    }
}

TEST_CASE("risk model rejects invalid parameters") {
    CHECK_THROWS_AS(RiskModel(0.0, 100, 10.0, 10.0), DomainError);
    CHECK_THROWS_AS(RiskModel(10.0, 0, 10.0, 10.0), DomainError);
    CHECK_THROWS_AS(RiskModel(10.0, 100, 0.0, 10.0), DomainError);
    CHECK_THROWS_AS(RiskModel(10.0, 100, 10.0, -1.0), DomainError);
    CHECK_THROWS_AS(RiskModel(10.0, 100, 10.0, 10.0, 0), DomainError);
    const RiskModel m(10.0, 300, 10.0, 10.0);
    CHECK(m.loss_scale() == 30000.0);
    CHECK(m.reward_scale() == 30000.0);
}

TEST_CASE("sigma penalty") {
    CHECK(sigma_penalty(0.5, 1.7, 10.0) == 0.0);
    CHECK(sigma_penalty(0.9, 1.0, 10.0) == 0.0);
    CHECK(std::abs(sigma_penalty(0.75, 2.0, 10.0) - 16.0) < 1e-12);

    ct::Rng rng(9);
    for (int k = 0; k < 30; ++k) {
        const double h = rng.uniform(0.5, 1.0);
        const double g = rng.uniform(1.0, 2.0);
        const double b = rng.uniform(1.5, 12.0);
        const auto s = [&](double x) { return sigma_penalty(h, x, b); };
        const auto ds = [&](double x) { return sigma_dgamma(h, x, b); };
        const auto dsh = [&](double x) { return sigma_dgamma(x, g, b); };
        const double fd1 = ct::central_difference(s, g);
        const double fd2 = ct::central_difference(ds, g);
        CHECK(std::abs(sigma_dgamma(h, g, b) - fd1) <= 1e-6 * std::max(1.0, std::abs(fd1)));
        CHECK(std::abs(sigma_dgamma2(h, g, b) - fd2) <= 1e-6 * std::max(1.0, std::abs(fd2)));
        if (h > 0.51 && h < 0.99) {
            const double fd3 = ct::central_difference(dsh, h);
            CHECK(std::abs(sigma_dgamma_dhbar(h, g, b) - fd3) <= 1e-6 * std::max(1.0, std::abs(fd3)));
        }
        // Convex in gamma for beta > 1.
        CHECK(sigma_dgamma2(h, g, b) >= 0.0);
    }
    CHECK_THROWS_AS(sigma_penalty(0.75, 2.0, 1.0), DomainError);
    CHECK_THROWS_AS(sigma_penalty(0.75, 2.0, 0.5), DomainError);
}
