#include <doctest.h>

#include <cmath>
#include <random>

#include "blocked.hpp"
#include "market.hpp"

using namespace ruin;

namespace {
const MarketParams kBase{0.05, 0.10, 0.20, 0.04};
}

TEST_CASE("derived constants at the baseline market") {
    const DerivedConstants k = derive_constants(kBase);
    CHECK(k.delta == doctest::Approx(0.03125).epsilon(1e-15));
    CHECK(k.gamma == doctest::Approx(2.03113).epsilon(1e-4));
    CHECK(k.b1 == doctest::Approx(1.96981).epsilon(1e-4));
    CHECK(k.b2 == doctest::Approx(-0.64981).epsilon(1e-4));

    // quadratic-root structure
    CHECK(std::abs(k.b1 - k.gamma / (k.gamma - 1.0)) <= 1e-12 * k.b1);
    const double lam = kBase.hazard_rate, r = kBase.riskless_rate;
    CHECK(std::abs(k.b1 * k.b2 + lam / k.delta) <= 1e-12 * lam / k.delta);
    const double sum = (r - lam + k.delta) / k.delta;
    CHECK(std::abs(k.b1 + k.b2 - sum) <= 1e-12 * std::abs(sum));
}

TEST_CASE("derived constants reject invalid parameters") {
    MarketParams p = kBase;
    p.risky_drift = p.riskless_rate;  // mu = r violates the strict inequality
    CHECK_THROWS_AS(derive_constants(p), Error);
    p = kBase;
    p.risky_volatility = 0.0;
    CHECK_THROWS_AS(derive_constants(p), Error);
    p = kBase;
    p.riskless_rate = -0.01;
    CHECK_THROWS_AS(derive_constants(p), Error);
    p = kBase;
    p.hazard_rate = 0.0;
    CHECK_THROWS_AS(derive_constants(p), Error);
}

TEST_CASE("derived constants depend only on (mu-r)/sigma, r, lambda") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (int i = 0; i < 50; ++i) {
        MarketParams p = kBase;
        p.risky_drift = 0.03 + 0.2 * u(gen) / 5.0;
        p.riskless_rate = 0.5 * p.risky_drift * u(gen) / 5.0 + 1e-3;
        p.risky_volatility = 0.1 + 0.1 * u(gen);
        p.hazard_rate = 0.01 + 0.02 * u(gen);
        const double scale = u(gen);
        MarketParams q = p;
        q.risky_drift = p.riskless_rate + scale * (p.risky_drift - p.riskless_rate);
        q.risky_volatility = scale * p.risky_volatility;
        const DerivedConstants a = derive_constants(p);
        const DerivedConstants b = derive_constants(q);
        CHECK(std::abs(a.delta - b.delta) <= 1e-12 * a.delta);
        CHECK(std::abs(a.gamma - b.gamma) <= 1e-12 * a.gamma);
        CHECK(std::abs(a.b1 - b.b1) <= 1e-12 * a.b1);
        CHECK(std::abs(a.b2 - b.b2) <= 1e-12 * std::abs(a.b2));
    }
}

TEST_CASE("consumption families") {
    const ConsumptionSpec aff = ConsumptionSpec::affine(0.04, 1.0);
    CHECK(aff.value(100.0) == doctest::Approx(5.0));
    CHECK(aff.derivative(100.0) == doctest::Approx(0.04));

    const ConsumptionSpec pow_ = ConsumptionSpec::power(2.0, 0.5);
    CHECK(pow_.value(25.0) == doctest::Approx(10.0));
    CHECK(pow_.derivative(25.0) == doctest::Approx(0.2));

    CHECK_THROWS_AS(ConsumptionSpec::affine(-0.1, 1.0), Error);
    CHECK_THROWS_AS(ConsumptionSpec::affine(0.0, 0.0), Error);
    CHECK_THROWS_AS(ConsumptionSpec::power(0.0, 1.0), Error);
    CHECK_THROWS_AS(ConsumptionSpec::power(1.0, 0.0), Error);

    // constant consumption is fine in itself but unusable in ratchet regimes
    const ConsumptionSpec flat = ConsumptionSpec::affine(0.0, 4.0);
    CHECK(flat.value(100.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(flat.require_ratchet_usable(), Error);
}

TEST_CASE("safe level") {
    const ConsumptionSpec c1 = ConsumptionSpec::affine(0.04, 0.0);
    CHECK(safe_level(c1, kBase, 100.0) == doctest::Approx(80.0));
    const ConsumptionSpec c2 = ConsumptionSpec::affine(0.06, 0.0);
    CHECK(safe_level(c2, kBase, 100.0) == doctest::Approx(120.0));
    const ConsumptionSpec c3 = ConsumptionSpec::power(1.0, 1.0);
    CHECK(safe_level(c3, kBase, 42.0) == doctest::Approx(42.0 / 0.05));
}

TEST_CASE("state invariants") {
    CHECK_THROWS_AS(AgentState{1.0, 0.0}.validate(), Error);   // m must be positive
    CHECK_THROWS_AS((AgentState{2.0, 1.0}).validate(), Error); // w <= m
    CHECK_NOTHROW((AgentState{-5.0, 1.0}).validate());         // negative wealth is a state
}

TEST_CASE("regime classification") {
    const ConsumptionSpec low = ConsumptionSpec::affine(0.04, 0.0);
    const ConsumptionSpec high = ConsumptionSpec::affine(0.06, 0.0);

    CHECK(classify_regime(kBase, low, {-1.0, 100.0}) == Regime::ruined);
    CHECK(classify_regime(kBase, low, {0.0, 100.0}) == Regime::ruined);
    CHECK(classify_regime(kBase, low, {40.0, 100.0}) == Regime::fixed_max_below_safe);
    CHECK(classify_regime(kBase, low, {80.0, 100.0}) == Regime::safe_level);  // knife edge
    CHECK(classify_regime(kBase, low, {90.0, 100.0}) == Regime::safe_level);
    CHECK(classify_regime(kBase, high, {50.0, 100.0}) == Regime::ratchet_blocked);

    // proportional consumption never makes ratcheting optimal
    for (double w : {1.0, 25.0, 60.0, 99.0})
        CHECK(classify_regime(kBase, high, {w, 100.0}) != Regime::ratchet_active);

    // concave power consumption with c'(0) > r does, below the safe crossing
    const ConsumptionSpec conc = ConsumptionSpec::power(1.0, 0.5);
    CHECK(classify_regime(kBase, conc, {50.0, 100.0}) == Regime::ratchet_active);
}

TEST_CASE("classification is total and exclusive on a grid") {
    const ConsumptionSpec specs[] = {ConsumptionSpec::affine(0.06, 0.0),
                                     ConsumptionSpec::affine(0.04, 1.0),
                                     ConsumptionSpec::power(1.0, 0.5),
                                     ConsumptionSpec::power(0.01, 1.5)};
    for (const ConsumptionSpec& c : specs) {
        for (double m : {20.0, 50.0, 100.0, 200.0}) {
            for (double frac : {-0.1, 0.0, 0.2, 0.5, 0.9, 1.0}) {
                const AgentState st{frac * m, m};
                CHECK_NOTHROW(classify_regime(kBase, c, st));
            }
        }
    }
}
