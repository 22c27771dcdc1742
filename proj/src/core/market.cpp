#include "market.hpp"

#include <cmath>
#include <sstream>

#include "blocked.hpp"

namespace ruin {

void MarketParams::validate() const {
    if (!(riskless_rate > 0.0))
        fail(ErrorCode::invalid_params, "riskless rate must be > 0");
    if (!(risky_volatility > 0.0))
        fail(ErrorCode::invalid_params, "risky volatility must be > 0");
    if (!(hazard_rate > 0.0))
        fail(ErrorCode::invalid_params, "hazard rate must be > 0");
    if (!(risky_drift > riskless_rate))
        fail(ErrorCode::invalid_params, "risky drift must exceed the riskless rate");
    if (!std::isfinite(riskless_rate) || !std::isfinite(risky_drift) ||
        !std::isfinite(risky_volatility) || !std::isfinite(hazard_rate))
        fail(ErrorCode::invalid_params, "market parameters must be finite");
}

ConsumptionSpec ConsumptionSpec::affine(double slope, double intercept) {
    if (!(slope >= 0.0) || !(intercept >= 0.0))
        fail(ErrorCode::invalid_params, "affine consumption needs slope >= 0 and intercept >= 0");
    if (slope == 0.0 && intercept == 0.0)
        fail(ErrorCode::invalid_params, "affine consumption cannot be identically zero");
    return ConsumptionSpec(Family::affine, slope, intercept);
}

ConsumptionSpec ConsumptionSpec::power(double scale, double exponent) {
    if (!(scale > 0.0))
        fail(ErrorCode::invalid_params, "power consumption needs scale > 0");
    if (!(exponent > 0.0))
        fail(ErrorCode::invalid_params, "power consumption needs exponent > 0");
    return ConsumptionSpec(Family::power, scale, exponent);
}

double ConsumptionSpec::value(double m) const {
    if (family_ == Family::affine) return a_ * m + b_;
    return a_ * std::pow(m, b_);
}

double ConsumptionSpec::derivative(double m) const {
    if (family_ == Family::affine) return a_;
    return a_ * b_ * std::pow(m, b_ - 1.0);
}

void ConsumptionSpec::require_ratchet_usable() const {
    if (family_ == Family::affine && a_ == 0.0)
        fail(ErrorCode::invalid_params,
             "constant consumption (affine slope 0) is not usable in ratchet regimes: c'(m) must be > 0");
}

std::string ConsumptionSpec::describe() const {
    std::ostringstream os;
    if (family_ == Family::affine)
        os << "affine(slope=" << a_ << ", intercept=" << b_ << ")";
    else
        os << "power(scale=" << a_ << ", exponent=" << b_ << ")";
    return os.str();
}

DerivedConstants derive_constants(const MarketParams& params) {
    params.validate();
    const double r = params.riskless_rate;
    const double lam = params.hazard_rate;
    const double ratio = params.premium() / params.risky_volatility;

    DerivedConstants k;
    k.delta = 0.5 * ratio * ratio;

    // gamma: larger root of r g^2 - (r + lam + delta) g + lam = 0.
    // Discriminant >= (r - lam)^2 + delta-terms > 0.
    const double bg = r + lam + k.delta;
    const double qg = 0.5 * (bg + std::sqrt(bg * bg - 4.0 * r * lam));
    k.gamma = qg / r;

    // b1: larger root of delta B^2 - (r - lam + delta) B - lam = 0, taken with
    // the additive branch; b2 from the product of roots to avoid cancellation.
    const double bb = r - lam + k.delta;
    k.b1 = (bb + std::sqrt(bb * bb + 4.0 * lam * k.delta)) / (2.0 * k.delta);
    k.b2 = -lam / (k.delta * k.b1);

    if (!(k.gamma > 1.0) || !(k.b1 > 1.0) || !(k.b2 < 0.0))
        fail(ErrorCode::internal, "derived constants violate structural bounds");
    return k;
}

void AgentState::validate() const {
    if (!std::isfinite(wealth) || !std::isfinite(max_wealth))
        fail(ErrorCode::invalid_params, "state must be finite");
    if (!(max_wealth > 0.0))
        fail(ErrorCode::invalid_params, "maximum wealth must be > 0");
    if (wealth > max_wealth)
        fail(ErrorCode::invalid_params, "wealth cannot exceed maximum wealth");
}

const char* regime_name(Regime r) {
    switch (r) {
        case Regime::ruined: return "Ruined";
        case Regime::safe_level: return "SafeLevel";
        case Regime::fixed_max_below_safe: return "FixedMaxBelowSafe";
        case Regime::ratchet_blocked: return "RatchetBlocked";
        case Regime::ratchet_active: return "RatchetActive";
    }
    return "?";
}

double safe_level(const ConsumptionSpec& consumption, const MarketParams& params,
                  double m) {
    if (!(m > 0.0)) fail(ErrorCode::invalid_params, "maximum wealth must be > 0");
    return consumption.value(m) / params.riskless_rate;
}

Regime classify_regime(const MarketParams& params, const ConsumptionSpec& consumption,
                       const AgentState& state) {
    params.validate();
    state.validate();
    const double w = state.wealth;
    const double m = state.max_wealth;
    if (w <= 0.0) return Regime::ruined;
    const double safe = safe_level(consumption, params, m);
    if (w >= safe) return Regime::safe_level;
    if (safe <= m) return Regime::fixed_max_below_safe;
    // m < c(m)/r: ratchet territory; route on the Theorem 4.2 condition.
    const RatchetCondition cond = ratchet_condition(params, consumption, m);
    return cond.holds ? Regime::ratchet_blocked : Regime::ratchet_active;
}

} // namespace ruin
