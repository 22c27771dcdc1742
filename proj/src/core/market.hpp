#pragma once

#include <string>

#include "errors.hpp"

namespace ruin {

// Market primitives: riskless rate r, risky drift mu and volatility sigma,
// and the hazard rate lambda of the exponential death time.
struct MarketParams {
    double riskless_rate = 0.0;     // r, per year
    double risky_drift = 0.0;       // mu, per year
    double risky_volatility = 0.0;  // sigma, per sqrt(year)
    double hazard_rate = 0.0;       // lambda, per year

    // Throws invalid_params unless r > 0, sigma > 0, lambda > 0 and mu > r.
    void validate() const;

    double premium() const { return risky_drift - riskless_rate; }
};

// Ratcheted consumption rate c(m) as a function of maximum wealth, with an
// exact derivative. Two parametric families:
//   Affine: c(m) = slope * m + intercept
//   Power:  c(m) = scale * m^exponent
class ConsumptionSpec {
public:
    enum class Family { affine, power };

    static ConsumptionSpec affine(double slope, double intercept);
    static ConsumptionSpec power(double scale, double exponent);

    Family family() const { return family_; }
    double a() const { return a_; }  // slope or scale
    double b() const { return b_; }  // intercept or exponent

    double value(double m) const;
    double derivative(double m) const;

    // Ratchet-regime computations need c'(m) > 0 on the domain of use; a flat
    // affine function is rejected there rather than silently accepted.
    void require_ratchet_usable() const;

    std::string describe() const;

private:
    ConsumptionSpec(Family f, double a, double b) : family_(f), a_(a), b_(b) {}

    Family family_;
    double a_;
    double b_;
};

// Dimensionless constants derived from the market parameters.
//   delta = ((mu - r)/sigma)^2 / 2
//   gamma: larger root of  r g^2 - (r + lambda + delta) g + lambda = 0,  > 1
//   b1, b2: roots of  delta B^2 - (r - lambda + delta) B - lambda = 0,
//           b1 > 1, b2 < 0, and b1 = gamma/(gamma - 1).
struct DerivedConstants {
    double delta = 0.0;
    double gamma = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
};

DerivedConstants derive_constants(const MarketParams& params);

// Current wealth and running maximum wealth. Valid when w <= m and m > 0.
struct AgentState {
    double wealth = 0.0;
    double max_wealth = 0.0;

    void validate() const;
};

enum class Regime {
    ruined,              // w <= 0
    safe_level,          // w >= c(m)/r: ruin impossible
    fixed_max_below_safe,// 0 < w < c(m)/r <= m: maximum never moves (section 3)
    ratchet_blocked,     // m < c(m)/r, ratcheting not optimal (section 4.1)
    ratchet_active,      // m < c(m)/r, ratcheting optimal up to m* (section 4.3)
};

const char* regime_name(Regime r);

// The safe level c(m)/r: wealth at or above it makes ruin impossible.
double safe_level(const ConsumptionSpec& consumption, const MarketParams& params,
                  double m);

// Total, exclusive classification of a state. The knife edge w = c(m)/r is
// classified as safe_level. In the m < c(m)/r branch this solves the section
// 4.1 boundary to evaluate the Theorem-4.2-style condition
//   c(m) - m c'(m) <= lambda / y0(m).
Regime classify_regime(const MarketParams& params, const ConsumptionSpec& consumption,
                       const AgentState& state);

} // namespace ruin
