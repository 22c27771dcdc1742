#pragma once

#include "market.hpp"

namespace ruin {

// Free-boundary data of the section 4.1 dual problem at a fixed maximum
// wealth m with m < c(m)/r:
//   dual ODE   delta y^2 f'' - (r - lambda) y f' - lambda f + c(m) y = 0
//   f(y_0) = 1, f'(y_0) = 0, f'(y_m) = m, f''(y_m) = 0.
struct DualBoundary {
    double y_m = 0.0;
    double y_0 = 0.0;
    double d1 = 0.0;   // coefficient of y^{b1}, negative
    double d2 = 0.0;   // coefficient of y^{b2}, positive
    double m = 0.0;
    double c_of_m = 0.0;
    double c_over_r = 0.0;  // the safe level c(m)/r
    double z = 0.0;    // y_0 / y_m
};

// Relative residuals of the four boundary rows after a solve.
struct BoundaryResiduals {
    double value_at_y0 = 0.0;
    double slope_at_y0 = 0.0;
    double slope_at_ym = 0.0;
    double curvature_at_ym = 0.0;

    double worst() const;
};

// Solves the boundary system: the ratio z = y_0/y_m from the monotone scalar
// equation, then y_0, y_m, d1, d2 in closed form. Throws out_of_regime when
// m >= c(m)/r, no_bracket when bracket expansion for z exceeds 1e12 or the
// closed-form 1/y_0 fails to be positive.
DualBoundary solve_boundary(const MarketParams& params, const ConsumptionSpec& consumption,
                            double m);

BoundaryResiduals boundary_residuals(const DualBoundary& b, const DerivedConstants& k);

// Left side of the scalar ratio equation for z = y_0/y_m; strictly increasing
// on [1, inf) from 1. Exposed for uniqueness probes.
double boundary_ratio_lhs(const DerivedConstants& k, double z);

// The concave dual psi-hat on [y_m, y_0] and everything derived from it:
// the primal value Psi (Legendre transform) and the feedback strategy.
class DualFunction {
public:
    DualFunction(const MarketParams& params, const DualBoundary& boundary);

    const DualBoundary& boundary() const { return boundary_; }
    const DerivedConstants& constants() const { return constants_; }

    // psi-hat and derivatives. value() enforces y in [y_m, y_0].
    double value(double y) const;
    double deriv(double y) const;         // psi-hat'
    double second(double y) const;        // psi-hat''
    double third(double y) const;         // psi-hat'''

    // Unique y in [y_m, y_0] with psi-hat'(y) = w, for w in [0, m].
    double invert(double w) const;

    // Minimum ruin probability under the blocked constraint, w in [0, m].
    double psi(double w) const;

    // Optimal amount in the risky asset; positive on (0, m), 0 at w = m.
    double pi(double w) const;

    // Residual of the dual ODE at y, relative to the largest term.
    double ode_residual(double y) const;

private:
    MarketParams params_;
    DualBoundary boundary_;
    DerivedConstants constants_;
};

// Certificate-carrying result of the ratcheting test: ratcheting is NOT
// optimal (the maximum stays put) iff lhs <= rhs where
//   lhs = c(m) - m c'(m),  rhs = lambda / y_0(m).
struct RatchetCondition {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double y_0 = 0.0;
};

RatchetCondition ratchet_condition(const MarketParams& params,
                                   const ConsumptionSpec& consumption, double m);

struct MStarOptions {
    double m_max_factor = 1e6;  // search abandoned beyond m0 * m_max_factor
    double grid_factor = 1.05;  // coarse geometric sweep factor
    double tol_rel = 1e-8;      // bisection width, relative to m0
};

struct MStarResult {
    double m_star = 0.0;        // smallest m > m0 where ratcheting stops
    double anchor = 0.0;        // last probed m with ratcheting still optimal
    bool safe_level_binding = false;  // true: m* >= c(m*)/r binds; false: condition binds
    double gap_below = 0.0;     // condition gap just below m*
    double gap_above = 0.0;     // condition gap (or safe margin) just above
};

// Theorem 4.8 stopping level: first m > m0 at which m >= c(m)/r or the
// ratchet condition starts to hold. Requires the ratchet condition to fail
// at m0. Coarse geometric sweep, then bisection.
MStarResult m_star(const MarketParams& params, const ConsumptionSpec& consumption,
                   double m0, const MStarOptions& options = {});

} // namespace ruin
