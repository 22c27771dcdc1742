#include "blocked.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "root_find.hpp"

namespace ruin {

namespace {

double scaled(double residual, double scale) {
    return std::abs(residual) / std::max(1e-300, scale);
}

double max3(double a, double b, double c) { return std::max(a, std::max(b, c)); }

} // namespace

double BoundaryResiduals::worst() const {
    return std::max(std::max(value_at_y0, slope_at_y0),
                    std::max(slope_at_ym, curvature_at_ym));
}

double boundary_ratio_lhs(const DerivedConstants& k, double z) {
    const double span = k.b1 - k.b2;
    return (1.0 - k.b2) / span * std::pow(z, k.b1 - 1.0)
         + (k.b1 - 1.0) / span * std::pow(z, k.b2 - 1.0);
}

DualBoundary solve_boundary(const MarketParams& params, const ConsumptionSpec& consumption,
                            double m) {
    params.validate();
    if (!(m > 0.0)) fail(ErrorCode::invalid_params, "maximum wealth must be > 0");
    consumption.require_ratchet_usable();
    const DerivedConstants k = derive_constants(params);
    const double r = params.riskless_rate;
    const double c = consumption.value(m);
    if (!(m < c / r))
        fail(ErrorCode::out_of_regime, "solve_boundary requires m < c(m)/r");

    const double target = c / (c - r * m); // > 1

    // The ratio equation's left side is 1 at z = 1 and strictly increasing,
    // so geometric expansion always brackets unless inputs are pathological.
    double hi = 2.0;
    while (boundary_ratio_lhs(k, hi) < target) {
        hi *= 2.0;
        if (hi > 1e12)
            fail(ErrorCode::no_bracket, "ratio bracket expansion exceeded 1e12");
    }
    // Bisect on ln z: 240 halvings put z at ~1e-13 relative or better.
    const double lx = bisect(
        [&](double x) { return boundary_ratio_lhs(k, std::exp(x)) - target; },
        0.0, std::log(hi), 240);
    const double z = std::exp(lx);

    const double span = k.b1 - k.b2;
    const double zb1 = std::pow(z, k.b1 - 1.0);
    const double zb2 = std::pow(z, k.b2 - 1.0);
    const double inv_y0 = c / r
        - (c / r - m) * ((1.0 - k.b2) / (k.b1 * span) * zb1
                        + (k.b1 - 1.0) / (k.b2 * span) * zb2);
    if (!(inv_y0 > 0.0)) {
        std::ostringstream os;
        os << "closed form for 1/y_0 is not positive (" << inv_y0
           << ") at m=" << m << "; boundary does not exist at these inputs";
        fail(ErrorCode::no_bracket, os.str());
    }

    DualBoundary b;
    b.m = m;
    b.c_of_m = c;
    b.c_over_r = c / r;
    b.z = z;
    b.y_0 = 1.0 / inv_y0;
    b.y_m = b.y_0 / z;
    b.d1 = -(1.0 - k.b2) / (k.b1 * span) * (c / r - m) * std::pow(b.y_m, 1.0 - k.b1);
    b.d2 = -(k.b1 - 1.0) / (k.b2 * span) * (c / r - m) * std::pow(b.y_m, 1.0 - k.b2);

    if (!(b.d1 < 0.0) || !(b.d2 > 0.0) || !(b.y_0 > b.y_m) || !(b.y_m > 0.0))
        fail(ErrorCode::internal, "boundary solution violates sign structure");

    const BoundaryResiduals res = boundary_residuals(b, k);
    if (res.worst() > 1e-9) {
        std::ostringstream os;
        os << "boundary residuals too large after solve: " << res.worst();
        fail(ErrorCode::convergence_failure, os.str());
    }
    return b;
}

BoundaryResiduals boundary_residuals(const DualBoundary& b, const DerivedConstants& k) {
    const double b1 = k.b1, b2 = k.b2;
    BoundaryResiduals out;

    // Row scales are the largest participating term, so the measure stays
    // meaningful near degenerate corners where terms nearly cancel.
    {
        const double t1 = b.d1 * std::pow(b.y_0, b1);
        const double t2 = b.d2 * std::pow(b.y_0, b2);
        const double t3 = b.c_over_r * b.y_0;
        out.value_at_y0 = scaled(t1 + t2 + t3 - 1.0,
                                 std::max(1.0, max3(std::abs(t1), std::abs(t2), t3)));
    }
    {
        const double t1 = b.d1 * b1 * std::pow(b.y_0, b1 - 1.0);
        const double t2 = b.d2 * b2 * std::pow(b.y_0, b2 - 1.0);
        out.slope_at_y0 = scaled(t1 + t2 + b.c_over_r,
                                 max3(std::abs(t1), std::abs(t2), b.c_over_r));
    }
    {
        const double t1 = b.d1 * b1 * std::pow(b.y_m, b1 - 1.0);
        const double t2 = b.d2 * b2 * std::pow(b.y_m, b2 - 1.0);
        out.slope_at_ym = scaled(t1 + t2 + b.c_over_r - b.m,
                                 max3(std::abs(t1), std::abs(t2), b.c_over_r));
    }
    {
        const double t1 = b.d1 * b1 * (b1 - 1.0) * std::pow(b.y_m, b1 - 2.0);
        const double t2 = b.d2 * b2 * (b2 - 1.0) * std::pow(b.y_m, b2 - 2.0);
        out.curvature_at_ym = scaled(t1 + t2, std::max(std::abs(t1), std::abs(t2)));
    }
    return out;
}

DualFunction::DualFunction(const MarketParams& params, const DualBoundary& boundary)
    : params_(params), boundary_(boundary), constants_(derive_constants(params)) {}

double DualFunction::value(double y) const {
    const double slack = 1e-12 * boundary_.y_0;
    if (y < boundary_.y_m - slack || y > boundary_.y_0 + slack)
        fail(ErrorCode::domain_error, "dual variable outside [y_m, y_0]");
    return boundary_.d1 * std::pow(y, constants_.b1)
         + boundary_.d2 * std::pow(y, constants_.b2)
         + boundary_.c_over_r * y;
}

double DualFunction::deriv(double y) const {
    return boundary_.d1 * constants_.b1 * std::pow(y, constants_.b1 - 1.0)
         + boundary_.d2 * constants_.b2 * std::pow(y, constants_.b2 - 1.0)
         + boundary_.c_over_r;
}

double DualFunction::second(double y) const {
    return boundary_.d1 * constants_.b1 * (constants_.b1 - 1.0) * std::pow(y, constants_.b1 - 2.0)
         + boundary_.d2 * constants_.b2 * (constants_.b2 - 1.0) * std::pow(y, constants_.b2 - 2.0);
}

double DualFunction::third(double y) const {
    return boundary_.d1 * constants_.b1 * (constants_.b1 - 1.0) * (constants_.b1 - 2.0)
               * std::pow(y, constants_.b1 - 3.0)
         + boundary_.d2 * constants_.b2 * (constants_.b2 - 1.0) * (constants_.b2 - 2.0)
               * std::pow(y, constants_.b2 - 3.0);
}

double DualFunction::invert(double w) const {
    const double m = boundary_.m;
    if (w < 0.0 || w > m)
        fail(ErrorCode::domain_error, "invert: wealth outside [0, m]");
    if (w == 0.0) return boundary_.y_0;
    if (w == m) return boundary_.y_m;

    // psi-hat' decreases from m at y_m to 0 at y_0.
    const double y = bisect([&](double y_) { return w - deriv(y_); },
                            boundary_.y_m, boundary_.y_0, 200);
    if (std::abs(deriv(y) - w) > 1e-12 * std::max(1.0, m))
        fail(ErrorCode::convergence_failure, "invert: bisection did not meet tolerance");
    return y;
}

double DualFunction::psi(double w) const {
    if (w == 0.0) return 1.0; // f(y_0) = 1 exactly
    const double y = invert(w);
    double v = value(y) - w * y;
    if (v < -1e-10 || v > 1.0 + 1e-10)
        fail(ErrorCode::internal, "psi left [0,1] beyond rounding slack");
    return std::clamp(v, 0.0, 1.0);
}

double DualFunction::pi(double w) const {
    if (!(w > 0.0) || w > boundary_.m)
        fail(ErrorCode::out_of_regime, "pi: wealth outside (0, m]");
    const double y = invert(w);
    const double amount = -params_.premium() / (params_.risky_volatility * params_.risky_volatility)
                          * y * second(y);
    // psi-hat''(y_m) = 0, so the exact value at w = m is 0; rounding can leave
    // a harmless negative speck.
    return std::max(0.0, amount);
}

double DualFunction::ode_residual(double y) const {
    const double k_delta = constants_.delta;
    const double r = params_.riskless_rate;
    const double lam = params_.hazard_rate;
    const double t1 = k_delta * y * y * second(y);
    const double t2 = -(r - lam) * y * deriv(y);
    const double t3 = -lam * value(y);
    const double t4 = boundary_.c_of_m * y;
    const double scale = max3(std::abs(t1), std::abs(t2), std::max(std::abs(t3), std::abs(t4)));
    return scaled(t1 + t2 + t3 + t4, scale);
}

RatchetCondition ratchet_condition(const MarketParams& params,
                                   const ConsumptionSpec& consumption, double m) {
    const DualBoundary b = solve_boundary(params, consumption, m);
    RatchetCondition out;
    out.y_0 = b.y_0;
    out.lhs = consumption.value(m) - m * consumption.derivative(m);
    out.rhs = params.hazard_rate / b.y_0;
    out.holds = out.lhs <= out.rhs;

    // Same condition written as in the slope form: c'(m) >= (c(m) - lambda/y_0)/m.
    // The two are algebraically identical; disagreement is only possible within
    // rounding of an exact tie.
    const bool slope_form = consumption.derivative(m) >= (consumption.value(m) - out.rhs) / m;
    if (slope_form != out.holds) {
        const double margin = std::abs(out.lhs - out.rhs);
        if (margin > 1e-9 * std::max(1.0, std::abs(out.rhs)))
            fail(ErrorCode::internal, "ratchet condition forms disagree beyond rounding");
    }
    return out;
}

namespace {

// Stopping predicate of the m* search. Safe-level clause first: it needs no
// boundary solve and guards the regime precondition of the solve itself.
bool ratchet_stops(const MarketParams& params, const ConsumptionSpec& consumption,
                   double m) {
    if (m >= consumption.value(m) / params.riskless_rate) return true;
    return ratchet_condition(params, consumption, m).holds;
}

} // namespace

MStarResult m_star(const MarketParams& params, const ConsumptionSpec& consumption,
                   double m0, const MStarOptions& options) {
    params.validate();
    consumption.require_ratchet_usable();
    if (!(m0 > 0.0)) fail(ErrorCode::invalid_params, "m0 must be > 0");
    if (ratchet_stops(params, consumption, m0))
        fail(ErrorCode::invalid_params,
             "m_star requires the ratchet condition to fail at m0 (RatchetActive)");

    double lo = m0;
    double hi = m0 * options.grid_factor;
    while (!ratchet_stops(params, consumption, hi)) {
        lo = hi;
        hi *= options.grid_factor;
        if (hi > options.m_max_factor * m0)
            fail(ErrorCode::unbounded, "m* search exceeded m_max with no stopping point");
    }
    const double tol = options.tol_rel * m0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (ratchet_stops(params, consumption, mid))
            hi = mid;
        else
            lo = mid;
    }

    MStarResult out;
    out.m_star = 0.5 * (lo + hi);
    out.anchor = lo;
    out.safe_level_binding =
        hi >= consumption.value(hi) / params.riskless_rate - tol;
    {
        const RatchetCondition below = ratchet_condition(params, consumption, lo);
        out.gap_below = below.lhs - below.rhs; // > 0 while ratcheting is optimal
    }
    if (hi < consumption.value(hi) / params.riskless_rate) {
        const RatchetCondition above = ratchet_condition(params, consumption, hi);
        out.gap_above = above.lhs - above.rhs;
    } else {
        out.gap_above = consumption.value(hi) / params.riskless_rate - hi; // <= 0 at safe crossing
    }
    return out;
}

} // namespace ruin
