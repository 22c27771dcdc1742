#pragma once

#include <string>
#include <vector>

#include "blocked.hpp"
#include "market.hpp"

namespace ruin {

// One node of the integrated moving free boundary.
struct MovingBoundaryNode {
    double m = 0.0;
    double y0 = 0.0;
    double ym = 0.0;
    double d1t = 0.0;  // coefficient of y^{b1} in the m-dependent dual
    double d2t = 0.0;  // coefficient of y^{b2}
};

// Coefficients of the m-dependent dual at (m, y0): closed forms from the two
// boundary rows at y0 (value 1, slope 0).
struct TildeCoefficients {
    double d1t = 0.0;
    double d2t = 0.0;
};

TildeCoefficients tilde_coefficients(const DerivedConstants& k, double c_over_r,
                                     double y0);

// Scaled residual of the algebraic constraint tying ym to (m, y0): the
// constraint in small-term form, relative to the largest participating term.
double constraint_residual(const MarketParams& params, const ConsumptionSpec& consumption,
                           const DerivedConstants& k, double m, double y0, double ym,
                           const TildeCoefficients& ct);

// Root ym in (0, y0) of the algebraic constraint at fixed (m, y0): the dual
// slope equals m on the concave branch. Throws no_root when the constraint
// has no solution with ym/y0 in (1e-12, 1 - 1e-12).
double solve_ym_given_y0(const MarketParams& params, const ConsumptionSpec& consumption,
                         double m, double y0);

// d y0 / d m from the linear relation obtained by differentiating the y0-row
// closed forms in m; throws singular_derivative when the y0'/y0 coefficient
// vanishes (|coef| < 1e-14).
double y0_derivative(const MarketParams& params, const ConsumptionSpec& consumption,
                     double m, double y0, double ym);

struct IntegrateOptions {
    int base_steps = 200;        // max step = (m* - m0)/base_steps
    double ym_step_limit = 0.05; // halve the step when ym moves more than 5%
    int max_halvings = 30;
};

// The section 4.3 solution on [m0, m*]: tabulated y0(m) with monotone-cubic
// interpolation in m; ym re-solved from the algebraic constraint at query
// time so the constraint stays exact at evaluation points.
class MovingBoundary {
public:
    const MarketParams& params() const { return params_; }
    const ConsumptionSpec& consumption() const { return consumption_; }
    const DerivedConstants& constants() const { return constants_; }
    const std::vector<MovingBoundaryNode>& nodes() const { return nodes_; }

    double m0() const { return nodes_.front().m; }
    double m_star() const { return m_star_; }
    double anchor_m() const { return nodes_.back().m; }
    bool safe_level_binding() const { return safe_level_binding_; }

    // Interpolated y0 at m in [m0, anchor]; monotone cubic through the nodes.
    double y0_at(double m) const;

    // Dual coefficients at m; boundary rows at y0 hold by construction. At the
    // terminal node the stored (section 4.1) coefficients are returned.
    TildeCoefficients coefficients_at(double m) const;

    // Ruin probability at (w, m), 0 <= w <= m, m in [m0, anchor].
    double psi(double w, double m) const;

    // Feedback amount in the risky asset on 0 < w <= m; at the terminal
    // maximum the value at w = m is 0, below it it stays positive.
    double pi(double w, double m) const;

    // Versioned JSON round trip for caching between runs.
    std::string to_json() const;
    static MovingBoundary from_json(const std::string& text);

    friend MovingBoundary integrate_boundaries(const MarketParams&, const ConsumptionSpec&,
                                               double, const IntegrateOptions&);

private:
    MovingBoundary(const MarketParams& p, const ConsumptionSpec& c)
        : params_(p), consumption_(c), constants_(derive_constants(p)) {}

    void finalize();  // sort nodes ascending, build interpolant, check invariants
    double ym_at(double m, double y0, const TildeCoefficients& ct) const;

    MarketParams params_;
    ConsumptionSpec consumption_;
    DerivedConstants constants_;
    std::vector<MovingBoundaryNode> nodes_;  // ascending in m after finalize
    std::vector<double> slopes_;             // pchip slopes of y0 vs m
    double m_star_ = 0.0;
    bool safe_level_binding_ = false;
};

// Integrates the moving boundary backward from m* (computed via m_star) to
// m0. Requires the RatchetActive regime at m0.
MovingBoundary integrate_boundaries(const MarketParams& params,
                                    const ConsumptionSpec& consumption, double m0,
                                    const IntegrateOptions& options = {});

} // namespace ruin
