#pragma once

#include <functional>
#include <string>
#include <vector>

#include "market.hpp"
#include "simulate.hpp"

namespace ruin {

struct CheckRow {
    std::string label;
    double location = 0.0;
    double value = 0.0;
    bool ok = true;
};

struct CheckReport {
    std::string name;
    double worst_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::vector<CheckRow> rows;

    std::string to_json() const;
    void finish();  // pass = worst <= threshold && all rows ok
};

// A wealth section of a candidate value function. Analytic derivatives are
// optional; when absent, central differences at relative step 1e-5 are used
// and the looser thresholds apply.
struct ValueSection {
    std::function<double(double)> value;
    std::function<double(double)> dw;   // optional
    std::function<double(double)> dww;  // optional
};

struct Grid {
    double lo = 0.0;
    double hi = 0.0;
    int points = 100;  // interior points, open interval
};

// Residual of the dynamic-programming equation with the optimizer eliminated:
//   (r w - c(m)) psi_w - delta psi_w^2 / psi_ww - lambda psi = 0.
// Monotonicity/convexity are checked first; non-convex points are reported as
// degenerate rather than silently divided by.
CheckReport hjb_residual(const ValueSection& f, const MarketParams& params,
                         double c_of_m, const Grid& grid);

// Numerical screening of the verification-theorem conditions for a candidate
// two-argument value function h(w, m): monotone non-increasing and convex in
// w; h(0, m) = 1; h = 0 at the safe level when reachable; the diagonal
// m-derivative h_m(m, m) bounded below by -1e-3.
CheckReport verification_conditions(const std::function<double(double, double)>& h,
                                    const MarketParams& params,
                                    const ConsumptionSpec& consumption, double m,
                                    const Grid& wgrid);

// The comparison suite for the blocked regime: the constant-consumption
// benchmark lies below psi, the strategy sits below the unconstrained one,
// and both gaps widen with wealth.
CheckReport section42_suite(const MarketParams& params, const ConsumptionSpec& consumption,
                            double m, int points = 50);

// Agreement of an analytic value with a Monte Carlo estimate within
// k_sigma standard errors plus the truncation bias bound.
CheckReport mc_cross_check(double analytic, const RuinEstimate& estimate, double k_sigma = 3.0);

} // namespace ruin
