#pragma once

#include "market.hpp"

namespace ruin {

// Geometric coefficients of the shortfall Z = c(m)/r - W under the section 3
// strategy: dZ = Z (drift dt - vol dB). Used for exact simulation and for the
// closed-form hitting oracle.
struct ShortfallCoefficients {
    double drift = 0.0;  // r - 2 delta / (gamma - 1), per year
    double vol = 0.0;    // ((mu - r)/sigma) / (gamma - 1), per sqrt(year)
};

// Section 3 solution: minimum ruin probability when the maximum wealth can
// never increase (0 < w < c(m)/r <= m), with consumption frozen at c(m).
class FixedMaxSolution {
public:
    FixedMaxSolution(const MarketParams& params, const ConsumptionSpec& consumption,
                     double m);

    double m() const { return m_; }
    double c_of_m() const { return c_; }
    double safe_w() const { return c_ / params_.riskless_rate; }
    const DerivedConstants& constants() const { return constants_; }

    // Total on real w: 1 for w <= 0, 0 at or above the safe level, otherwise
    // (1 - r w / c(m))^gamma evaluated via exp(gamma log1p(.)) for precision
    // near the safe level.
    double psi(double w) const;

    // Analytic w-derivatives on (0, c/r); used by the diagnostics suite.
    double psi_dw(double w) const;
    double psi_dww(double w) const;

    // Feedback amount in the risky asset on (0, c/r); errors outside.
    double pi(double w, const MarketParams& params) const;

    ShortfallCoefficients shortfall_coefficients() const;

private:
    MarketParams params_;
    DerivedConstants constants_;
    double m_;
    double c_;
};

} // namespace ruin
