#include "fixed_max.hpp"

#include <cmath>

namespace ruin {

FixedMaxSolution::FixedMaxSolution(const MarketParams& params,
                                   const ConsumptionSpec& consumption, double m)
    : params_(params), constants_(derive_constants(params)), m_(m),
      c_(consumption.value(m)) {
    if (!(m > 0.0)) fail(ErrorCode::invalid_params, "maximum wealth must be > 0");
    if (!(c_ > 0.0)) fail(ErrorCode::invalid_params, "consumption must be positive");
    if (c_ / params_.riskless_rate > m_)
        fail(ErrorCode::out_of_regime,
             "fixed-max solution requires c(m)/r <= m; use the ratchet solvers instead");
}

double FixedMaxSolution::psi(double w) const {
    if (w <= 0.0) return 1.0;
    const double x = params_.riskless_rate * w / c_;
    if (x >= 1.0) return 0.0;
    return std::exp(constants_.gamma * std::log1p(-x));
}

double FixedMaxSolution::psi_dw(double w) const {
    const double g = constants_.gamma;
    const double rc = params_.riskless_rate / c_;
    const double x = rc * w;
    if (w <= 0.0 || x >= 1.0)
        fail(ErrorCode::domain_error, "psi_dw valid on (0, c/r)");
    return -g * rc * std::exp((g - 1.0) * std::log1p(-x));
}

double FixedMaxSolution::psi_dww(double w) const {
    const double g = constants_.gamma;
    const double rc = params_.riskless_rate / c_;
    const double x = rc * w;
    if (w <= 0.0 || x >= 1.0)
        fail(ErrorCode::domain_error, "psi_dww valid on (0, c/r)");
    return g * (g - 1.0) * rc * rc * std::exp((g - 2.0) * std::log1p(-x));
}

double FixedMaxSolution::pi(double w, const MarketParams& params) const {
    const double safe = c_ / params.riskless_rate;
    if (!(w > 0.0) || !(w < safe))
        fail(ErrorCode::out_of_regime, "pi valid on (0, c(m)/r)");
    return params.premium() / (params.risky_volatility * params.risky_volatility)
           / (constants_.gamma - 1.0) * (safe - w);
}

ShortfallCoefficients FixedMaxSolution::shortfall_coefficients() const {
    ShortfallCoefficients sc;
    sc.drift = params_.riskless_rate - 2.0 * constants_.delta / (constants_.gamma - 1.0);
    sc.vol = params_.premium() / params_.risky_volatility / (constants_.gamma - 1.0);
    return sc;
}

} // namespace ruin
