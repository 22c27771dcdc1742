#pragma once

#include <cstdint>
#include <memory>

#include "active.hpp"
#include "blocked.hpp"
#include "market.hpp"

namespace ruin {

enum class SimScheme {
    euler_maruyama,      // Euler step on the wealth process
    exact_shortfall_gbm, // exact lognormal step of the shortfall (section 3 regime only)
};

struct SimConfig {
    double dt = 1e-3;            // years
    std::int64_t n_paths = 200000;
    double t_max = 0.0;          // <= 0: default horizon with exp(-lambda t_max) < 1e-6
    std::uint64_t seed = 0x9E3779B97F4A7C15ULL;
    SimScheme scheme = SimScheme::euler_maruyama;
    int n_threads = 0;           // 0: hardware concurrency

    double resolved_t_max(double hazard_rate) const;
    void validate() const;
};

// Feedback strategies the simulator can drive. Blocked/active strategies
// solve their boundary problems at construction (or reuse a provided one).
class Strategy {
public:
    enum class Kind {
        fixed_max,           // section 3 feedback
        blocked,             // section 4.1 feedback, frozen at the initial maximum
        active,              // section 4.3 feedback with m-dependent coefficients
        constant_amount,     // pi(w, m) = amount
        constant_proportion, // pi(w, m) = fraction * w
    };

    static Strategy fixed_max();
    static Strategy blocked();
    static Strategy active();
    static Strategy active(std::shared_ptr<const MovingBoundary> boundary);
    static Strategy constant_amount(double amount);
    static Strategy constant_proportion(double fraction);

    Kind kind() const { return kind_; }
    double parameter() const { return parameter_; }
    const std::shared_ptr<const MovingBoundary>& prebuilt() const { return boundary_; }
    const char* name() const;

private:
    explicit Strategy(Kind k, double p = 0.0) : kind_(k), parameter_(p) {}
    Kind kind_;
    double parameter_;
    std::shared_ptr<const MovingBoundary> boundary_;
};

struct RuinEstimate {
    double point = 0.0;
    double std_error = 0.0;
    double truncation_bias_bound = 0.0;  // <= exp(-lambda t_max)
    std::int64_t n_paths = 0;
    std::int64_t n_ruined = 0;
    std::int64_t n_safe_absorbed = 0;
    std::int64_t n_truncated = 0;
    double max_excursion = 0.0;          // max over paths/steps of (W - m0)+

    // echo of the resolved configuration
    double dt = 0.0;
    double t_max = 0.0;
    std::uint64_t seed = 0;
    SimScheme scheme = SimScheme::euler_maruyama;
    int n_threads_used = 0;
};

// Estimates the ruin probability at `state` under `strategy` via the
// discounted-ruin representation: a ruined path contributes exp(-lambda tau),
// a safe-absorbed or truncated path contributes 0, with the truncation loss
// bracketed by exp(-lambda t_max) * (truncated fraction).
RuinEstimate simulate_ruin(const MarketParams& params, const ConsumptionSpec& consumption,
                           const AgentState& state, const Strategy& strategy,
                           const SimConfig& config);

// Diagnostic: largest (W - m)+ seen over all paths and steps under a strategy
// that in the continuous model keeps wealth at or below m.
double max_wealth_excursion(const MarketParams& params, const ConsumptionSpec& consumption,
                            const AgentState& state, const Strategy& strategy,
                            const SimConfig& config);

} // namespace ruin
