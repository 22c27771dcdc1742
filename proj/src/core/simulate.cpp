#include "simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "sim_kernel.hpp"

namespace ruin {

namespace {

constexpr int kTableWidth = 8192;

// pi(w) row on a uniform w-grid over [0, wmax], built from a parametric sweep
// of the dual variable so no per-point inversion is needed.
template <typename SlopeFn, typename AmountFn>
std::vector<double> build_row(double ym, double y0, double wmax, SlopeFn&& wealth_of,
                              AmountFn&& amount_of) {
    constexpr int kSweep = 4 * kTableWidth;
    std::vector<double> ws(kSweep), ps(kSweep);
    const double lg0 = std::log(ym), lg1 = std::log(y0);
    for (int j = 0; j < kSweep; ++j) {
        // sweep y from y0 down to ym so wealth runs 0 -> m ascending
        const double ly = lg1 + (lg0 - lg1) * static_cast<double>(j) / (kSweep - 1);
        const double y = std::exp(ly);
        ws[j] = wealth_of(y);
        ps[j] = amount_of(y);
    }
    ws.front() = 0.0;
    ws.back() = wmax;
    std::vector<double> row(kTableWidth);
    int j = 0;
    for (int i = 0; i < kTableWidth; ++i) {
        const double w = wmax * static_cast<double>(i) / (kTableWidth - 1);
        while (j + 2 < kSweep && ws[j + 1] < w) ++j;
        const double span = ws[j + 1] - ws[j];
        const double f = span > 0.0 ? std::clamp((w - ws[j]) / span, 0.0, 1.0) : 0.0;
        row[i] = std::max(0.0, ps[j] + f * (ps[j + 1] - ps[j]));
    }
    row.back() = std::max(0.0, amount_of(ym));
    return row;
}

struct StrategyTables {
    std::vector<double> table;   // row-major
    std::vector<double> row_m;
    std::vector<double> row_wmax;
    int n_rows = 0;
};

StrategyTables build_blocked_table(const MarketParams& params, const DualFunction& dual) {
    StrategyTables t;
    const DualBoundary& b = dual.boundary();
    const double k = params.premium() / (params.risky_volatility * params.risky_volatility);
    t.table = build_row(b.y_m, b.y_0, b.m,
                        [&](double y) { return dual.deriv(y); },
                        [&](double y) { return -k * y * dual.second(y); });
    t.row_m = {b.m};
    t.row_wmax = {b.m};
    t.n_rows = 1;
    return t;
}

StrategyTables build_moving_table(const MarketParams& params, const MovingBoundary& mb) {
    StrategyTables t;
    const DerivedConstants& k = mb.constants();
    const double lever = params.premium() / (params.risky_volatility * params.risky_volatility);
    const auto& nodes = mb.nodes();
    // cap the number of rows: subsample node levels evenly, keeping both ends
    const int max_rows = 256;
    std::vector<std::size_t> pick;
    if (nodes.size() <= static_cast<std::size_t>(max_rows)) {
        for (std::size_t i = 0; i < nodes.size(); ++i) pick.push_back(i);
    } else {
        for (int i = 0; i < max_rows; ++i)
            pick.push_back(static_cast<std::size_t>(
                std::round(static_cast<double>(i) * (nodes.size() - 1) / (max_rows - 1))));
    }
    t.n_rows = static_cast<int>(pick.size());
    t.table.reserve(static_cast<std::size_t>(t.n_rows) * kTableWidth);
    for (std::size_t ip : pick) {
        const MovingBoundaryNode& nd = nodes[ip];
        const double c_over_r = mb.consumption().value(nd.m) / params.riskless_rate;
        auto slope = [&](double y) {
            return nd.d1t * k.b1 * std::pow(y, k.b1 - 1.0)
                 + nd.d2t * k.b2 * std::pow(y, k.b2 - 1.0) + c_over_r;
        };
        auto curv = [&](double y) {
            return nd.d1t * k.b1 * (k.b1 - 1.0) * std::pow(y, k.b1 - 2.0)
                 + nd.d2t * k.b2 * (k.b2 - 1.0) * std::pow(y, k.b2 - 2.0);
        };
        std::vector<double> row = build_row(nd.ym, nd.y0, nd.m,
                                            [&](double y) { return slope(y); },
                                            [&](double y) { return -lever * y * curv(y); });
        t.table.insert(t.table.end(), row.begin(), row.end());
        t.row_m.push_back(nd.m);
        t.row_wmax.push_back(nd.m);
    }
    return t;
}

} // namespace

double SimConfig::resolved_t_max(double hazard_rate) const {
    if (t_max > 0.0) return t_max;
    return (std::log(1e6) + 1e-9) / hazard_rate;
}

void SimConfig::validate() const {
    if (!(dt > 0.0)) fail(ErrorCode::invalid_params, "dt must be > 0");
    if (n_paths < 1) fail(ErrorCode::invalid_params, "n_paths must be >= 1");
    if (t_max < 0.0) fail(ErrorCode::invalid_params, "t_max must be positive (or 0 for default)");
    if (n_threads < 0) fail(ErrorCode::invalid_params, "n_threads must be >= 0");
}

Strategy Strategy::fixed_max() { return Strategy(Kind::fixed_max); }
Strategy Strategy::blocked() { return Strategy(Kind::blocked); }
Strategy Strategy::active() { return Strategy(Kind::active); }
Strategy Strategy::active(std::shared_ptr<const MovingBoundary> boundary) {
    Strategy s(Kind::active);
    s.boundary_ = std::move(boundary);
    return s;
}
Strategy Strategy::constant_amount(double amount) {
    if (!(amount >= 0.0)) fail(ErrorCode::invalid_params, "constant amount must be >= 0");
    return Strategy(Kind::constant_amount, amount);
}
Strategy Strategy::constant_proportion(double fraction) {
    if (!(fraction >= 0.0)) fail(ErrorCode::invalid_params, "constant proportion must be >= 0");
    return Strategy(Kind::constant_proportion, fraction);
}

const char* Strategy::name() const {
    switch (kind_) {
        case Kind::fixed_max: return "fixed_max";
        case Kind::blocked: return "blocked";
        case Kind::active: return "active";
        case Kind::constant_amount: return "constant_amount";
        case Kind::constant_proportion: return "constant_proportion";
    }
    return "?";
}

RuinEstimate simulate_ruin(const MarketParams& params, const ConsumptionSpec& consumption,
                           const AgentState& state, const Strategy& strategy,
                           const SimConfig& config) {
    params.validate();
    state.validate();
    config.validate();

    RuinEstimate est;
    est.n_paths = config.n_paths;
    est.dt = config.dt;
    est.t_max = config.resolved_t_max(params.hazard_rate);
    est.seed = config.seed;
    est.scheme = config.scheme;

    const double safe0 = safe_level(consumption, params, state.max_wealth);
    if (state.wealth <= 0.0) {
        est.point = 1.0;
        est.n_ruined = config.n_paths;
        est.n_threads_used = 1;
        return est;
    }
    if (state.wealth >= safe0) {
        est.point = 0.0;
        est.n_safe_absorbed = config.n_paths;
        est.n_threads_used = 1;
        return est;
    }

    if (config.scheme == SimScheme::exact_shortfall_gbm) {
        const Regime regime = classify_regime(params, consumption, state);
        if (regime != Regime::fixed_max_below_safe || strategy.kind() != Strategy::Kind::fixed_max)
            fail(ErrorCode::scheme_mismatch,
                 "exact shortfall scheme is valid only for the fixed-max strategy in its regime");
    }

    kernel::KernelConfig kc;
    kc.r = params.riskless_rate;
    kc.premium = params.premium();
    kc.sigma = params.risky_volatility;
    kc.lambda = params.hazard_rate;
    kc.dt = config.dt;
    kc.n_steps = static_cast<std::int64_t>(std::ceil(est.t_max / config.dt));
    kc.seed = config.seed;
    kc.scheme = config.scheme == SimScheme::exact_shortfall_gbm ? kernel::scheme_exact_shortfall
                                                                : kernel::scheme_euler;
    kc.w0 = state.wealth;
    kc.m0 = state.max_wealth;
    kc.cons_family = consumption.family() == ConsumptionSpec::Family::affine
                         ? kernel::cons_affine : kernel::cons_power;
    kc.cons_a = consumption.a();
    kc.cons_b = consumption.b();

    // strategy-specific setup
    StrategyTables tables;
    std::shared_ptr<const MovingBoundary> mb_keepalive;
    const DerivedConstants k = derive_constants(params);
    switch (strategy.kind()) {
        case Strategy::Kind::fixed_max:
            kc.strategy = kernel::strat_fixed_max;
            kc.strat_param = params.premium()
                             / (params.risky_volatility * params.risky_volatility)
                             / (k.gamma - 1.0);
            break;
        case Strategy::Kind::blocked: {
            const DualBoundary b = solve_boundary(params, consumption, state.max_wealth);
            const DualFunction dual(params, b);
            tables = build_blocked_table(params, dual);
            kc.strategy = kernel::strat_table_fixed_m;
            break;
        }
        case Strategy::Kind::active: {
            mb_keepalive = strategy.prebuilt();
            if (!mb_keepalive)
                mb_keepalive = std::make_shared<MovingBoundary>(
                    integrate_boundaries(params, consumption, state.max_wealth));
            tables = build_moving_table(params, *mb_keepalive);
            kc.strategy = kernel::strat_table_moving;
            break;
        }
        case Strategy::Kind::constant_amount:
            kc.strategy = kernel::strat_const_amount;
            kc.strat_param = strategy.parameter();
            break;
        case Strategy::Kind::constant_proportion:
            kc.strategy = kernel::strat_const_proportion;
            kc.strat_param = strategy.parameter();
            break;
    }
    if (config.scheme == SimScheme::exact_shortfall_gbm) {
        kc.shortfall_drift = params.riskless_rate - 2.0 * k.delta / (k.gamma - 1.0);
        kc.shortfall_vol = params.premium() / params.risky_volatility / (k.gamma - 1.0);
    }
    if (tables.n_rows > 0) {
        kc.table = tables.table.data();
        kc.row_m = tables.row_m.data();
        kc.row_wmax = tables.row_wmax.data();
        kc.n_rows = tables.n_rows;
        kc.n_w = kTableWidth;
    }

    const std::int64_t n = config.n_paths;
    std::vector<double> contrib(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> outcome(static_cast<std::size_t>(n));
    std::vector<double> excursion(static_cast<std::size_t>(n));

    int n_threads = config.n_threads > 0
                        ? config.n_threads
                        : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n_threads = static_cast<int>(std::min<std::int64_t>(n_threads, n));
    est.n_threads_used = n_threads;

    if (n_threads == 1) {
        kernel::run_paths(kc, 0, n, contrib.data(), outcome.data(), excursion.data());
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        const std::int64_t chunk = (n + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const std::int64_t lo = t * chunk;
            const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                kernel::run_paths(kc, lo, hi, contrib.data(), outcome.data(), excursion.data());
            });
        }
        for (std::thread& th : pool) th.join();
    }

    // Deterministic reduction in path order, independent of the thread split.
    double sum = 0.0, sum_sq = 0.0, exc = 0.0;
    std::int64_t ruined = 0, safe = 0, truncated = 0;
    for (std::int64_t p = 0; p < n; ++p) {
        const double x = contrib[static_cast<std::size_t>(p)];
        sum += x;
        sum_sq += x * x;
        exc = std::max(exc, excursion[static_cast<std::size_t>(p)]);
        switch (outcome[static_cast<std::size_t>(p)]) {
            case kernel::out_ruined: ++ruined; break;
            case kernel::out_safe: ++safe; break;
            default: ++truncated; break;
        }
    }
    est.point = sum / static_cast<double>(n);
    if (n > 1) {
        const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * est.point * est.point)
                                             / static_cast<double>(n - 1));
        est.std_error = std::sqrt(var / static_cast<double>(n));
    }
    est.n_ruined = ruined;
    est.n_safe_absorbed = safe;
    est.n_truncated = truncated;
    est.truncation_bias_bound = std::exp(-params.hazard_rate * est.t_max)
                                * static_cast<double>(truncated) / static_cast<double>(n);
    est.max_excursion = exc;
    return est;
}

double max_wealth_excursion(const MarketParams& params, const ConsumptionSpec& consumption,
                            const AgentState& state, const Strategy& strategy,
                            const SimConfig& config) {
    if (strategy.kind() != Strategy::Kind::fixed_max && strategy.kind() != Strategy::Kind::blocked)
        fail(ErrorCode::invalid_params,
             "excursion diagnostic applies to the fixed_max and blocked strategies");
    return simulate_ruin(params, consumption, state, strategy, config).max_excursion;
}

} // namespace ruin
