#include "diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "blocked.hpp"
#include "fixed_max.hpp"

namespace ruin {

namespace {

double max3(double a, double b, double c) { return std::max(a, std::max(b, c)); }

double fd_first(const std::function<double(double)>& f, double x, double scale) {
    const double h = 1e-5 * std::max(std::abs(x), scale);
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

double fd_second(const std::function<double(double)>& f, double x, double scale) {
    const double h = 1e-5 * std::max(std::abs(x), scale);
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

} // namespace

void CheckReport::finish() {
    bool rows_ok = true;
    for (const CheckRow& r : rows) rows_ok = rows_ok && r.ok;
    pass = rows_ok && worst_residual <= threshold;
}

std::string CheckReport::to_json() const {
    nlohmann::json j;
    j["check"] = name;
    j["worst_residual"] = worst_residual;
    j["threshold"] = threshold;
    j["pass"] = pass;
    nlohmann::json rs = nlohmann::json::array();
    for (const CheckRow& r : rows)
        rs.push_back({{"label", r.label}, {"at", r.location}, {"value", r.value}, {"ok", r.ok}});
    j["rows"] = std::move(rs);
    return j.dump();
}

CheckReport hjb_residual(const ValueSection& f, const MarketParams& params,
                         double c_of_m, const Grid& grid) {
    params.validate();
    const DerivedConstants k = derive_constants(params);
    const bool analytic = static_cast<bool>(f.dw) && static_cast<bool>(f.dww);

    CheckReport rep;
    rep.name = "hjb_residual";
    rep.threshold = analytic ? 1e-6 : 1e-3;

    const double scale_w = std::max(1.0, std::abs(grid.hi));
    for (int i = 1; i <= grid.points; ++i) {
        const double w = grid.lo + (grid.hi - grid.lo) * i / (grid.points + 1);
        const double psi = f.value(w);
        const double pw = f.dw ? f.dw(w) : fd_first(f.value, w, scale_w);
        const double pww = f.dww ? f.dww(w) : fd_second(f.value, w, scale_w);

        if (!(pw < 0.0)) {
            rep.rows.push_back({"not_decreasing", w, pw, false});
            continue;
        }
        if (!(pww > 0.0)) {
            rep.rows.push_back({"degenerate_second_derivative", w, pww, false});
            continue;
        }
        const double t1 = (params.riskless_rate * w - c_of_m) * pw;
        const double t2 = -k.delta * pw * pw / pww;
        const double t3 = -params.hazard_rate * psi;
        const double res = std::abs(t1 + t2 + t3)
                           / std::max(1e-300, max3(std::abs(t1), std::abs(t2), std::abs(t3)));
        rep.worst_residual = std::max(rep.worst_residual, res);
        rep.rows.push_back({"residual", w, res, true});
    }
    rep.finish();
    return rep;
}

CheckReport verification_conditions(const std::function<double(double, double)>& h,
                                    const MarketParams& params,
                                    const ConsumptionSpec& consumption, double m,
                                    const Grid& wgrid) {
    params.validate();
    CheckReport rep;
    rep.name = "verification_conditions";
    rep.threshold = 0.0;  // row-based verdicts

    // boundary value at w = 0
    {
        const double v0 = h(0.0, m);
        rep.rows.push_back({"value_at_zero", 0.0, v0, std::abs(v0 - 1.0) <= 1e-9});
    }
    // value at the safe level, when it lies inside the admissible wedge
    const double safe = safe_level(consumption, params, m);
    if (safe <= m) {
        const double vs = h(safe, m);
        rep.rows.push_back({"value_at_safe_level", safe, vs, std::abs(vs) <= 1e-9});
    }
    // monotone non-increasing, convex in w on the grid (first differences)
    double prev = h(wgrid.lo, m);
    double prev_d = 0.0;
    bool have_prev_d = false;
    const double step = (wgrid.hi - wgrid.lo) / (wgrid.points + 1);
    for (int i = 1; i <= wgrid.points + 1; ++i) {
        const double w = wgrid.lo + step * i;
        const double cur = h(w, m);
        const double d = (cur - prev) / step;
        if (!(d <= 1e-9))
            rep.rows.push_back({"increasing_segment", w, d, false});
        if (have_prev_d && !(d >= prev_d - 1e-7))
            rep.rows.push_back({"concave_segment", w, d - prev_d, false});
        prev = cur;
        prev_d = d;
        have_prev_d = true;
    }
    // diagonal m-derivative h_m(m, m) via central differences, approached from
    // wealth slightly inside so both m-offsets stay admissible
    {
        const double hm_step = 1e-5 * m;
        const double w_probe = m - 3.0 * hm_step;
        const double hm = (h(w_probe, m + hm_step) - h(w_probe, m - hm_step)) / (2.0 * hm_step);
        rep.rows.push_back({"diagonal_m_derivative", m, hm, hm >= -1e-3});
    }
    // dynamic-programming residual at the analytic minimizer, finite differences
    {
        ValueSection sec;
        sec.value = [&](double w) { return h(w, m); };
        Grid g = wgrid;
        g.points = std::min(g.points, 25);
        CheckReport inner = hjb_residual(sec, params, consumption.value(m), g);
        rep.rows.push_back({"hjb_fd_residual", m, inner.worst_residual, inner.pass});
    }
    rep.finish();
    return rep;
}

CheckReport section42_suite(const MarketParams& params, const ConsumptionSpec& consumption,
                            double m, int points) {
    const DualBoundary b = solve_boundary(params, consumption, m);
    const DualFunction dual(params, b);
    const DerivedConstants k = derive_constants(params);
    const double c = consumption.value(m);
    const double lever = params.premium()
                         / (params.risky_volatility * params.risky_volatility);

    CheckReport rep;
    rep.name = "section42_suite";
    rep.threshold = 0.0;

    const double floor_margin = 1e-12;
    double prev_gap_psi = -1.0;
    double prev_gap_pi = -1.0;
    for (int i = 1; i <= points; ++i) {
        const double w = m * i / (points + 1);
        const double psi = dual.psi(w);
        const double phi = std::exp(k.gamma * std::log1p(-params.riskless_rate * w / c));
        const double gap_psi = psi - phi;
        rep.rows.push_back({"psi_above_benchmark", w, gap_psi, gap_psi > floor_margin});

        const double pi_star = dual.pi(w);
        const double pi_merton = lever / (k.gamma - 1.0) * (c / params.riskless_rate - w);
        const double gap_pi = pi_merton - pi_star;
        rep.rows.push_back({"strategy_below_benchmark", w, gap_pi, gap_pi > floor_margin});

        if (i > 1) {
            rep.rows.push_back({"psi_gap_increasing", w, gap_psi - prev_gap_psi,
                                gap_psi - prev_gap_psi > floor_margin});
            rep.rows.push_back({"pi_gap_increasing", w, gap_pi - prev_gap_pi,
                                gap_pi - prev_gap_pi > floor_margin});
        }
        prev_gap_psi = gap_psi;
        prev_gap_pi = gap_pi;
    }
    rep.finish();
    return rep;
}

CheckReport mc_cross_check(double analytic, const RuinEstimate& estimate, double k_sigma) {
    CheckReport rep;
    rep.name = "mc_cross_check";
    const double tol = k_sigma * estimate.std_error + estimate.truncation_bias_bound;
    rep.threshold = tol;
    rep.worst_residual = std::abs(analytic - estimate.point);
    rep.rows.push_back({"analytic", 0.0, analytic, true});
    rep.rows.push_back({"monte_carlo", 0.0, estimate.point, true});
    rep.rows.push_back({"std_error", 0.0, estimate.std_error, true});
    rep.rows.push_back({"bias_bound", 0.0, estimate.truncation_bias_bound, true});
    rep.finish();
    return rep;
}

} // namespace ruin
