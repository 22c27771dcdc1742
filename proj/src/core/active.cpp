#include "active.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "root_find.hpp"

namespace ruin {

namespace {

constexpr double kPublicGrace = 1e-11;      // tangency slack for the public op
constexpr double kIntegrationGrace = 1e-4;  // boundary-layer slack inside the integrator
constexpr double kMinRatio = 1e-12;         // admissible ym/y0 window per contract

struct YmOutcome {
    bool ok = false;
    double ym = 0.0;
    double scaled_deficit = 0.0;  // how far below zero the peak sits, scaled
};

double max3(double a, double b, double c) { return std::max(a, std::max(b, c)); }

// The constraint in small-term form: F(y) = (c - r m)/r + t1(y) + t2(y), where
// t1, t2 are the dual-slope power terms. Root of F is where the dual slope
// equals m; the big c/r contributions cancel analytically, not numerically.
struct Constraint {
    double s;    // (c - r m)/r
    double b1, b2;
    double d1b1, d2b2;  // d1t*b1, d2t*b2

    double t1(double y) const { return d1b1 * std::pow(y, b1 - 1.0); }
    double t2(double y) const { return d2b2 * std::pow(y, b2 - 1.0); }
    double operator()(double y) const { return s + t1(y) + t2(y); }
    double scale(double y) const {
        return max3(std::abs(s), std::abs(t1(y)), std::abs(t2(y)));
    }
};

YmOutcome try_solve_ym(const DerivedConstants& k, double s, const TildeCoefficients& ct,
                       double y0, double grace) {
    YmOutcome out;
    if (!(ct.d1t < 0.0)) return out;  // no decreasing branch at all
    Constraint F{s, k.b1, k.b2, ct.d1t * k.b1, ct.d2t * k.b2};

    double lo;
    if (ct.d2t > 0.0) {
        // Convex branch near 0, concave branch after the inflection.
        const double y_inf = std::pow(-ct.d2t * k.b2 * (k.b2 - 1.0)
                                      / (ct.d1t * k.b1 * (k.b1 - 1.0)),
                                      1.0 / (k.b1 - k.b2));
        if (!(y_inf < y0)) return out;
        const double peak = F(y_inf);
        if (peak < 0.0) {
            const double deficit = -peak / std::max(1e-300, F.scale(y_inf));
            out.scaled_deficit = deficit;
            if (deficit <= grace) {
                out.ok = true;
                out.ym = y_inf;  // tangency limit
            }
            return out;
        }
        lo = y_inf;
    } else {
        // Globally concave dual: unique root, F decreasing from +inf.
        lo = y0 * kMinRatio;
        if (!(F(lo) > 0.0)) return out;  // blow-up sits below the admissible window
    }
    // F(lo) >= 0 > F at y0 (the slope row at y0 makes F(y0) = -m).
    const double ym = bisect([&](double y) { return F(y); }, lo, y0, 200);
    if (!(ym > y0 * kMinRatio) || !(ym < y0 * (1.0 - kMinRatio))) return out;
    out.ok = true;
    out.ym = ym;
    return out;
}

std::string fmt_m(double m) {
    std::ostringstream os;
    os.precision(17);
    os << m;
    return os.str();
}

} // namespace

TildeCoefficients tilde_coefficients(const DerivedConstants& k, double c_over_r,
                                     double y0) {
    const double span = k.b1 - k.b2;
    TildeCoefficients ct;
    ct.d1t = -k.b2 / (span * std::pow(y0, k.b1))
             - c_over_r * (1.0 - k.b2) / (span * std::pow(y0, k.b1 - 1.0));
    ct.d2t = k.b1 / (span * std::pow(y0, k.b2))
             - c_over_r * (k.b1 - 1.0) / (span * std::pow(y0, k.b2 - 1.0));
    return ct;
}

double constraint_residual(const MarketParams& params, const ConsumptionSpec& consumption,
                           const DerivedConstants& k, double m, double y0, double ym,
                           const TildeCoefficients& ct) {
    const double s = (consumption.value(m) - params.riskless_rate * m) / params.riskless_rate;
    Constraint F{s, k.b1, k.b2, ct.d1t * k.b1, ct.d2t * k.b2};
    return std::abs(F(ym)) / std::max(1e-300, F.scale(ym));
}

double solve_ym_given_y0(const MarketParams& params, const ConsumptionSpec& consumption,
                         double m, double y0) {
    params.validate();
    consumption.require_ratchet_usable();
    if (!(y0 > 0.0)) fail(ErrorCode::invalid_params, "y0 must be > 0");
    const double r = params.riskless_rate;
    const double c = consumption.value(m);
    if (!(m < c / r))
        fail(ErrorCode::out_of_regime, "solve_ym_given_y0 requires m < c(m)/r");
    const DerivedConstants k = derive_constants(params);
    const TildeCoefficients ct = tilde_coefficients(k, c / r, y0);
    const double s = (c - r * m) / r;
    const YmOutcome out = try_solve_ym(k, s, ct, y0, kPublicGrace);
    if (!out.ok) {
        std::ostringstream os;
        os << "no admissible ym at m=" << fmt_m(m) << ", y0=" << y0;
        if (out.scaled_deficit > 0.0)
            os << " (dual slope peak misses m by scaled " << out.scaled_deficit << ")";
        fail(ErrorCode::no_root, os.str());
    }
    return out.ym;
}

double y0_derivative(const MarketParams& params, const ConsumptionSpec& consumption,
                     double m, double y0, double ym) {
    params.validate();
    const DerivedConstants k = derive_constants(params);
    const double r = params.riskless_rate;
    const double c = consumption.value(m);
    const double cp = consumption.derivative(m);
    const double span = k.b1 - k.b2;
    const double u = ym / y0;
    const double ub1 = std::pow(u, k.b1 - 1.0);
    const double ub2 = std::pow(u, k.b2 - 1.0);
    const double brace = k.b1 * k.b2 / (span * y0)
                         + (c / r) * (k.b1 - 1.0) * (1.0 - k.b2) / span;
    const double coef = (ub1 - ub2) * brace;
    if (std::abs(coef) < 1e-14) {
        std::ostringstream os;
        os << "coefficient of y0'/y0 vanishes at m=" << fmt_m(m) << " (|coef|="
           << std::abs(coef) << ")";
        fail(ErrorCode::singular_derivative, os.str());
    }
    const double rhs = cp / r * ((1.0 - k.b2) / span * ub1 + (k.b1 - 1.0) / span * ub2 - 1.0);
    return y0 * rhs / coef;
}

double MovingBoundary::ym_at(double m, double y0, const TildeCoefficients& ct) const {
    const double s = (consumption_.value(m) - params_.riskless_rate * m) / params_.riskless_rate;
    const YmOutcome out = try_solve_ym(constants_, s, ct, y0, 1e-9);
    if (!out.ok)
        fail(ErrorCode::no_root, "constraint root lost at m=" + fmt_m(m));
    return out.ym;
}

double MovingBoundary::y0_at(double m) const {
    const double lo = nodes_.front().m, hi = nodes_.back().m;
    const double slack = 1e-9 * std::max(1.0, hi);
    if (m < lo - slack || m > hi + slack)
        fail(ErrorCode::domain_error, "m outside [m0, m*]");
    const double mc = std::clamp(m, lo, hi);
    if (nodes_.size() == 1) return nodes_.front().y0;

    // locate interval
    size_t i = 0, j = nodes_.size() - 1;
    while (j - i > 1) {
        const size_t mid = (i + j) / 2;
        if (nodes_[mid].m <= mc) i = mid; else j = mid;
    }
    const double h = nodes_[j].m - nodes_[i].m;
    const double t = (mc - nodes_[i].m) / h;
    const double y0i = nodes_[i].y0, y0j = nodes_[j].y0;
    const double si = slopes_[i] * h, sj = slopes_[j] * h;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0i + (t3 - 2 * t2 + t) * si
         + (-2 * t3 + 3 * t2) * y0j + (t3 - t2) * sj;
}

TildeCoefficients MovingBoundary::coefficients_at(double m) const {
    const MovingBoundaryNode& last = nodes_.back();
    if (std::abs(m - last.m) <= 1e-12 * std::max(1.0, last.m))
        return TildeCoefficients{last.d1t, last.d2t};
    const double y0 = y0_at(m);
    return tilde_coefficients(constants_, consumption_.value(m) / params_.riskless_rate, y0);
}

double MovingBoundary::psi(double w, double m) const {
    if (w < 0.0)
        fail(ErrorCode::domain_error, "psi: wealth below 0");
    if (w > m + 1e-12 * std::max(1.0, m))
        fail(ErrorCode::domain_error, "psi: wealth above the running maximum");
    const double y0 = y0_at(m);
    const TildeCoefficients ct = coefficients_at(m);
    const double c_over_r = consumption_.value(m) / params_.riskless_rate;
    const double b1 = constants_.b1, b2 = constants_.b2;
    auto dual_value = [&](double y) {
        return ct.d1t * std::pow(y, b1) + ct.d2t * std::pow(y, b2) + c_over_r * y;
    };
    if (w == 0.0) return 1.0;  // value row at y0
    const double ym = ym_at(m, y0, ct);
    auto slope = [&](double y) {
        return ct.d1t * b1 * std::pow(y, b1 - 1.0) + ct.d2t * b2 * std::pow(y, b2 - 1.0)
               + c_over_r;
    };
    const double wq = std::min(w, m);
    const double y = (wq == m) ? ym
                               : bisect([&](double y_) { return wq - slope(y_); }, ym, y0, 200);
    double v = dual_value(y) - wq * y;
    if (v < -1e-9 || v > 1.0 + 1e-9)
        fail(ErrorCode::internal, "psi left [0,1] beyond rounding slack");
    return std::clamp(v, 0.0, 1.0);
}

double MovingBoundary::pi(double w, double m) const {
    if (!(w > 0.0) || w > m + 1e-12 * std::max(1.0, m))
        fail(ErrorCode::out_of_regime, "pi: wealth outside (0, m]");
    const double y0 = y0_at(m);
    const TildeCoefficients ct = coefficients_at(m);
    const double c_over_r = consumption_.value(m) / params_.riskless_rate;
    const double b1 = constants_.b1, b2 = constants_.b2;
    const double ym = ym_at(m, y0, ct);
    auto slope = [&](double y) {
        return ct.d1t * b1 * std::pow(y, b1 - 1.0) + ct.d2t * b2 * std::pow(y, b2 - 1.0)
               + c_over_r;
    };
    const double wq = std::min(w, m);
    const double y = (wq == m) ? ym
                               : bisect([&](double y_) { return wq - slope(y_); }, ym, y0, 200);
    const double curv = ct.d1t * b1 * (b1 - 1.0) * std::pow(y, b1 - 2.0)
                      + ct.d2t * b2 * (b2 - 1.0) * std::pow(y, b2 - 2.0);
    const double s2 = params_.risky_volatility * params_.risky_volatility;
    return std::max(0.0, -params_.premium() / s2 * y * curv);
}

void MovingBoundary::finalize() {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const MovingBoundaryNode& a, const MovingBoundaryNode& b) { return a.m < b.m; });
    const size_t n = nodes_.size();
    for (const MovingBoundaryNode& nd : nodes_) {
        if (!(nd.y0 > nd.ym) || !(nd.ym > 0.0))
            fail(ErrorCode::internal, "moving boundary node violates y0 > ym > 0");
        const TildeCoefficients ct{nd.d1t, nd.d2t};
        const double res = constraint_residual(params_, consumption_, constants_, nd.m,
                                               nd.y0, nd.ym, ct);
        if (res > 1e-9)
            fail(ErrorCode::convergence_failure,
                 "constraint residual " + std::to_string(res) + " at node m=" + fmt_m(nd.m));
    }
    slopes_.assign(n, 0.0);
    if (n < 2) return;

    // Fritsch-Carlson monotone cubic slopes.
    std::vector<double> h(n - 1), d(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = nodes_[i + 1].m - nodes_[i].m;
        d[i] = (nodes_[i + 1].y0 - nodes_[i].y0) / h[i];
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            slopes_[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            slopes_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if (std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return s;
    };
    slopes_[0] = (n == 2) ? d[0] : end_slope(h[0], h[1], d[0], d[1]);
    slopes_[n - 1] = (n == 2) ? d[n - 2]
                              : end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

MovingBoundary integrate_boundaries(const MarketParams& params,
                                    const ConsumptionSpec& consumption, double m0,
                                    const IntegrateOptions& options) {
    params.validate();
    consumption.require_ratchet_usable();
    const MStarResult ms = m_star(params, consumption, m0);  // also checks the m0 regime
    const double anchor = ms.anchor;

    MovingBoundary mb(params, consumption);
    mb.m_star_ = ms.m_star;
    mb.safe_level_binding_ = ms.safe_level_binding;
    const DerivedConstants& k = mb.constants_;
    const double r = params.riskless_rate;

    const DualBoundary terminal = solve_boundary(params, consumption, anchor);
    mb.nodes_.push_back(MovingBoundaryNode{anchor, terminal.y_0, terminal.y_m,
                                           terminal.d1, terminal.d2});
    if (anchor <= m0 * (1.0 + 1e-15)) {
        mb.finalize();  // degenerate interval: the 4.1 solution itself
        return mb;
    }

    auto field = [&](double m, double x) {
        const double y0 = std::exp(x);
        const double c = consumption.value(m);
        if (!(m < c / r)) fail(ErrorCode::out_of_regime, "left the ratchet regime at m=" + fmt_m(m));
        const TildeCoefficients ct = tilde_coefficients(k, c / r, y0);
        const double s = (c - r * m) / r;
        const YmOutcome ym = try_solve_ym(k, s, ct, y0, kIntegrationGrace);
        if (!ym.ok)
            fail(ErrorCode::no_root, "constraint root lost at m=" + fmt_m(m)
                 + " (scaled deficit " + std::to_string(ym.scaled_deficit) + ")");
        return y0_derivative(params, consumption, m, y0, ym.ym) / y0;
    };

    // The terminal point is a tangency of the algebraic constraint, so the
    // start value gets the smallest upward nudge that lets the first step's
    // stage evaluations see a root; the backward flow is strongly contracting
    // and forgets the nudge within a few steps.
    const double h_base = (anchor - m0) / options.base_steps;
    double x_start = std::log(terminal.y_0);
    {
        bool started = false;
        for (double eta : {0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
            const double x_try = std::log(terminal.y_0 * (1.0 + eta));
            try {
                const double k1 = field(anchor, x_try);
                const double h = h_base;
                (void)field(anchor - 0.5 * h, x_try - 0.5 * h * k1);
                x_start = x_try;
                started = true;
                break;
            } catch (const Error&) {
                continue;
            }
        }
        if (!started)
            fail(ErrorCode::no_root,
                 "could not start the boundary integration off the terminal tangency");
    }

    double m_cur = anchor;
    double x_cur = x_start;
    double ym_prev = terminal.y_m;
    double h = h_base;
    int halvings = 0;
    while (m_cur > m0 + 1e-15 * anchor) {
        h = std::min(h, m_cur - m0);
        bool ok = true;
        double x_next = 0.0, ym_next = 0.0;
        try {
            const double k1 = field(m_cur, x_cur);
            const double k2 = field(m_cur - 0.5 * h, x_cur - 0.5 * h * k1);
            const double k3 = field(m_cur - 0.5 * h, x_cur - 0.5 * h * k2);
            const double k4 = field(m_cur - h, x_cur - h * k3);
            x_next = x_cur - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double m_next = m_cur - h;
            const double y0n = std::exp(x_next);
            const TildeCoefficients ct = tilde_coefficients(
                k, consumption.value(m_next) / r, y0n);
            const double s = (consumption.value(m_next) - r * m_next) / r;
            const YmOutcome res = try_solve_ym(k, s, ct, y0n, kIntegrationGrace);
            if (!res.ok) ok = false; else ym_next = res.ym;
        } catch (const Error&) {
            ok = false;
        }
        if (ok && ym_prev > 0.0 &&
            std::abs(ym_next - ym_prev) > options.ym_step_limit * ym_prev &&
            h > 2.0 * (m_cur - m0) / 1e7) {
            ok = false;  // constraint root moving too fast for this step
        }
        if (!ok) {
            if (++halvings > options.max_halvings)
                fail(ErrorCode::convergence_failure,
                     "step control exhausted near m=" + fmt_m(m_cur));
            h *= 0.5;
            continue;
        }
        m_cur -= h;
        x_cur = x_next;
        ym_prev = ym_next;
        const double y0n = std::exp(x_next);
        const TildeCoefficients ct = tilde_coefficients(
            k, consumption.value(m_cur) / r, y0n);
        mb.nodes_.push_back(MovingBoundaryNode{m_cur, y0n, ym_next, ct.d1t, ct.d2t});
        if (halvings > 0 && h < h_base) h = std::min(h_base, 2.0 * h);
    }

    mb.finalize();
    return mb;
}

std::string MovingBoundary::to_json() const {
    nlohmann::json j;
    j["schema"] = "ruinsolver.moving_boundary";
    j["version"] = 1;
    j["market"] = {{"riskless_rate", params_.riskless_rate},
                   {"risky_drift", params_.risky_drift},
                   {"risky_volatility", params_.risky_volatility},
                   {"hazard_rate", params_.hazard_rate}};
    j["consumption"] = {{"family", consumption_.family() == ConsumptionSpec::Family::affine
                                       ? "affine" : "power"},
                        {"a", consumption_.a()},
                        {"b", consumption_.b()}};
    j["m_star"] = m_star_;
    j["safe_level_binding"] = safe_level_binding_;
    nlohmann::json nodes = nlohmann::json::array();
    double worst = 0.0;
    for (const MovingBoundaryNode& nd : nodes_) {
        nodes.push_back({nd.m, nd.y0, nd.ym, nd.d1t, nd.d2t});
        worst = std::max(worst, constraint_residual(params_, consumption_, constants_,
                                                    nd.m, nd.y0, nd.ym,
                                                    TildeCoefficients{nd.d1t, nd.d2t}));
    }
    j["nodes"] = std::move(nodes);
    j["diagnostics"] = {{"node_count", nodes_.size()}, {"max_constraint_residual", worst}};
    return j.dump();
}

MovingBoundary MovingBoundary::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::parse_error, std::string("moving boundary JSON: ") + e.what());
    }
    if (j.value("schema", "") != "ruinsolver.moving_boundary" || j.value("version", 0) != 1)
        fail(ErrorCode::parse_error, "unrecognized moving boundary schema/version");
    try {
        MarketParams p;
        p.riskless_rate = j["market"]["riskless_rate"].get<double>();
        p.risky_drift = j["market"]["risky_drift"].get<double>();
        p.risky_volatility = j["market"]["risky_volatility"].get<double>();
        p.hazard_rate = j["market"]["hazard_rate"].get<double>();
        const std::string fam = j["consumption"]["family"].get<std::string>();
        const double a = j["consumption"]["a"].get<double>();
        const double b = j["consumption"]["b"].get<double>();
        ConsumptionSpec c = (fam == "affine") ? ConsumptionSpec::affine(a, b)
                                              : ConsumptionSpec::power(a, b);
        MovingBoundary mb(p, c);
        mb.m_star_ = j["m_star"].get<double>();
        mb.safe_level_binding_ = j["safe_level_binding"].get<bool>();
        for (const auto& row : j["nodes"]) {
            MovingBoundaryNode nd;
            nd.m = row[0].get<double>();
            nd.y0 = row[1].get<double>();
            nd.ym = row[2].get<double>();
            nd.d1t = row[3].get<double>();
            nd.d2t = row[4].get<double>();
            mb.nodes_.push_back(nd);
        }
        if (mb.nodes_.empty()) fail(ErrorCode::parse_error, "moving boundary has no nodes");
        mb.finalize();
        return mb;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::parse_error, std::string("moving boundary JSON: ") + e.what());
    }
}

} // namespace ruin
