#include "ruinsolver.h"

#include <cstring>
#include <memory>
#include <new>
#include <string>

#include <json.hpp>

#include "active.hpp"
#include "blocked.hpp"
#include "diagnostics.hpp"
#include "errors.hpp"
#include "fixed_max.hpp"
#include "market.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "version.hpp"

using namespace ruin;

namespace {

thread_local std::string g_last_error;

rs_status to_status(ErrorCode code) {
    return static_cast<rs_status>(static_cast<int>(code));
}

template <typename Fn>
rs_status guarded(Fn&& fn) {
    try {
        fn();
        return RS_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return RS_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RS_ERR_INTERNAL;
    }
}

MarketParams to_market(const rs_market_params* p) {
    if (!p) fail(ErrorCode::null_argument, "market params pointer is null");
    MarketParams m;
    m.riskless_rate = p->riskless_rate;
    m.risky_drift = p->risky_drift;
    m.risky_volatility = p->risky_volatility;
    m.hazard_rate = p->hazard_rate;
    return m;
}

ConsumptionSpec to_consumption(const rs_consumption_spec* c) {
    if (!c) fail(ErrorCode::null_argument, "consumption spec pointer is null");
    if (c->family == RS_CONSUMPTION_AFFINE) return ConsumptionSpec::affine(c->a, c->b);
    if (c->family == RS_CONSUMPTION_POWER) return ConsumptionSpec::power(c->a, c->b);
    fail(ErrorCode::invalid_params, "unknown consumption family");
}

SimConfig to_sim_config(const rs_sim_config* c) {
    SimConfig out;
    if (!c) return out;
    if (c->dt > 0.0) out.dt = c->dt;
    if (c->n_paths > 0) out.n_paths = c->n_paths;
    if (c->t_max > 0.0) out.t_max = c->t_max;
    out.seed = c->seed;
    out.scheme = c->scheme == RS_SCHEME_EXACT_SHORTFALL ? SimScheme::exact_shortfall_gbm
                                                        : SimScheme::euler_maruyama;
    out.n_threads = c->n_threads;
    return out;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename T>
void store(T* dst, const T& v) {
    if (dst) *dst = v;
}

} // namespace

struct rs_blocked_solution {
    DualFunction dual;
};

struct rs_moving_boundary {
    MovingBoundary mb;
};

struct rs_scenario {
    Scenario sc;
};

extern "C" {

const char* rs_version(void) { return kVersion; }

const char* rs_status_name(rs_status status) {
    switch (status) {
        case RS_OK: return "ok";
        case RS_ERR_INVALID_PARAMS: return "invalid_params";
        case RS_ERR_OUT_OF_REGIME: return "out_of_regime";
        case RS_ERR_DOMAIN: return "domain_error";
        case RS_ERR_NO_BRACKET: return "no_bracket";
        case RS_ERR_NO_ROOT: return "no_root";
        case RS_ERR_SINGULAR: return "singular_derivative";
        case RS_ERR_NO_CONVERGENCE: return "convergence_failure";
        case RS_ERR_UNBOUNDED: return "unbounded";
        case RS_ERR_SCHEME_MISMATCH: return "scheme_mismatch";
        case RS_ERR_PARSE: return "parse_error";
        case RS_ERR_IO: return "io_error";
        case RS_ERR_NULL_ARGUMENT: return "null_argument";
        case RS_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* rs_last_error(void) { return g_last_error.c_str(); }

void rs_string_free(char* s) { delete[] s; }

rs_status rs_derive_constants(const rs_market_params* params, rs_derived_constants* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        const DerivedConstants k = derive_constants(to_market(params));
        out->delta = k.delta;
        out->gamma = k.gamma;
        out->b1 = k.b1;
        out->b2 = k.b2;
    });
}

rs_status rs_consumption_value(const rs_consumption_spec* consumption, double m, double* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        *out = to_consumption(consumption).value(m);
    });
}

rs_status rs_consumption_derivative(const rs_consumption_spec* consumption, double m,
                                    double* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        *out = to_consumption(consumption).derivative(m);
    });
}

rs_status rs_safe_level(const rs_market_params* params, const rs_consumption_spec* consumption,
                        double m, double* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        const MarketParams mp = to_market(params);
        mp.validate();
        *out = safe_level(to_consumption(consumption), mp, m);
    });
}

rs_status rs_classify_regime(const rs_market_params* params,
                             const rs_consumption_spec* consumption, double wealth,
                             double max_wealth, rs_regime* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        AgentState st{wealth, max_wealth};
        const Regime reg = classify_regime(to_market(params), to_consumption(consumption), st);
        *out = static_cast<rs_regime>(static_cast<int>(reg));
    });
}

const char* rs_regime_name(rs_regime regime) {
    return regime_name(static_cast<Regime>(static_cast<int>(regime)));
}

rs_status rs_fixed_max_psi(const rs_market_params* params,
                           const rs_consumption_spec* consumption, double wealth,
                           double max_wealth, double* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        const FixedMaxSolution sol(to_market(params), to_consumption(consumption), max_wealth);
        *out = sol.psi(wealth);
    });
}

rs_status rs_fixed_max_pi(const rs_market_params* params,
                          const rs_consumption_spec* consumption, double wealth,
                          double max_wealth, double* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        const MarketParams mp = to_market(params);
        const FixedMaxSolution sol(mp, to_consumption(consumption), max_wealth);
        *out = sol.pi(wealth, mp);
    });
}

rs_status rs_shortfall_coefficients(const rs_market_params* params,
                                    const rs_consumption_spec* consumption, double max_wealth,
                                    double* drift, double* vol) {
    return guarded([&] {
        const FixedMaxSolution sol(to_market(params), to_consumption(consumption), max_wealth);
        const ShortfallCoefficients sc = sol.shortfall_coefficients();
        store(drift, sc.drift);
        store(vol, sc.vol);
    });
}

rs_status rs_blocked_solve(const rs_market_params* params,
                           const rs_consumption_spec* consumption, double max_wealth,
                           rs_blocked_solution** out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        const MarketParams mp = to_market(params);
        const DualBoundary b = solve_boundary(mp, to_consumption(consumption), max_wealth);
        *out = new rs_blocked_solution{DualFunction(mp, b)};
    });
}

void rs_blocked_free(rs_blocked_solution* solution) { delete solution; }

rs_status rs_blocked_boundary(const rs_blocked_solution* solution, double* y_m, double* y_0,
                              double* d1, double* d2) {
    return guarded([&] {
        if (!solution) fail(ErrorCode::null_argument, "solution handle is null");
        const DualBoundary& b = solution->dual.boundary();
        store(y_m, b.y_m);
        store(y_0, b.y_0);
        store(d1, b.d1);
        store(d2, b.d2);
    });
}

rs_status rs_blocked_psi(const rs_blocked_solution* solution, double wealth, double* out) {
    return guarded([&] {
        if (!solution || !out) fail(ErrorCode::null_argument, "null argument");
        *out = solution->dual.psi(wealth);
    });
}

rs_status rs_blocked_pi(const rs_blocked_solution* solution, double wealth, double* out) {
    return guarded([&] {
        if (!solution || !out) fail(ErrorCode::null_argument, "null argument");
        *out = solution->dual.pi(wealth);
    });
}

rs_status rs_blocked_dual_value(const rs_blocked_solution* solution, double y, double* out) {
    return guarded([&] {
        if (!solution || !out) fail(ErrorCode::null_argument, "null argument");
        *out = solution->dual.value(y);
    });
}

rs_status rs_blocked_dual_slope(const rs_blocked_solution* solution, double y, double* out) {
    return guarded([&] {
        if (!solution || !out) fail(ErrorCode::null_argument, "null argument");
        *out = solution->dual.deriv(y);
    });
}

rs_status rs_blocked_invert_dual(const rs_blocked_solution* solution, double wealth,
                                 double* out) {
    return guarded([&] {
        if (!solution || !out) fail(ErrorCode::null_argument, "null argument");
        *out = solution->dual.invert(wealth);
    });
}

rs_status rs_ratchet_condition(const rs_market_params* params,
                               const rs_consumption_spec* consumption, double max_wealth,
                               int* holds, double* lhs, double* rhs) {
    return guarded([&] {
        const RatchetCondition rc =
            ratchet_condition(to_market(params), to_consumption(consumption), max_wealth);
        store(holds, rc.holds ? 1 : 0);
        store(lhs, rc.lhs);
        store(rhs, rc.rhs);
    });
}

rs_status rs_m_star(const rs_market_params* params, const rs_consumption_spec* consumption,
                    double m0, double* m_star_out, int* safe_level_binding) {
    return guarded([&] {
        const MStarResult res = m_star(to_market(params), to_consumption(consumption), m0);
        store(m_star_out, res.m_star);
        store(safe_level_binding, res.safe_level_binding ? 1 : 0);
    });
}

rs_status rs_active_solve(const rs_market_params* params,
                          const rs_consumption_spec* consumption, double m0,
                          rs_moving_boundary** out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        *out = new rs_moving_boundary{
            integrate_boundaries(to_market(params), to_consumption(consumption), m0)};
    });
}

void rs_active_free(rs_moving_boundary* boundary) { delete boundary; }

rs_status rs_active_m_star(const rs_moving_boundary* boundary, double* m_star_out,
                           int* safe_level_binding) {
    return guarded([&] {
        if (!boundary) fail(ErrorCode::null_argument, "boundary handle is null");
        store(m_star_out, boundary->mb.m_star());
        store(safe_level_binding, boundary->mb.safe_level_binding() ? 1 : 0);
    });
}

rs_status rs_active_node_count(const rs_moving_boundary* boundary, int64_t* out) {
    return guarded([&] {
        if (!boundary || !out) fail(ErrorCode::null_argument, "null argument");
        *out = static_cast<int64_t>(boundary->mb.nodes().size());
    });
}

rs_status rs_active_psi(const rs_moving_boundary* boundary, double wealth, double max_wealth,
                        double* out) {
    return guarded([&] {
        if (!boundary || !out) fail(ErrorCode::null_argument, "null argument");
        *out = boundary->mb.psi(wealth, max_wealth);
    });
}

rs_status rs_active_pi(const rs_moving_boundary* boundary, double wealth, double max_wealth,
                       double* out) {
    return guarded([&] {
        if (!boundary || !out) fail(ErrorCode::null_argument, "null argument");
        *out = boundary->mb.pi(wealth, max_wealth);
    });
}

rs_status rs_active_to_json(const rs_moving_boundary* boundary, char** json) {
    return guarded([&] {
        if (!boundary || !json) fail(ErrorCode::null_argument, "null argument");
        *json = dup_string(boundary->mb.to_json());
    });
}

rs_status rs_active_from_json(const char* json, rs_moving_boundary** out) {
    return guarded([&] {
        if (!json || !out) fail(ErrorCode::null_argument, "null argument");
        *out = new rs_moving_boundary{MovingBoundary::from_json(json)};
    });
}

rs_status rs_simulate(const rs_market_params* params, const rs_consumption_spec* consumption,
                      double wealth, double max_wealth, rs_strategy_kind strategy,
                      double strategy_param, const rs_sim_config* config,
                      rs_ruin_estimate* out) {
    return guarded([&] {
        if (!out) fail(ErrorCode::null_argument, "output pointer is null");
        Strategy strat = Strategy::fixed_max();
        switch (strategy) {
            case RS_STRATEGY_FIXED_MAX: strat = Strategy::fixed_max(); break;
            case RS_STRATEGY_BLOCKED: strat = Strategy::blocked(); break;
            case RS_STRATEGY_ACTIVE: strat = Strategy::active(); break;
            case RS_STRATEGY_CONSTANT_AMOUNT:
                strat = Strategy::constant_amount(strategy_param);
                break;
            case RS_STRATEGY_CONSTANT_PROPORTION:
                strat = Strategy::constant_proportion(strategy_param);
                break;
            default: fail(ErrorCode::invalid_params, "unknown strategy kind");
        }
        const RuinEstimate est =
            simulate_ruin(to_market(params), to_consumption(consumption),
                          AgentState{wealth, max_wealth}, strat, to_sim_config(config));
        out->point = est.point;
        out->std_error = est.std_error;
        out->truncation_bias_bound = est.truncation_bias_bound;
        out->n_paths = est.n_paths;
        out->n_ruined = est.n_ruined;
        out->n_safe_absorbed = est.n_safe_absorbed;
        out->n_truncated = est.n_truncated;
        out->max_excursion = est.max_excursion;
        out->dt = est.dt;
        out->t_max = est.t_max;
        out->seed = est.seed;
        out->scheme = est.scheme == SimScheme::exact_shortfall_gbm ? RS_SCHEME_EXACT_SHORTFALL
                                                                   : RS_SCHEME_EULER;
        out->n_threads_used = est.n_threads_used;
    });
}

rs_status rs_verify(const rs_market_params* params, const rs_consumption_spec* consumption,
                    double wealth, double max_wealth, int perturb, char** json_report,
                    int* all_pass) {
    return guarded([&] {
        if (!json_report || !all_pass) fail(ErrorCode::null_argument, "null argument");
        const MarketParams mp = to_market(params);
        const ConsumptionSpec cs = to_consumption(consumption);
        const AgentState st{wealth, max_wealth};
        const Regime regime = classify_regime(mp, cs, st);

        nlohmann::json bundle = nlohmann::json::array();
        bool ok = true;
        auto add = [&](const CheckReport& rep) {
            bundle.push_back(nlohmann::json::parse(rep.to_json()));
            ok = ok && rep.pass;
        };

        const double m = st.max_wealth;
        if (regime == Regime::fixed_max_below_safe) {
            FixedMaxSolution sol(mp, cs, m);
            const double bump = perturb ? 1.01 : 1.0;
            ValueSection sec;
            sec.value = [sol, bump](double w) {
                return std::pow(sol.psi(w), bump);
            };
            sec.dw = perturb ? std::function<double(double)>()
                             : [sol](double w) { return sol.psi_dw(w); };
            sec.dww = perturb ? std::function<double(double)>()
                              : [sol](double w) { return sol.psi_dww(w); };
            Grid g{0.0, sol.safe_w(), 100};
            add(hjb_residual(sec, mp, sol.c_of_m(), g));
            auto h2 = [&mp, &cs](double w, double mm) {
                return FixedMaxSolution(mp, cs, mm).psi(w);
            };
            add(verification_conditions(h2, mp, cs, m, Grid{0.0, sol.safe_w(), 40}));
        } else if (regime == Regime::ratchet_blocked ||
                   (regime == Regime::ratchet_active && perturb)) {
            DualBoundary b = solve_boundary(mp, cs, m);
            if (perturb) b.d1 *= 1.01;
            const DualFunction dual(mp, b);
            ValueSection sec;
            sec.value = [&dual](double w) { return dual.psi(w); };
            sec.dw = [&dual](double w) { return -dual.invert(w); };
            sec.dww = [&dual](double w) { return -1.0 / dual.second(dual.invert(w)); };
            add(hjb_residual(sec, mp, cs.value(m), Grid{0.0, m, 100}));
            if (!perturb) {
                auto h2 = [&mp, &cs](double w, double mm) {
                    const DualBoundary bb = solve_boundary(mp, cs, mm);
                    return DualFunction(mp, bb).psi(w);
                };
                add(verification_conditions(h2, mp, cs, m, Grid{0.0, m, 40}));
                add(section42_suite(mp, cs, m));
            }
        } else if (regime == Regime::ratchet_active) {
            const MovingBoundary mb = integrate_boundaries(mp, cs, m);
            ValueSection sec;
            sec.value = [&mb, m](double w) { return mb.psi(w, m); };
            add(hjb_residual(sec, mp, cs.value(m), Grid{0.0, m, 100}));
            auto h2 = [&mb](double w, double mm) { return mb.psi(w, mm); };
            add(verification_conditions(h2, mp, cs, m, Grid{0.0, m, 40}));

            // regime-specific rows: strict dominance over the blocked value
            // and value matching at the terminal maximum
            CheckReport rep;
            rep.name = "active_suite";
            rep.threshold = 1e-6;
            const DualBoundary bb0 = solve_boundary(mp, cs, m);
            const DualFunction blocked0(mp, bb0);
            for (int i = 1; i <= 20; ++i) {
                const double w = m * i / 21.0;
                const double gap = blocked0.psi(w) - mb.psi(w, m);
                rep.rows.push_back({"dominance", w, gap, gap > 0.0});
            }
            const double ma = mb.anchor_m();
            const DualBoundary bba = solve_boundary(mp, cs, ma);
            const DualFunction blocked_a(mp, bba);
            for (int i = 1; i <= 20; ++i) {
                const double w = ma * i / 21.0;
                rep.worst_residual = std::max(rep.worst_residual,
                                              std::abs(blocked_a.psi(w) - mb.psi(w, ma)));
            }
            rep.finish();
            add(rep);
        } else {
            CheckReport rep;
            rep.name = "trivial_regime";
            rep.rows.push_back({regime_name(regime), wealth,
                                regime == Regime::ruined ? 1.0 : 0.0, true});
            rep.finish();
            add(rep);
        }
        (void)k;
        *all_pass = ok ? 1 : 0;
        nlohmann::json root;
        root["regime"] = regime_name(regime);
        root["perturbed"] = perturb != 0;
        root["checks"] = std::move(bundle);
        root["all_pass"] = ok;
        *json_report = dup_string(root.dump(2));
    });
}

rs_status rs_scenario_parse(const char* text, rs_scenario** out) {
    return guarded([&] {
        if (!text || !out) fail(ErrorCode::null_argument, "null argument");
        *out = new rs_scenario{Scenario::parse(text)};
    });
}

rs_status rs_scenario_load(const char* path, rs_scenario** out) {
    return guarded([&] {
        if (!path || !out) fail(ErrorCode::null_argument, "null argument");
        *out = new rs_scenario{Scenario::load(path)};
    });
}

rs_status rs_scenario_to_text(const rs_scenario* scenario, char** text) {
    return guarded([&] {
        if (!scenario || !text) fail(ErrorCode::null_argument, "null argument");
        *text = dup_string(scenario->sc.serialize());
    });
}

rs_status rs_scenario_save(const rs_scenario* scenario, const char* path) {
    return guarded([&] {
        if (!scenario || !path) fail(ErrorCode::null_argument, "null argument");
        scenario->sc.save(path);
    });
}

void rs_scenario_free(rs_scenario* scenario) { delete scenario; }

rs_status rs_scenario_get(const rs_scenario* scenario, rs_market_params* market,
                          rs_consumption_spec* consumption, double* wealth,
                          double* max_wealth, rs_sim_config* sim, int* has_sim) {
    return guarded([&] {
        if (!scenario) fail(ErrorCode::null_argument, "scenario handle is null");
        const Scenario& sc = scenario->sc;
        if (market) {
            market->riskless_rate = sc.market.riskless_rate;
            market->risky_drift = sc.market.risky_drift;
            market->risky_volatility = sc.market.risky_volatility;
            market->hazard_rate = sc.market.hazard_rate;
        }
        if (consumption) {
            consumption->family = sc.consumption.family() == ConsumptionSpec::Family::affine
                                      ? RS_CONSUMPTION_AFFINE : RS_CONSUMPTION_POWER;
            consumption->a = sc.consumption.a();
            consumption->b = sc.consumption.b();
        }
        store(wealth, sc.state.wealth);
        store(max_wealth, sc.state.max_wealth);
        if (sim) {
            if (sc.sim) {
                sim->dt = sc.sim->dt;
                sim->n_paths = sc.sim->n_paths;
                sim->t_max = sc.sim->t_max;
                sim->seed = sc.sim->seed;
                sim->scheme = sc.sim->scheme == SimScheme::exact_shortfall_gbm
                                  ? RS_SCHEME_EXACT_SHORTFALL : RS_SCHEME_EULER;
                sim->n_threads = sc.sim->n_threads;
            } else {
                *sim = rs_sim_config{0.0, 0, 0.0, 0x9E3779B97F4A7C15ULL, RS_SCHEME_EULER, 0};
            }
        }
        store(has_sim, sc.sim ? 1 : 0);
    });
}

} // extern "C"
