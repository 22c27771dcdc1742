// ruin: command-line front end over the ruinsolver C API.
//
// Subcommands: evaluate, curve, mstar, simulate, verify.
// Exit codes: 0 ok, 1 verification failure, 2 validation error,
//             3 convergence error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruinsolver.h"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;

int exit_code_for(rs_status st) {
    switch (st) {
        case RS_OK:
            return kExitOk;
        case RS_ERR_NO_BRACKET:
        case RS_ERR_NO_ROOT:
        case RS_ERR_SINGULAR:
        case RS_ERR_NO_CONVERGENCE:
        case RS_ERR_UNBOUNDED:
            return kExitConvergence;
        default:
            return kExitValidation;
    }
}

// Failure carrying the machine-readable error object.
struct CliError {
    int code;
    json detail;
};

void check(rs_status st, const std::string& where) {
    if (st == RS_OK) return;
    json err;
    err["error"] = {{"status", rs_status_name(st)},
                    {"message", rs_last_error()},
                    {"where", where}};
    throw CliError{exit_code_for(st), err};
}

struct ManagedString {
    char* ptr = nullptr;
    ~ManagedString() { rs_string_free(ptr); }
};

struct LoadedScenario {
    rs_market_params market{};
    rs_consumption_spec consumption{};
    double wealth = 0.0;
    double max_wealth = 0.0;
    rs_sim_config sim{};
    bool has_sim = false;
};

LoadedScenario load_scenario(const std::string& path) {
    rs_scenario* sc = nullptr;
    check(rs_scenario_load(path.c_str(), &sc), "scenario load");
    LoadedScenario out;
    const rs_status st = rs_scenario_get(sc, &out.market, &out.consumption, &out.wealth,
                                         &out.max_wealth, &out.sim, nullptr);
    int has_sim = 0;
    rs_scenario_get(sc, nullptr, nullptr, nullptr, nullptr, nullptr, &has_sim);
    out.has_sim = has_sim != 0;
    rs_scenario_free(sc);
    check(st, "scenario fields");
    return out;
}

json config_echo(const LoadedScenario& sc) {
    json j;
    j["market"] = {{"riskless_rate_per_year", sc.market.riskless_rate},
                   {"risky_drift_per_year", sc.market.risky_drift},
                   {"risky_volatility_per_sqrt_year", sc.market.risky_volatility},
                   {"hazard_rate_per_year", sc.market.hazard_rate}};
    j["consumption"] = {{"family", sc.consumption.family == RS_CONSUMPTION_AFFINE ? "affine" : "power"},
                        {"a", sc.consumption.a},
                        {"b", sc.consumption.b}};
    j["state"] = {{"wealth", sc.wealth}, {"max_wealth", sc.max_wealth}};
    j["library_version"] = rs_version();
    j["schema_version"] = 1;
    return j;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (text.empty() || text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        json err;
        err["error"] = {{"status", "io_error"}, {"message", "cannot open " + out_path}};
        throw CliError{kExitValidation, err};
    }
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

double benchmark_phi(const rs_market_params& market, double gamma_, double c_of_m, double w) {
    if (w <= 0.0) return 1.0;
    const double x = market.riskless_rate * w / c_of_m;
    if (x >= 1.0) return 0.0;
    return std::exp(gamma_ * std::log1p(-x));
}

struct BoundaryHandle {
    rs_moving_boundary* ptr = nullptr;
    ~BoundaryHandle() { rs_active_free(ptr); }
};

struct BlockedHandle {
    rs_blocked_solution* ptr = nullptr;
    ~BlockedHandle() { rs_blocked_free(ptr); }
};

// Obtains the moving boundary for a scenario, via the cache file when given.
void obtain_boundary(const LoadedScenario& sc, const std::string& cache,
                     BoundaryHandle& handle) {
    if (!cache.empty()) {
        std::ifstream in(cache, std::ios::binary);
        if (in) {
            std::ostringstream buf;
            buf << in.rdbuf();
            rs_moving_boundary* mb = nullptr;
            if (rs_active_from_json(buf.str().c_str(), &mb) == RS_OK) {
                // only reuse a cache that matches the scenario inputs
                double ms = 0.0;
                rs_active_m_star(mb, &ms, nullptr);
                double psi_probe = 0.0;
                if (rs_active_psi(mb, 0.0, sc.max_wealth, &psi_probe) == RS_OK) {
                    handle.ptr = mb;
                    return;
                }
                rs_active_free(mb);
            }
        }
    }
    check(rs_active_solve(&sc.market, &sc.consumption, sc.max_wealth, &handle.ptr),
          "moving boundary");
    if (!cache.empty()) {
        ManagedString text;
        if (rs_active_to_json(handle.ptr, &text.ptr) == RS_OK) {
            std::ofstream out(cache, std::ios::binary);
            if (out) out << text.ptr;
        }
    }
}

int cmd_evaluate(const std::string& scenario_path, const std::string& out_path,
                 const std::string& cache) {
    const LoadedScenario sc = load_scenario(scenario_path);
    rs_regime regime;
    check(rs_classify_regime(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &regime),
          "classify");
    double safe = 0.0;
    check(rs_safe_level(&sc.market, &sc.consumption, sc.max_wealth, &safe), "safe level");
    rs_derived_constants k;
    check(rs_derive_constants(&sc.market, &k), "constants");

    json j = config_echo(sc);
    j["regime"] = rs_regime_name(regime);
    j["safe_level"] = safe;
    j["constants"] = {{"delta", k.delta}, {"gamma", k.gamma}, {"b1", k.b1}, {"b2", k.b2}};

    switch (regime) {
        case RS_REGIME_RUINED:
            j["psi"] = 1.0;
            break;
        case RS_REGIME_SAFE_LEVEL:
            j["psi"] = 0.0;
            j["pi"] = 0.0;
            j["strategy"] = "all riskless";
            break;
        case RS_REGIME_FIXED_MAX_BELOW_SAFE: {
            double psi = 0.0, pi = 0.0;
            check(rs_fixed_max_psi(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &psi),
                  "psi");
            check(rs_fixed_max_pi(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &pi),
                  "pi");
            j["psi"] = psi;
            j["pi"] = pi;
            break;
        }
        case RS_REGIME_RATCHET_BLOCKED: {
            BlockedHandle h;
            check(rs_blocked_solve(&sc.market, &sc.consumption, sc.max_wealth, &h.ptr), "solve");
            double psi = 0.0, ym = 0.0, y0 = 0.0, d1 = 0.0, d2 = 0.0;
            check(rs_blocked_psi(h.ptr, sc.wealth, &psi), "psi");
            check(rs_blocked_boundary(h.ptr, &ym, &y0, &d1, &d2), "boundary");
            j["psi"] = psi;
            if (sc.wealth > 0.0) {
                double pi = 0.0;
                check(rs_blocked_pi(h.ptr, sc.wealth, &pi), "pi");
                j["pi"] = pi;
            }
            int holds = 0;
            double lhs = 0.0, rhs = 0.0;
            check(rs_ratchet_condition(&sc.market, &sc.consumption, sc.max_wealth, &holds, &lhs,
                                       &rhs),
                  "ratchet condition");
            j["boundary"] = {{"y_m", ym}, {"y_0", y0}, {"d1", d1}, {"d2", d2}};
            j["ratchet_condition"] = {{"holds", holds != 0}, {"lhs", lhs}, {"rhs", rhs}};
            break;
        }
        case RS_REGIME_RATCHET_ACTIVE: {
            BoundaryHandle h;
            obtain_boundary(sc, cache, h);
            double psi = 0.0, pi = 0.0, ms = 0.0;
            int safe_binding = 0;
            int64_t nodes = 0;
            check(rs_active_psi(h.ptr, sc.wealth, sc.max_wealth, &psi), "psi");
            check(rs_active_m_star(h.ptr, &ms, &safe_binding), "m_star");
            check(rs_active_node_count(h.ptr, &nodes), "nodes");
            j["psi"] = psi;
            if (sc.wealth > 0.0) {
                check(rs_active_pi(h.ptr, sc.wealth, sc.max_wealth, &pi), "pi");
                j["pi"] = pi;
            }
            j["m_star"] = ms;
            j["boundary"] = {{"m_star", ms},
                             {"binding", safe_binding ? "safe_level" : "ratchet_condition"},
                             {"nodes", nodes}};
            break;
        }
    }
    emit(j.dump(2), out_path);
    return kExitOk;
}

struct Sweep {
    char variable = 'w';
    double lo = 0.0, hi = 0.0;
    int points = 0;
};

Sweep parse_sweep(const std::string& text) {
    Sweep s;
    char var = 0;
    double lo = 0.0, hi = 0.0;
    int n = 0;
    if (std::sscanf(text.c_str(), "%c:%lf:%lf:%d", &var, &lo, &hi, &n) != 4 ||
        (var != 'w' && var != 'm') || n < 2 || !(hi >= lo)) {
        json err;
        err["error"] = {{"status", "parse_error"},
                        {"message", "--sweep expects w:<lo>:<hi>:<n> or m:<lo>:<hi>:<n>"}};
        throw CliError{kExitValidation, err};
    }
    s.variable = var;
    s.lo = lo;
    s.hi = hi;
    s.points = n;
    return s;
}

int cmd_curve(const std::string& scenario_path, const std::string& out_path,
              const std::string& sweep_text, const std::string& format) {
    const LoadedScenario sc = load_scenario(scenario_path);
    const Sweep sweep = parse_sweep(sweep_text);
    rs_derived_constants k;
    check(rs_derive_constants(&sc.market, &k), "constants");

    BlockedHandle blocked;   // lazy, reused across rows of equal m
    double blocked_m = -1.0;
    BoundaryHandle moving;   // lazy, covers every active row at or below m*

    json rows = json::array();
    std::ostringstream csv;
    csv << "w,m,regime,psi,pi_star,comparison_phi\n";
    csv.precision(12);

    for (int i = 0; i < sweep.points; ++i) {
        const double t = sweep.points == 1 ? 0.0
                                           : static_cast<double>(i) / (sweep.points - 1);
        const double v = sweep.lo + (sweep.hi - sweep.lo) * t;
        const double w = sweep.variable == 'w' ? v : sc.wealth;
        const double m = sweep.variable == 'm' ? v : sc.max_wealth;

        rs_regime regime;
        check(rs_classify_regime(&sc.market, &sc.consumption, w, m, &regime), "classify");
        double c_of_m = 0.0;
        check(rs_consumption_value(&sc.consumption, m, &c_of_m), "consumption");
        const double phi = benchmark_phi(sc.market, k.gamma, c_of_m, w);

        double psi = 0.0;
        std::optional<double> pi;
        switch (regime) {
            case RS_REGIME_RUINED:
                psi = 1.0;
                break;
            case RS_REGIME_SAFE_LEVEL:
                psi = 0.0;
                pi = 0.0;
                break;
            case RS_REGIME_FIXED_MAX_BELOW_SAFE: {
                check(rs_fixed_max_psi(&sc.market, &sc.consumption, w, m, &psi), "psi");
                double p = 0.0;
                check(rs_fixed_max_pi(&sc.market, &sc.consumption, w, m, &p), "pi");
                pi = p;
                break;
            }
            case RS_REGIME_RATCHET_BLOCKED: {
                if (!blocked.ptr || blocked_m != m) {
                    rs_blocked_free(blocked.ptr);
                    blocked.ptr = nullptr;
                    check(rs_blocked_solve(&sc.market, &sc.consumption, m, &blocked.ptr),
                          "solve");
                    blocked_m = m;
                }
                check(rs_blocked_psi(blocked.ptr, w, &psi), "psi");
                if (w > 0.0) {
                    double p = 0.0;
                    check(rs_blocked_pi(blocked.ptr, w, &p), "pi");
                    pi = p;
                }
                break;
            }
            case RS_REGIME_RATCHET_ACTIVE: {
                if (!moving.ptr)
                    check(rs_active_solve(&sc.market, &sc.consumption, m, &moving.ptr),
                          "moving boundary");
                check(rs_active_psi(moving.ptr, w, m, &psi), "psi");
                if (w > 0.0) {
                    double p = 0.0;
                    check(rs_active_pi(moving.ptr, w, m, &p), "pi");
                    pi = p;
                }
                break;
            }
        }
        rows.push_back({{"w", w},
                        {"m", m},
                        {"regime", rs_regime_name(regime)},
                        {"psi", psi},
                        {"pi_star", pi ? json(*pi) : json()},
                        {"comparison_phi", phi}});
        csv << std::setprecision(12) << w << ',' << m << ',' << rs_regime_name(regime) << ','
            << psi << ',';
        if (pi) csv << *pi;
        csv << ',' << phi << '\n';
    }

    if (format == "json") {
        json j = config_echo(sc);
        j["sweep"] = {{"variable", std::string(1, sweep.variable)},
                      {"lo", sweep.lo},
                      {"hi", sweep.hi},
                      {"points", sweep.points}};
        j["rows"] = std::move(rows);
        emit(j.dump(2), out_path);
    } else {
        emit(csv.str(), out_path);
    }
    return kExitOk;
}

int cmd_mstar(const std::string& scenario_path, const std::string& out_path,
              const std::string& cache) {
    const LoadedScenario sc = load_scenario(scenario_path);
    rs_regime regime;
    check(rs_classify_regime(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &regime),
          "classify");
    if (regime != RS_REGIME_RATCHET_ACTIVE) {
        json err;
        err["error"] = {{"status", "invalid_params"},
                        {"message", std::string("mstar requires the RatchetActive regime, got ") +
                                        rs_regime_name(regime)}};
        throw CliError{kExitValidation, err};
    }

    BoundaryHandle h;
    obtain_boundary(sc, cache, h);
    double ms = 0.0;
    int safe_binding = 0;
    check(rs_active_m_star(h.ptr, &ms, &safe_binding), "m_star");

    // condition margin profile on [m0, m*]
    json profile = json::array();
    const int n_grid = 33;
    for (int i = 0; i < n_grid; ++i) {
        const double m = sc.max_wealth + (ms - sc.max_wealth) * i / (n_grid - 1);
        int holds = 0;
        double lhs = 0.0, rhs = 0.0;
        const rs_status st =
            rs_ratchet_condition(&sc.market, &sc.consumption, m, &holds, &lhs, &rhs);
        if (st != RS_OK) continue;  // margin undefined at/beyond a safe-level crossing
        profile.push_back({{"m", m}, {"lhs", lhs}, {"rhs", rhs}, {"margin", lhs - rhs}});
    }

    json j = config_echo(sc);
    j["m_star"] = ms;
    j["binding"] = safe_binding ? "safe_level" : "ratchet_condition";
    j["condition_margin_profile"] = std::move(profile);
    emit(j.dump(2), out_path);
    return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_path,
                 const std::string& strategy_text, std::optional<std::uint64_t> seed,
                 std::optional<std::int64_t> paths, std::optional<double> dt,
                 std::optional<double> t_max, std::optional<int> threads) {
    const LoadedScenario sc = load_scenario(scenario_path);
    rs_sim_config cfg = sc.has_sim
                            ? sc.sim
                            : rs_sim_config{0.0, 0, 0.0, 0x9E3779B97F4A7C15ULL, RS_SCHEME_EULER, 0};
    if (seed) cfg.seed = *seed;
    if (paths) cfg.n_paths = *paths;
    if (dt) cfg.dt = *dt;
    if (t_max) cfg.t_max = *t_max;
    if (threads) cfg.n_threads = *threads;

    rs_regime regime;
    check(rs_classify_regime(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &regime),
          "classify");

    rs_strategy_kind kind = RS_STRATEGY_FIXED_MAX;
    double param = 0.0;
    std::string strat = strategy_text;
    if (strat.empty() || strat == "auto") {
        switch (regime) {
            case RS_REGIME_RATCHET_BLOCKED: kind = RS_STRATEGY_BLOCKED; break;
            case RS_REGIME_RATCHET_ACTIVE: kind = RS_STRATEGY_ACTIVE; break;
            default: kind = RS_STRATEGY_FIXED_MAX; break;
        }
    } else if (strat == "fixed_max") {
        kind = RS_STRATEGY_FIXED_MAX;
    } else if (strat == "blocked") {
        kind = RS_STRATEGY_BLOCKED;
    } else if (strat == "active") {
        kind = RS_STRATEGY_ACTIVE;
    } else if (strat.rfind("constant_amount:", 0) == 0) {
        kind = RS_STRATEGY_CONSTANT_AMOUNT;
        param = std::stod(strat.substr(16));
    } else if (strat.rfind("constant_proportion:", 0) == 0) {
        kind = RS_STRATEGY_CONSTANT_PROPORTION;
        param = std::stod(strat.substr(20));
    } else {
        json err;
        err["error"] = {{"status", "parse_error"},
                        {"message", "unknown strategy '" + strat + "'"}};
        throw CliError{kExitValidation, err};
    }

    rs_ruin_estimate est;
    check(rs_simulate(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, kind, param, &cfg,
                      &est),
          "simulate");

    json j = config_echo(sc);
    j["strategy"] = strat.empty() || strat == "auto" ? "auto" : strat;
    j["strategy_resolved"] = static_cast<int>(kind);
    j["estimate"] = {{"point", est.point},
                     {"std_error", est.std_error},
                     {"truncation_bias_bound", est.truncation_bias_bound},
                     {"n_paths", est.n_paths},
                     {"n_ruined", est.n_ruined},
                     {"n_safe_absorbed", est.n_safe_absorbed},
                     {"n_truncated", est.n_truncated},
                     {"max_excursion", est.max_excursion}};
    j["sim_config"] = {{"dt_years", est.dt},
                       {"t_max_years", est.t_max},
                       {"seed", est.seed},
                       {"scheme", est.scheme == RS_SCHEME_EXACT_SHORTFALL ? "exact_shortfall"
                                                                          : "euler"}};

    // analytic cross-check when the regime matches the strategy
    std::optional<double> analytic;
    if (kind == RS_STRATEGY_FIXED_MAX && regime == RS_REGIME_FIXED_MAX_BELOW_SAFE) {
        double v = 0.0;
        check(rs_fixed_max_psi(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, &v), "psi");
        analytic = v;
    } else if (kind == RS_STRATEGY_BLOCKED && regime == RS_REGIME_RATCHET_BLOCKED) {
        BlockedHandle h;
        check(rs_blocked_solve(&sc.market, &sc.consumption, sc.max_wealth, &h.ptr), "solve");
        double v = 0.0;
        check(rs_blocked_psi(h.ptr, sc.wealth, &v), "psi");
        analytic = v;
    } else if (kind == RS_STRATEGY_ACTIVE && regime == RS_REGIME_RATCHET_ACTIVE) {
        BoundaryHandle h;
        obtain_boundary(sc, "", h);
        double v = 0.0;
        check(rs_active_psi(h.ptr, sc.wealth, sc.max_wealth, &v), "psi");
        analytic = v;
    } else if (regime == RS_REGIME_RUINED || regime == RS_REGIME_SAFE_LEVEL) {
        analytic = regime == RS_REGIME_RUINED ? 1.0 : 0.0;
    }
    if (analytic) {
        const double tol = 3.0 * est.std_error + est.truncation_bias_bound;
        j["cross_check"] = {{"analytic", *analytic},
                            {"difference", est.point - *analytic},
                            {"tolerance_3se_plus_bias", tol},
                            {"pass", std::abs(est.point - *analytic) <= tol}};
    }
    emit(j.dump(2), out_path);
    return kExitOk;
}

int cmd_verify(const std::string& scenario_path, const std::string& out_path, bool perturb) {
    const LoadedScenario sc = load_scenario(scenario_path);
    ManagedString report;
    int all_pass = 0;
    check(rs_verify(&sc.market, &sc.consumption, sc.wealth, sc.max_wealth, perturb ? 1 : 0,
                    &report.ptr, &all_pass),
          "verify");
    json j = config_echo(sc);
    j["report"] = json::parse(report.ptr);
    emit(j.dump(2), out_path);
    return all_pass ? kExitOk : kExitVerifyFail;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"minimum lifetime-ruin probability under ratcheted consumption"};
    app.require_subcommand(1);

    std::string scenario, out_path, cache, format = "json", sweep, strategy;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<double> dt, t_max;
    std::optional<int> threads;
    bool perturb = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--scenario", scenario, "scenario file")->required();
        cmd->add_option("--out", out_path, "write output to this path instead of stdout");
    };

    CLI::App* evaluate = app.add_subcommand("evaluate", "solve the scenario's state");
    add_common(evaluate);
    evaluate->add_option("--cache", cache, "moving-boundary JSON cache path");

    CLI::App* curve = app.add_subcommand("curve", "sweep a variable and export a table");
    add_common(curve);
    curve->add_option("--sweep", sweep, "w:<lo>:<hi>:<n> or m:<lo>:<hi>:<n>")->required();
    curve->add_option("--format", format, "json|csv")->check(CLI::IsMember({"json", "csv"}));

    CLI::App* mstar = app.add_subcommand("mstar", "stopping level of the active ratchet");
    add_common(mstar);
    mstar->add_option("--cache", cache, "moving-boundary JSON cache path");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo ruin estimate");
    add_common(simulate);
    simulate->add_option("--strategy", strategy,
                         "auto|fixed_max|blocked|active|constant_amount:<x>|constant_proportion:<k>");
    simulate->add_option("--seed", seed, "RNG seed");
    simulate->add_option("--paths", paths, "number of paths");
    simulate->add_option("--dt", dt, "time step in years");
    simulate->add_option("--t-max", t_max, "horizon in years");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");

    CLI::App* verify = app.add_subcommand("verify", "run the diagnostic suites");
    add_common(verify);
    verify->add_flag("--perturb", perturb, "inject a 1% coefficient perturbation (negative control)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (evaluate->parsed()) return cmd_evaluate(scenario, out_path, cache);
        if (curve->parsed()) return cmd_curve(scenario, out_path, sweep, format);
        if (mstar->parsed()) return cmd_mstar(scenario, out_path, cache);
        if (simulate->parsed())
            return cmd_simulate(scenario, out_path, strategy, seed, paths, dt, t_max, threads);
        if (verify->parsed()) return cmd_verify(scenario, out_path, perturb);
    } catch (const CliError& e) {
        std::cerr << e.detail.dump(2) << '\n';
        return e.code;
    } catch (const std::exception& e) {
        json err;
        err["error"] = {{"status", "internal"}, {"message", e.what()}};
        std::cerr << err.dump(2) << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}
