// Exercises the shared-library C surface end to end.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "ruinsolver.h"

static int g_failures = 0;

#define REQUIRE(cond)                                                          \
    do {                                                                       \
        if (!(cond)) {                                                         \
            std::fprintf(stderr, "[FAIL] %s:%d: %s\n", __FILE__, __LINE__, #cond); \
            ++g_failures;                                                      \
        }                                                                      \
    } while (0)

#define REQUIRE_OK(expr) REQUIRE((expr) == RS_OK)

static const rs_market_params kBase{0.05, 0.10, 0.20, 0.04};

static void test_constants_and_regimes() {
    rs_derived_constants k;
    REQUIRE_OK(rs_derive_constants(&kBase, &k));
    REQUIRE(std::abs(k.delta - 0.03125) < 1e-15);
    REQUIRE(std::abs(k.b1 - k.gamma / (k.gamma - 1.0)) < 1e-12 * k.b1);

    rs_market_params bad = kBase;
    bad.risky_drift = bad.riskless_rate;
    REQUIRE(rs_derive_constants(&bad, &k) == RS_ERR_INVALID_PARAMS);
    REQUIRE(std::strlen(rs_last_error()) > 0);
    REQUIRE(rs_derive_constants(nullptr, &k) == RS_ERR_NULL_ARGUMENT);

    const rs_consumption_spec low{RS_CONSUMPTION_AFFINE, 0.04, 0.0};
    const rs_consumption_spec high{RS_CONSUMPTION_AFFINE, 0.06, 0.0};
    double safe = 0.0;
    REQUIRE_OK(rs_safe_level(&kBase, &low, 100.0, &safe));
    REQUIRE(std::abs(safe - 80.0) < 1e-12);

    rs_regime regime;
    REQUIRE_OK(rs_classify_regime(&kBase, &low, -1.0, 100.0, &regime));
    REQUIRE(regime == RS_REGIME_RUINED);
    REQUIRE_OK(rs_classify_regime(&kBase, &low, 40.0, 100.0, &regime));
    REQUIRE(regime == RS_REGIME_FIXED_MAX_BELOW_SAFE);
    REQUIRE_OK(rs_classify_regime(&kBase, &high, 50.0, 100.0, &regime));
    REQUIRE(regime == RS_REGIME_RATCHET_BLOCKED);
    REQUIRE(std::strcmp(rs_regime_name(regime), "RatchetBlocked") == 0);
}

static void test_fixed_max() {
    const rs_consumption_spec low{RS_CONSUMPTION_AFFINE, 0.04, 0.0};
    double psi = 0.0, pi = 0.0, drift = 0.0, vol = 0.0;
    REQUIRE_OK(rs_fixed_max_psi(&kBase, &low, 40.0, 100.0, &psi));
    REQUIRE(std::abs(psi - 0.24466324369235531) < 1e-12);
    REQUIRE_OK(rs_fixed_max_pi(&kBase, &low, 40.0, 100.0, &pi));
    REQUIRE(std::abs(pi - 48.490457320131775) < 1e-9);
    REQUIRE_OK(rs_shortfall_coefficients(&kBase, &low, 100.0, &drift, &vol));
    REQUIRE(std::abs(vol - 0.24245228660065893) < 1e-12);
    REQUIRE(rs_fixed_max_pi(&kBase, &low, 85.0, 100.0, &pi) == RS_ERR_OUT_OF_REGIME);
}

static void test_blocked() {
    const rs_consumption_spec high{RS_CONSUMPTION_AFFINE, 0.06, 0.0};
    rs_blocked_solution* sol = nullptr;
    REQUIRE_OK(rs_blocked_solve(&kBase, &high, 100.0, &sol));
    double ym = 0.0, y0 = 0.0, d1 = 0.0, d2 = 0.0;
    REQUIRE_OK(rs_blocked_boundary(sol, &ym, &y0, &d1, &d2));
    REQUIRE(std::abs(y0 - 0.01683258470800582) < 1e-10 * y0);
    REQUIRE(d1 < 0.0);
    REQUIRE(d2 > 0.0);

    double psi = 0.0, pi = 0.0, y = 0.0, slope = 0.0;
    REQUIRE_OK(rs_blocked_psi(sol, 50.0, &psi));
    REQUIRE(std::abs(psi - 0.339193433336) < 1e-9);
    REQUIRE_OK(rs_blocked_pi(sol, 50.0, &pi));
    REQUIRE(pi > 0.0);
    REQUIRE_OK(rs_blocked_invert_dual(sol, 50.0, &y));
    REQUIRE_OK(rs_blocked_dual_slope(sol, y, &slope));
    REQUIRE(std::abs(slope - 50.0) < 1e-9 * 100.0);
    double one = 0.0;
    REQUIRE_OK(rs_blocked_dual_value(sol, y0, &one));
    REQUIRE(std::abs(one - 1.0) < 1e-12);
    REQUIRE(rs_blocked_psi(sol, 101.0, &psi) == RS_ERR_DOMAIN);
    rs_blocked_free(sol);

    int holds = 0;
    double lhs = 0.0, rhs = 0.0;
    REQUIRE_OK(rs_ratchet_condition(&kBase, &high, 100.0, &holds, &lhs, &rhs));
    REQUIRE(holds == 1);
    REQUIRE(lhs == 0.0);

    // blocked solve demands the ratchet wedge
    const rs_consumption_spec low{RS_CONSUMPTION_AFFINE, 0.04, 0.0};
    rs_blocked_solution* none = nullptr;
    REQUIRE(rs_blocked_solve(&kBase, &low, 100.0, &none) == RS_ERR_OUT_OF_REGIME);
}

static void test_active() {
    const rs_consumption_spec concave{RS_CONSUMPTION_POWER, 1.0, 0.5};
    double ms = 0.0;
    int binding = 0;
    REQUIRE_OK(rs_m_star(&kBase, &concave, 100.0, &ms, &binding));
    REQUIRE(std::abs(ms - 400.0) < 1e-4);
    REQUIRE(binding == 1);

    rs_moving_boundary* mb = nullptr;
    REQUIRE_OK(rs_active_solve(&kBase, &concave, 100.0, &mb));
    int64_t nodes = 0;
    REQUIRE_OK(rs_active_node_count(mb, &nodes));
    REQUIRE(nodes >= 201);

    double psi_a = 0.0, psi_b = 0.0, pi = 0.0;
    REQUIRE_OK(rs_active_psi(mb, 50.0, 100.0, &psi_a));
    rs_blocked_solution* blocked = nullptr;
    REQUIRE_OK(rs_blocked_solve(&kBase, &concave, 100.0, &blocked));
    REQUIRE_OK(rs_blocked_psi(blocked, 50.0, &psi_b));
    REQUIRE(psi_a < psi_b);  // ratcheting strictly helps here
    rs_blocked_free(blocked);
    REQUIRE_OK(rs_active_pi(mb, 100.0, 100.0, &pi));
    REQUIRE(pi > 0.0);

    char* json = nullptr;
    REQUIRE_OK(rs_active_to_json(mb, &json));
    rs_moving_boundary* back = nullptr;
    REQUIRE_OK(rs_active_from_json(json, &back));
    double psi_back = 0.0;
    REQUIRE_OK(rs_active_psi(back, 50.0, 100.0, &psi_back));
    REQUIRE(psi_back == psi_a);
    rs_string_free(json);
    rs_active_free(back);
    rs_active_free(mb);

    rs_moving_boundary* bad = nullptr;
    REQUIRE(rs_active_from_json("{\"schema\":\"nope\"}", &bad) == RS_ERR_PARSE);
}

static void test_simulate_and_verify() {
    const rs_consumption_spec low{RS_CONSUMPTION_AFFINE, 0.04, 0.0};
    rs_sim_config cfg{1e-3, 20000, 80.0, 42, RS_SCHEME_EULER, 2};
    rs_ruin_estimate est;
    REQUIRE_OK(rs_simulate(&kBase, &low, 40.0, 100.0, RS_STRATEGY_FIXED_MAX, 0.0, &cfg, &est));
    REQUIRE(est.n_paths == 20000);
    REQUIRE(std::abs(est.point - 0.2447) < 3.0 * est.std_error + est.truncation_bias_bound + 5e-3);

    rs_ruin_estimate est2;
    REQUIRE_OK(rs_simulate(&kBase, &low, 40.0, 100.0, RS_STRATEGY_FIXED_MAX, 0.0, &cfg, &est2));
    REQUIRE(est.point == est2.point);

    char* report = nullptr;
    int all_pass = 0;
    REQUIRE_OK(rs_verify(&kBase, &low, 40.0, 100.0, 0, &report, &all_pass));
    REQUIRE(all_pass == 1);
    REQUIRE(std::strstr(report, "hjb_residual") != nullptr);
    rs_string_free(report);

    report = nullptr;
    REQUIRE_OK(rs_verify(&kBase, &low, 40.0, 100.0, 1, &report, &all_pass));
    REQUIRE(all_pass == 0);  // the injected perturbation must be caught
    rs_string_free(report);
}

static void test_scenario() {
    const char* text =
        "riskless_rate_per_year = 0.05\n"
        "risky_drift_per_year = 0.10\n"
        "risky_volatility_per_sqrt_year = 0.20\n"
        "hazard_rate_per_year = 0.04\n"
        "consumption_family = affine\n"
        "consumption_slope_per_year = 0.06\n"
        "consumption_intercept_per_year = 0\n"
        "wealth = 50\n"
        "max_wealth = 100\n";
    rs_scenario* sc = nullptr;
    REQUIRE_OK(rs_scenario_parse(text, &sc));
    rs_market_params market;
    rs_consumption_spec consumption;
    double w = 0.0, m = 0.0;
    int has_sim = -1;
    REQUIRE_OK(rs_scenario_get(sc, &market, &consumption, &w, &m, nullptr, &has_sim));
    REQUIRE(market.riskless_rate == 0.05);
    REQUIRE(consumption.family == RS_CONSUMPTION_AFFINE);
    REQUIRE(w == 50.0);
    REQUIRE(has_sim == 0);

    char* round = nullptr;
    REQUIRE_OK(rs_scenario_to_text(sc, &round));
    rs_scenario* sc2 = nullptr;
    REQUIRE_OK(rs_scenario_parse(round, &sc2));
    char* round2 = nullptr;
    REQUIRE_OK(rs_scenario_to_text(sc2, &round2));
    REQUIRE(std::strcmp(round, round2) == 0);
    rs_string_free(round);
    rs_string_free(round2);
    rs_scenario_free(sc);
    rs_scenario_free(sc2);

    rs_scenario* bad = nullptr;
    REQUIRE(rs_scenario_parse("garbage", &bad) == RS_ERR_PARSE);
}

int main() {
    test_constants_and_regimes();
    test_fixed_max();
    test_blocked();
    test_active();
    test_simulate_and_verify();
    test_scenario();
    if (g_failures) {
        std::fprintf(stderr, "%d C-API check(s) failed\n", g_failures);
        return 1;
    }
    std::puts("C API: all checks passed");
    return 0;
}
