/* ruinsolver: minimum lifetime-ruin probability under ratcheted consumption.
 *
 * C interface to the solver library. All functions return rs_status; outputs
 * are written through pointers. Opaque handles own solver state and must be
 * released with their matching _free function. Strings returned through
 * char** are heap-allocated and released with rs_string_free.
 *
 * Thread safety: handles are immutable once created and may be shared across
 * threads; creation functions are safe to call concurrently.
 */
#ifndef RUINSOLVER_H
#define RUINSOLVER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
    RS_OK = 0,
    RS_ERR_INVALID_PARAMS = 1,
    RS_ERR_OUT_OF_REGIME = 2,
    RS_ERR_DOMAIN = 3,
    RS_ERR_NO_BRACKET = 4,
    RS_ERR_NO_ROOT = 5,
    RS_ERR_SINGULAR = 6,
    RS_ERR_NO_CONVERGENCE = 7,
    RS_ERR_UNBOUNDED = 8,
    RS_ERR_SCHEME_MISMATCH = 9,
    RS_ERR_PARSE = 10,
    RS_ERR_IO = 11,
    RS_ERR_NULL_ARGUMENT = 12,
    RS_ERR_INTERNAL = 13
} rs_status;

/* Library version string, e.g. "0.1.0". */
const char* rs_version(void);

/* Static description of a status code. */
const char* rs_status_name(rs_status status);

/* Message of the most recent error on this thread (empty string if none). */
const char* rs_last_error(void);

void rs_string_free(char* s);

/* ----- model ----- */

typedef struct rs_market_params {
    double riskless_rate;    /* r, per year, > 0 */
    double risky_drift;      /* mu, per year, > r */
    double risky_volatility; /* sigma, per sqrt(year), > 0 */
    double hazard_rate;      /* lambda, per year, > 0 */
} rs_market_params;

typedef enum rs_consumption_family {
    RS_CONSUMPTION_AFFINE = 0, /* c(m) = a m + b */
    RS_CONSUMPTION_POWER = 1   /* c(m) = a m^b  */
} rs_consumption_family;

typedef struct rs_consumption_spec {
    rs_consumption_family family;
    double a;
    double b;
} rs_consumption_spec;

typedef struct rs_derived_constants {
    double delta;
    double gamma;
    double b1;
    double b2;
} rs_derived_constants;

typedef enum rs_regime {
    RS_REGIME_RUINED = 0,
    RS_REGIME_SAFE_LEVEL = 1,
    RS_REGIME_FIXED_MAX_BELOW_SAFE = 2,
    RS_REGIME_RATCHET_BLOCKED = 3,
    RS_REGIME_RATCHET_ACTIVE = 4
} rs_regime;

rs_status rs_derive_constants(const rs_market_params* params, rs_derived_constants* out);

rs_status rs_consumption_value(const rs_consumption_spec* consumption, double m, double* out);
rs_status rs_consumption_derivative(const rs_consumption_spec* consumption, double m, double* out);

rs_status rs_safe_level(const rs_market_params* params, const rs_consumption_spec* consumption,
                        double m, double* out);

rs_status rs_classify_regime(const rs_market_params* params,
                             const rs_consumption_spec* consumption, double wealth,
                             double max_wealth, rs_regime* out);

const char* rs_regime_name(rs_regime regime);

/* ----- section 3: fixed maximum ----- */

rs_status rs_fixed_max_psi(const rs_market_params* params,
                           const rs_consumption_spec* consumption, double wealth,
                           double max_wealth, double* out);

rs_status rs_fixed_max_pi(const rs_market_params* params,
                          const rs_consumption_spec* consumption, double wealth,
                          double max_wealth, double* out);

/* Geometric drift/volatility of the shortfall c(m)/r - W under the section 3
 * strategy. */
rs_status rs_shortfall_coefficients(const rs_market_params* params,
                                    const rs_consumption_spec* consumption, double max_wealth,
                                    double* drift, double* vol);

/* ----- section 4.1: blocked ratchet ----- */

typedef struct rs_blocked_solution rs_blocked_solution;

rs_status rs_blocked_solve(const rs_market_params* params,
                           const rs_consumption_spec* consumption, double max_wealth,
                           rs_blocked_solution** out);
void rs_blocked_free(rs_blocked_solution* solution);

/* y_m, y_0, d1, d2 of the dual free boundary. Null pointers are skipped. */
rs_status rs_blocked_boundary(const rs_blocked_solution* solution, double* y_m, double* y_0,
                              double* d1, double* d2);

rs_status rs_blocked_psi(const rs_blocked_solution* solution, double wealth, double* out);
rs_status rs_blocked_pi(const rs_blocked_solution* solution, double wealth, double* out);

/* Dual-side evaluation: value/derivatives of the concave dual at y. */
rs_status rs_blocked_dual_value(const rs_blocked_solution* solution, double y, double* out);
rs_status rs_blocked_dual_slope(const rs_blocked_solution* solution, double y, double* out);
rs_status rs_blocked_invert_dual(const rs_blocked_solution* solution, double wealth, double* out);

/* Theorem-4.2-style test with both sides reported:
 * holds != 0  iff  c(m) - m c'(m) <= lambda / y_0(m). */
rs_status rs_ratchet_condition(const rs_market_params* params,
                               const rs_consumption_spec* consumption, double max_wealth,
                               int* holds, double* lhs, double* rhs);

rs_status rs_m_star(const rs_market_params* params, const rs_consumption_spec* consumption,
                    double m0, double* m_star, int* safe_level_binding);

/* ----- section 4.3: active ratchet ----- */

typedef struct rs_moving_boundary rs_moving_boundary;

rs_status rs_active_solve(const rs_market_params* params,
                          const rs_consumption_spec* consumption, double m0,
                          rs_moving_boundary** out);
void rs_active_free(rs_moving_boundary* boundary);

rs_status rs_active_m_star(const rs_moving_boundary* boundary, double* m_star,
                           int* safe_level_binding);
rs_status rs_active_node_count(const rs_moving_boundary* boundary, int64_t* out);
rs_status rs_active_psi(const rs_moving_boundary* boundary, double wealth, double max_wealth,
                        double* out);
rs_status rs_active_pi(const rs_moving_boundary* boundary, double wealth, double max_wealth,
                       double* out);

/* Versioned JSON round trip for caching between runs. */
rs_status rs_active_to_json(const rs_moving_boundary* boundary, char** json);
rs_status rs_active_from_json(const char* json, rs_moving_boundary** out);

/* ----- Monte Carlo ----- */

typedef enum rs_sim_scheme {
    RS_SCHEME_EULER = 0,
    RS_SCHEME_EXACT_SHORTFALL = 1
} rs_sim_scheme;

typedef enum rs_strategy_kind {
    RS_STRATEGY_FIXED_MAX = 0,
    RS_STRATEGY_BLOCKED = 1,
    RS_STRATEGY_ACTIVE = 2,
    RS_STRATEGY_CONSTANT_AMOUNT = 3,
    RS_STRATEGY_CONSTANT_PROPORTION = 4
} rs_strategy_kind;

typedef struct rs_sim_config {
    double dt;           /* years; <= 0 for the default 1e-3 */
    int64_t n_paths;     /* <= 0 for the default 200000 */
    double t_max;        /* years; <= 0 for the default horizon */
    uint64_t seed;
    rs_sim_scheme scheme;
    int n_threads;       /* 0: hardware concurrency */
} rs_sim_config;

typedef struct rs_ruin_estimate {
    double point;
    double std_error;
    double truncation_bias_bound;
    int64_t n_paths;
    int64_t n_ruined;
    int64_t n_safe_absorbed;
    int64_t n_truncated;
    double max_excursion;
    double dt;
    double t_max;
    uint64_t seed;
    int scheme;
    int n_threads_used;
} rs_ruin_estimate;

rs_status rs_simulate(const rs_market_params* params, const rs_consumption_spec* consumption,
                      double wealth, double max_wealth, rs_strategy_kind strategy,
                      double strategy_param, const rs_sim_config* config,
                      rs_ruin_estimate* out);

/* ----- diagnostics ----- */

/* Runs the verification suite appropriate for the state's regime and returns
 * a JSON report bundle. all_pass is set to 1 only if every check passed.
 * perturb != 0 injects a 1% coefficient perturbation as a negative control
 * (reports must then fail). */
rs_status rs_verify(const rs_market_params* params, const rs_consumption_spec* consumption,
                    double wealth, double max_wealth, int perturb, char** json_report,
                    int* all_pass);

/* ----- scenario files ----- */

typedef struct rs_scenario rs_scenario;

rs_status rs_scenario_parse(const char* text, rs_scenario** out);
rs_status rs_scenario_load(const char* path, rs_scenario** out);
rs_status rs_scenario_to_text(const rs_scenario* scenario, char** text);
rs_status rs_scenario_save(const rs_scenario* scenario, const char* path);
void rs_scenario_free(rs_scenario* scenario);

rs_status rs_scenario_get(const rs_scenario* scenario, rs_market_params* market,
                          rs_consumption_spec* consumption, double* wealth,
                          double* max_wealth, rs_sim_config* sim, int* has_sim);

#ifdef __cplusplus
}
#endif

#endif /* RUINSOLVER_H */
