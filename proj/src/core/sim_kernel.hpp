#pragma once

// Internal bridge between the simulator front end and the hot path-stepping
// kernel (compiled in its own translation unit with heavier optimization).

#include <cstdint>

namespace ruin::kernel {

enum : int { scheme_euler = 0, scheme_exact_shortfall = 1 };
enum : int {
    strat_fixed_max = 0,
    strat_table_fixed_m = 1,   // single pi(w) row, maximum pinned to the initial m
    strat_table_moving = 2,    // rows per m-level, bilinear in (m, w)
    strat_const_amount = 3,
    strat_const_proportion = 4,
};
enum : int { cons_affine = 0, cons_power = 1 };
enum : int { out_ruined = 0, out_safe = 1, out_truncated = 2 };

struct KernelConfig {
    double r = 0.0;
    double premium = 0.0;       // mu - r
    double sigma = 0.0;
    double lambda = 0.0;
    double dt = 0.0;
    std::int64_t n_steps = 0;
    std::uint64_t seed = 0;

    int scheme = scheme_euler;
    double w0 = 0.0;
    double m0 = 0.0;

    int cons_family = cons_affine;
    double cons_a = 0.0;
    double cons_b = 0.0;

    int strategy = strat_fixed_max;
    double strat_param = 0.0;    // slope for fixed_max, amount, or proportion

    // strategy tables (borrowed storage, row-major [n_rows][n_w])
    const double* table = nullptr;
    const double* row_m = nullptr;  // m-level per row, ascending, size n_rows
    int n_rows = 0;
    int n_w = 0;
    double w_grid_max = 0.0;     // each row spans w in [0, w_grid_max(row)]... uniform per row via row_wmax
    const double* row_wmax = nullptr;  // per-row wealth span, size n_rows

    // exact shortfall scheme coefficients
    double shortfall_drift = 0.0;
    double shortfall_vol = 0.0;
};

// Simulates paths [first, last); writes per-path contribution, outcome code
// and (W - m0)+ maxima into caller-owned buffers indexed by absolute path id.
// Deterministic in (seed, path id) only.
void run_paths(const KernelConfig& cfg, std::int64_t first, std::int64_t last,
               double* contrib, std::uint8_t* outcome, double* excursion);

} // namespace ruin::kernel
