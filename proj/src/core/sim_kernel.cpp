// Hot path-stepping kernel. This translation unit is compiled with heavier
// optimization flags than the rest of the library (see src/CMakeLists.txt);
// everything here sticks to finite arithmetic so that is safe.

#include "sim_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "rng.hpp"

namespace ruin {

double normal_icdf_tail(double p) {
    using namespace icdf_detail;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6)
             / ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
    }
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c1 * q + c2) * q + c3) * q + c4) * q + c5) * q + c6)
          / ((((d1 * q + d2) * q + d3) * q + d4) * q + 1.0);
}

} // namespace ruin

namespace ruin::kernel {

namespace {

constexpr int W = 16;           // lanes per block
constexpr std::int64_t kWave = 4096;  // steps per wave before compaction

struct PathState {
    std::uint64_t s0, s1, s2, s3;
    double x;        // wealth (euler) or shortfall (exact scheme)
    double m;
    double c_m;      // cached c(m)
    double safe_w;   // cached c(m)/r
    int row;         // lower row index for moving tables
    double row_frac;
};

struct Block {
    alignas(64) std::uint64_t s0[W], s1[W], s2[W], s3[W];
    alignas(64) double x[W], m[W], c_m[W], safe_w[W];
    alignas(64) double u[W], z[W], pi[W], xn[W];
    alignas(64) int row[W];
    alignas(64) double row_frac[W];
    alignas(64) std::uint8_t alive[W];
    std::int64_t idx[W];  // absolute path ids, -1 for padding lanes
};

inline double consumption_of(const KernelConfig& cfg, double m) {
    if (cfg.cons_family == cons_affine) return cfg.cons_a * m + cfg.cons_b;
    return cfg.cons_a * std::pow(m, cfg.cons_b);
}

inline double row_lookup(const KernelConfig& cfg, int row, double w) {
    const double wmax = cfg.row_wmax[row];
    const int nw = cfg.n_w;
    double t = w / wmax * (nw - 1);
    if (t < 0.0) t = 0.0;
    if (t > nw - 1.000001) t = nw - 1.000001;
    const int j = static_cast<int>(t);
    const double f = t - j;
    const double* r = cfg.table + static_cast<std::size_t>(row) * nw;
    return r[j] + f * (r[j + 1] - r[j]);
}

inline void refresh_row(const KernelConfig& cfg, double m, int& row, double& frac) {
    if (cfg.strategy != strat_table_moving) { row = 0; frac = 0.0; return; }
    const int n = cfg.n_rows;
    if (m >= cfg.row_m[n - 1]) { row = n - 2 >= 0 ? n - 2 : 0; frac = 1.0; return; }
    if (m <= cfg.row_m[0]) { row = 0; frac = 0.0; return; }
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (cfg.row_m[mid] <= m) lo = mid; else hi = mid;
    }
    row = lo;
    frac = (m - cfg.row_m[lo]) / (cfg.row_m[hi] - cfg.row_m[lo]);
}

template <int STRAT>
inline void eval_strategy(const KernelConfig& cfg, Block& b) {
    if constexpr (STRAT == strat_fixed_max) {
        for (int i = 0; i < W; ++i) {
            const double gap = b.safe_w[i] - b.x[i];
            b.pi[i] = cfg.strat_param * (gap > 0.0 ? gap : 0.0);
        }
    } else if constexpr (STRAT == strat_table_fixed_m) {
        for (int i = 0; i < W; ++i)
            b.pi[i] = row_lookup(cfg, 0, b.x[i]);
    } else if constexpr (STRAT == strat_table_moving) {
        for (int i = 0; i < W; ++i) {
            const double lo = row_lookup(cfg, b.row[i], b.x[i]);
            const double hi = row_lookup(cfg, b.row[i] + 1, b.x[i]);
            b.pi[i] = lo + b.row_frac[i] * (hi - lo);
        }
    } else if constexpr (STRAT == strat_const_amount) {
        for (int i = 0; i < W; ++i) b.pi[i] = cfg.strat_param;
    } else {
        for (int i = 0; i < W; ++i) b.pi[i] = cfg.strat_param * b.x[i];
    }
}

// One wave of at most `budget` steps for a block. Returns outputs through the
// caller-owned absolute-indexed buffers; per-lane event handling happens in
// rare scalar paths so the main loops stay vector-friendly.
template <int STRAT, int SCHEME>
void step_wave(const KernelConfig& cfg, Block& b, std::int64_t step0, std::int64_t budget,
               double* contrib, std::uint8_t* outcome) {
    const double sdt = std::sqrt(cfg.dt);
    const double e_drift = (cfg.shortfall_drift - 0.5 * cfg.shortfall_vol * cfg.shortfall_vol) * cfg.dt;
    const double e_vol = cfg.shortfall_vol * sdt;
    const double barrier = consumption_of(cfg, cfg.m0) / cfg.r;  // exact scheme: ruin at Z = c/r

    for (std::int64_t s = 0; s < budget; ++s) {
        int n_alive = 0;
        for (int i = 0; i < W; ++i) n_alive += b.alive[i];
        if (n_alive == 0) return;

        // uniforms (dead lanes draw too; their streams are never used again)
        for (int i = 0; i < W; ++i) {
            const std::uint64_t out = rotl64(b.s0[i] + b.s3[i], 23) + b.s0[i];
            const std::uint64_t t = b.s1[i] << 17;
            b.s2[i] ^= b.s0[i];
            b.s3[i] ^= b.s1[i];
            b.s1[i] ^= b.s2[i];
            b.s0[i] ^= b.s3[i];
            b.s2[i] ^= t;
            b.s3[i] = rotl64(b.s3[i], 45);
            b.u[i] = static_cast<double>(out >> 11) * 0x1.0p-53 + 0x1.0p-54;
        }
        // normals: central region vectorizes, tails patched scalar
        int n_tail = 0;
        for (int i = 0; i < W; ++i) {
            b.z[i] = normal_icdf_central(b.u[i]);
            n_tail += (b.u[i] < icdf_detail::p_low) | (b.u[i] > 1.0 - icdf_detail::p_low);
        }
        if (n_tail) {
            for (int i = 0; i < W; ++i)
                if (b.u[i] < icdf_detail::p_low || b.u[i] > 1.0 - icdf_detail::p_low)
                    b.z[i] = normal_icdf_tail(b.u[i]);
        }

        if constexpr (SCHEME == scheme_exact_shortfall) {
            int n_event = 0;
            for (int i = 0; i < W; ++i) {
                b.xn[i] = b.x[i] * std::exp(e_drift + e_vol * b.z[i]);
                n_event += b.alive[i] & (b.xn[i] >= barrier);
            }
            if (n_event) {
                for (int i = 0; i < W; ++i) {
                    if (!b.alive[i] || b.xn[i] < barrier) continue;
                    const double f = (barrier - b.x[i]) / (b.xn[i] - b.x[i]);
                    const double tau = (static_cast<double>(step0 + s) + f) * cfg.dt;
                    contrib[b.idx[i]] = std::exp(-cfg.lambda * tau);
                    outcome[b.idx[i]] = out_ruined;
                    b.alive[i] = 0;
                }
            }
            for (int i = 0; i < W; ++i)
                if (b.alive[i]) b.x[i] = b.xn[i];
            continue;
        }

        eval_strategy<STRAT>(cfg, b);
        int n_event = 0;
        for (int i = 0; i < W; ++i) {
            const double drift = cfg.r * b.x[i] + cfg.premium * b.pi[i] - b.c_m[i];
            b.xn[i] = b.x[i] + drift * cfg.dt + cfg.sigma * b.pi[i] * sdt * b.z[i];
            n_event += b.alive[i] & ((b.xn[i] <= 0.0) | (b.xn[i] > b.m[i]) | (b.xn[i] >= b.safe_w[i]));
        }
        if (n_event) {
            for (int i = 0; i < W; ++i) {
                if (!b.alive[i]) continue;
                const double xn = b.xn[i];
                if (xn <= 0.0) {
                    const double f = b.x[i] / (b.x[i] - xn);
                    const double tau = (static_cast<double>(step0 + s) + f) * cfg.dt;
                    contrib[b.idx[i]] = std::exp(-cfg.lambda * tau);
                    outcome[b.idx[i]] = out_ruined;
                    b.alive[i] = 0;
                    continue;
                }
                if (xn > b.m[i]) {
                    if (!(xn < 1e300)) {  // runaway wealth: park as truncated
                        contrib[b.idx[i]] = 0.0;
                        outcome[b.idx[i]] = out_truncated;
                        b.alive[i] = 0;
                        continue;
                    }
                    b.m[i] = xn;
                    b.c_m[i] = consumption_of(cfg, xn);
                    b.safe_w[i] = b.c_m[i] / cfg.r;
                    refresh_row(cfg, xn, b.row[i], b.row_frac[i]);
                }
                if (xn >= b.safe_w[i]) {
                    contrib[b.idx[i]] = 0.0;
                    outcome[b.idx[i]] = out_safe;
                    b.alive[i] = 0;
                }
            }
        }
        for (int i = 0; i < W; ++i)
            if (b.alive[i]) b.x[i] = b.xn[i];
    }
}

using WaveFn = void (*)(const KernelConfig&, Block&, std::int64_t, std::int64_t,
                        double*, std::uint8_t*);

WaveFn select_wave(const KernelConfig& cfg) {
    if (cfg.scheme == scheme_exact_shortfall)
        return &step_wave<strat_fixed_max, scheme_exact_shortfall>;
    switch (cfg.strategy) {
        case strat_fixed_max: return &step_wave<strat_fixed_max, scheme_euler>;
        case strat_table_fixed_m: return &step_wave<strat_table_fixed_m, scheme_euler>;
        case strat_table_moving: return &step_wave<strat_table_moving, scheme_euler>;
        case strat_const_amount: return &step_wave<strat_const_amount, scheme_euler>;
        default: return &step_wave<strat_const_proportion, scheme_euler>;
    }
}

} // namespace

void run_paths(const KernelConfig& cfg, std::int64_t first, std::int64_t last,
               double* contrib, std::uint8_t* outcome, double* excursion) {
    const std::int64_t count = last - first;
    if (count <= 0) return;
    const WaveFn wave = select_wave(cfg);

    std::vector<PathState> live(static_cast<std::size_t>(count));
    const double c0 = consumption_of(cfg, cfg.m0);
    for (std::int64_t p = 0; p < count; ++p) {
        PathState& st = live[static_cast<std::size_t>(p)];
        Xoshiro256pp rng;
        rng.seed_stream(cfg.seed, static_cast<std::uint64_t>(first + p));
        st.s0 = rng.s0; st.s1 = rng.s1; st.s2 = rng.s2; st.s3 = rng.s3;
        st.x = (cfg.scheme == scheme_exact_shortfall) ? (c0 / cfg.r - cfg.w0) : cfg.w0;
        st.m = cfg.m0;
        st.c_m = c0;
        st.safe_w = c0 / cfg.r;
        refresh_row(cfg, cfg.m0, st.row, st.row_frac);
        contrib[first + p] = 0.0;
        outcome[first + p] = out_truncated;
        excursion[first + p] = 0.0;
    }
    std::vector<std::int64_t> live_idx(static_cast<std::size_t>(count));
    for (std::int64_t p = 0; p < count; ++p) live_idx[static_cast<std::size_t>(p)] = first + p;

    std::int64_t steps_done = 0;
    while (!live.empty() && steps_done < cfg.n_steps) {
        const std::int64_t budget = std::min<std::int64_t>(kWave, cfg.n_steps - steps_done);
        const std::int64_t n_live = static_cast<std::int64_t>(live.size());
        std::vector<PathState> next;
        std::vector<std::int64_t> next_idx;
        next.reserve(live.size());
        next_idx.reserve(live.size());

        for (std::int64_t base = 0; base < n_live; base += W) {
            Block b;
            const int lanes = static_cast<int>(std::min<std::int64_t>(W, n_live - base));
            for (int i = 0; i < W; ++i) {
                const PathState& st = live[static_cast<std::size_t>(base + std::min(i, lanes - 1))];
                b.s0[i] = st.s0; b.s1[i] = st.s1; b.s2[i] = st.s2; b.s3[i] = st.s3;
                b.x[i] = st.x; b.m[i] = st.m; b.c_m[i] = st.c_m; b.safe_w[i] = st.safe_w;
                b.row[i] = st.row; b.row_frac[i] = st.row_frac;
                b.alive[i] = i < lanes ? 1 : 0;
                b.idx[i] = i < lanes ? live_idx[static_cast<std::size_t>(base + i)] : first;
            }
            // padding lanes replicate the last real lane but are marked dead;
            // they write nowhere because event handling checks alive first.
            wave(cfg, b, steps_done, budget, contrib, outcome);
            for (int i = 0; i < lanes; ++i) {
                const std::int64_t abs_idx = b.idx[i];
                excursion[abs_idx] = std::max(excursion[abs_idx], b.m[i] - cfg.m0);
                if (b.alive[i]) {
                    PathState st;
                    st.s0 = b.s0[i]; st.s1 = b.s1[i]; st.s2 = b.s2[i]; st.s3 = b.s3[i];
                    st.x = b.x[i]; st.m = b.m[i]; st.c_m = b.c_m[i]; st.safe_w = b.safe_w[i];
                    st.row = b.row[i]; st.row_frac = b.row_frac[i];
                    next.push_back(st);
                    next_idx.push_back(abs_idx);
                }
            }
        }
        live.swap(next);
        live_idx.swap(next_idx);
        steps_done += budget;
    }
    // anything still alive is truncated; outputs were preset accordingly
}

} // namespace ruin::kernel
