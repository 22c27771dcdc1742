#pragma once

#include <cstdint>

namespace ruin {

// splitmix64: seed expander (Steele, Lea, Flood).
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

// xoshiro256++ (Blackman, Vigna). One independent stream per simulated path,
// seeded deterministically from (seed, path index), which is what makes the
// estimates independent of the thread partition.
struct Xoshiro256pp {
    std::uint64_t s0, s1, s2, s3;

    void seed_stream(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        s0 = splitmix64(x);
        s1 = splitmix64(x);
        s2 = splitmix64(x);
        s3 = splitmix64(x);
    }

    std::uint64_t next() {
        const std::uint64_t out = rotl64(s0 + s3, 23) + s0;
        const std::uint64_t t = s1 << 17;
        s2 ^= s0;
        s3 ^= s1;
        s1 ^= s2;
        s0 ^= s3;
        s2 ^= t;
        s3 = rotl64(s3, 45);
        return out;
    }

    // Uniform on the open interval (0, 1): 53-bit mantissa, offset half-ulp.
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }
};

// Inverse normal CDF, Acklam's rational approximation (~1.15e-9 relative).
// Branch structure: a polynomial-ratio central region covering 95.15% of
// draws, log/sqrt tails outside. Distribution error is orders of magnitude
// below Monte Carlo resolution at the path counts used here.
namespace icdf_detail {
inline constexpr double a1 = -3.969683028665376e+01, a2 = 2.209460984245205e+02,
                        a3 = -2.759285104469687e+02, a4 = 1.383577518672690e+02,
                        a5 = -3.066479806614716e+01, a6 = 2.506628277459239e+00;
inline constexpr double b1 = -5.447609879822406e+01, b2 = 1.615858368580409e+02,
                        b3 = -1.556989798598866e+02, b4 = 6.680131188771972e+01,
                        b5 = -1.328068155288572e+01;
inline constexpr double c1 = -7.784894002430293e-03, c2 = -3.223964580411365e-01,
                        c3 = -2.400758277161838e+00, c4 = -2.549732539343734e+00,
                        c5 = 4.374664141464968e+00,  c6 = 2.938163982698783e+00;
inline constexpr double d1 = 7.784695709041462e-03, d2 = 3.224671290700398e-01,
                        d3 = 2.445134137142996e+00, d4 = 3.754408661907416e+00;
inline constexpr double p_low = 0.02425;
} // namespace icdf_detail

// Central-region value; valid for p in [p_low, 1-p_low], cheap and branch-free.
inline double normal_icdf_central(double p) {
    using namespace icdf_detail;
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a1 * r + a2) * r + a3) * r + a4) * r + a5) * r + a6) * q
         / (((((b1 * r + b2) * r + b3) * r + b4) * r + b5) * r + 1.0);
}

double normal_icdf_tail(double p);  // defined in sim_kernel.cpp (rare path)

inline double normal_icdf(double p) {
    using namespace icdf_detail;
    if (p < p_low || p > 1.0 - p_low) return normal_icdf_tail(p);
    return normal_icdf_central(p);
}

} // namespace ruin
