#pragma once

#include <cmath>

#include "errors.hpp"

namespace ruin {

// Bisection on a bracketing interval [lo, hi] with f(lo) and f(hi) of opposite
// sign (f(lo) side taken as "low"). Runs a fixed iteration budget and returns
// the midpoint; callers check residuals against their own contracts.
template <typename F>
double bisect(F&& f, double lo, double hi, int iterations = 200) {
    double flo = f(lo);
    for (int i = 0; i < iterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;  // interval at ulp resolution
        const double fm = f(mid);
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace ruin
