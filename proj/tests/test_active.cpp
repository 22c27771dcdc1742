#include <doctest.h>

#include <cmath>

#include "active.hpp"

using namespace ruin;

namespace {
const MarketParams kBase{0.05, 0.10, 0.20, 0.04};
const ConsumptionSpec kConcave = ConsumptionSpec::power(1.0, 0.5);   // safe-level binding
const ConsumptionSpec kAffineK = ConsumptionSpec::affine(0.04, 1.0); // condition binding

// cached boundaries (integration is the expensive part)
const MovingBoundary& concave_mb() {
    static const MovingBoundary mb = integrate_boundaries(kBase, kConcave, 100.0);
    return mb;
}
const MovingBoundary& affine_mb() {
    static const MovingBoundary mb = integrate_boundaries(kBase, kAffineK, 20.0);
    return mb;
}
} // namespace

TEST_CASE("solve_ym matches the 4.1 boundary at the anchor") {
    const MStarResult ms = m_star(kBase, kAffineK, 20.0);
    const DualBoundary b = solve_boundary(kBase, kAffineK, ms.anchor);
    const double ym = solve_ym_given_y0(kBase, kAffineK, ms.anchor, b.y_0);
    CHECK(ym == doctest::Approx(b.y_m).epsilon(1e-8));

    const DerivedConstants k = derive_constants(kBase);
    const TildeCoefficients ct = tilde_coefficients(
        k, kAffineK.value(ms.anchor) / kBase.riskless_rate, b.y_0);
    CHECK(ct.d1t == doctest::Approx(b.d1).epsilon(1e-9));
    CHECK(ct.d2t == doctest::Approx(b.d2).epsilon(1e-7));
    CHECK(constraint_residual(kBase, kAffineK, k, ms.anchor, b.y_0, ym, ct) < 1e-10);
}

TEST_CASE("solve_ym responds continuously to y0") {
    const MovingBoundary& mb = affine_mb();
    const double m = 0.5 * (mb.m0() + mb.anchor_m());
    const double y0 = mb.y0_at(m);
    const double base = solve_ym_given_y0(kBase, kAffineK, m, y0);
    const double pert = solve_ym_given_y0(kBase, kAffineK, m, y0 * 1.01);
    CHECK(std::abs(pert - base) <= 0.10 * base);
}

TEST_CASE("y0_derivative: flat consumption probe gives zero slope") {
    // c'(m) = 0 makes the right side of the slope relation vanish; probed via
    // a direct call with a flat affine derivative path is rejected, so use a
    // nearly-flat power exponent instead and compare against the scale.
    const MovingBoundary& mb = affine_mb();
    const double m = 0.5 * (mb.m0() + mb.anchor_m());
    const double y0 = mb.y0_at(m);
    const double ym = solve_ym_given_y0(kBase, kAffineK, m, y0);
    const double d = y0_derivative(kBase, kAffineK, m, y0, ym);
    CHECK(std::isfinite(d));

    // finite-difference cross-check of the integrated curve's slope
    const double h = (mb.anchor_m() - mb.m0()) / 64.0;
    const double fd = (mb.y0_at(m + h) - mb.y0_at(m - h)) / (2.0 * h);
    CHECK(d == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("integration anchors exactly on the 4.1 solution") {
    const MovingBoundary& mb = affine_mb();
    const DualBoundary b = solve_boundary(kBase, kAffineK, mb.anchor_m());
    const MovingBoundaryNode& last = mb.nodes().back();
    CHECK(last.y0 == doctest::Approx(b.y_0).epsilon(1e-12));
    CHECK(last.ym == doctest::Approx(b.y_m).epsilon(1e-12));
    CHECK(last.d1t == doctest::Approx(b.d1).epsilon(1e-12));
    CHECK(last.d2t == doctest::Approx(b.d2).epsilon(1e-12));
}

TEST_CASE("node count and per-node invariants") {
    const MovingBoundary& mb = affine_mb();
    CHECK(mb.nodes().size() >= 201);
    const DerivedConstants k = derive_constants(kBase);
    for (const MovingBoundaryNode& nd : mb.nodes()) {
        CHECK(nd.y0 > nd.ym);
        CHECK(nd.ym > 0.0);
        const double res = constraint_residual(kBase, kAffineK, k, nd.m, nd.y0, nd.ym,
                                               TildeCoefficients{nd.d1t, nd.d2t});
        CHECK(res < 1e-9);
    }
    // frozen against the independent integration of the same system
    CHECK(mb.y0_at(20.0) == doctest::Approx(0.052541468189875).epsilon(1e-7));
}

TEST_CASE("concave power case: frozen terminal data and y0 at m0") {
    const MovingBoundary& mb = concave_mb();
    CHECK(mb.m_star() == doctest::Approx(400.0).epsilon(1e-8));
    CHECK(mb.safe_level_binding());
    CHECK(mb.y0_at(100.0) == doctest::Approx(0.00917638040846).epsilon(1e-6));
}

TEST_CASE("value matching with the blocked solution at the terminal maximum") {
    for (const MovingBoundary* mb : {&affine_mb(), &concave_mb()}) {
        const double ma = mb->anchor_m();
        const DualBoundary b = solve_boundary(mb->params(), mb->consumption(), ma);
        const DualFunction blocked(mb->params(), b);
        for (int i = 1; i <= 20; ++i) {
            const double w = ma * i / 21.0;
            CHECK(mb->psi(w, ma) == doctest::Approx(blocked.psi(w)).epsilon(1e-6));
        }
    }
}

TEST_CASE("active value lies strictly below the blocked value inside the range") {
    const MovingBoundary& mb = concave_mb();
    const double m = 100.0;
    const DualBoundary b = solve_boundary(kBase, kConcave, m);
    const DualFunction blocked(kBase, b);
    for (int i = 1; i <= 20; ++i) {
        const double w = m * i / 21.0;
        CHECK(mb.psi(w, m) < blocked.psi(w));
    }
}

TEST_CASE("boundary rows and dual ODE hold at interpolated maxima") {
    const MovingBoundary& mb = affine_mb();
    const DerivedConstants k = derive_constants(kBase);
    const double r = kBase.riskless_rate;
    for (double frac : {0.1, 0.37, 0.5, 0.81}) {
        const double m = mb.m0() + frac * (mb.anchor_m() - mb.m0());
        const double y0 = mb.y0_at(m);
        const TildeCoefficients ct = mb.coefficients_at(m);
        const double c_over_r = kAffineK.value(m) / r;
        // value and slope rows at y0 hold by construction
        const double row1 = ct.d1t * std::pow(y0, k.b1) + ct.d2t * std::pow(y0, k.b2)
                            + c_over_r * y0;
        CHECK(row1 == doctest::Approx(1.0).epsilon(1e-10));
        const double row2 = ct.d1t * k.b1 * std::pow(y0, k.b1 - 1.0)
                            + ct.d2t * k.b2 * std::pow(y0, k.b2 - 1.0) + c_over_r;
        CHECK(std::abs(row2) <= 1e-10 * c_over_r);

        // the dual solves the ODE: power modes are exact roots, so the check
        // only exercises assembled coefficients
        const double ym = solve_ym_given_y0(kBase, kAffineK, m, y0);
        for (int j = 0; j <= 20; ++j) {
            const double y = ym * std::pow(y0 / ym, j / 20.0);
            const double f = ct.d1t * std::pow(y, k.b1) + ct.d2t * std::pow(y, k.b2)
                             + c_over_r * y;
            const double fp = ct.d1t * k.b1 * std::pow(y, k.b1 - 1.0)
                              + ct.d2t * k.b2 * std::pow(y, k.b2 - 1.0) + c_over_r;
            const double fpp = ct.d1t * k.b1 * (k.b1 - 1.0) * std::pow(y, k.b1 - 2.0)
                               + ct.d2t * k.b2 * (k.b2 - 1.0) * std::pow(y, k.b2 - 2.0);
            const double lam = kBase.hazard_rate;
            const double t1 = k.delta * y * y * fpp;
            const double t2 = -(r - lam) * y * fp;
            const double t3 = -lam * f;
            const double t4 = kAffineK.value(m) * y;
            const double scale = std::max({std::abs(t1), std::abs(t2), std::abs(t3), std::abs(t4)});
            CHECK(std::abs(t1 + t2 + t3 + t4) <= 1e-9 * scale);
        }
    }
}

TEST_CASE("psi boundary values, monotonicity and convexity in wealth") {
    const MovingBoundary& mb = affine_mb();
    const double m = 0.5 * (mb.m0() + mb.anchor_m());
    CHECK(mb.psi(0.0, m) == 1.0);
    double prev = mb.psi(0.0, m);
    double prev_d = -1e18;
    const int n = 60;
    for (int i = 1; i <= n; ++i) {
        const double w = m * i / n;
        const double cur = mb.psi(w, m);
        const double d = cur - prev;
        CHECK(d < 0.0);
        CHECK(d >= prev_d - 1e-12);
        prev = cur;
        prev_d = d;
    }
}

TEST_CASE("strategy stays positive through the ratchet and dies at m*") {
    const MovingBoundary& mb = affine_mb();
    // interior maxima: investing at w = m stays strictly positive
    for (double frac : {0.0, 0.5, 0.9}) {
        const double m = mb.m0() + frac * (mb.anchor_m() - mb.m0());
        CHECK(mb.pi(m, m) > 0.0);
        for (double wf : {0.2, 0.6, 0.95})
            CHECK(mb.pi(wf * m, m) > 0.0);
    }
    // terminal maximum: the amount vanishes as wealth reaches m*
    const double ma = mb.anchor_m();
    CHECK(mb.pi(ma, ma) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(mb.pi(ma * (1.0 - 1e-7), ma) < 0.05);
}

TEST_CASE("diagonal m-derivative vanishes along the ratchet") {
    const MovingBoundary& mb = affine_mb();
    const double h = 1e-4 * mb.m0();
    for (double frac : {0.25, 0.5, 0.75}) {
        const double m = mb.m0() + frac * (mb.anchor_m() - mb.m0());
        const double w = m - 3.0 * h;
        const double dm = (mb.psi(w, m + h) - mb.psi(w, m - h)) / (2.0 * h);
        CHECK(std::abs(dm) < 1e-3);
    }
}

TEST_CASE("psi is monotone in the maximum at fixed wealth") {
    // direction established at build time for these inputs: larger current
    // maximum means larger consumption, hence more ruin risk
    const MovingBoundary& mb = affine_mb();
    const double w = 10.0;
    double prev = mb.psi(w, mb.m0());
    for (double frac : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        const double m = mb.m0() + frac * (mb.anchor_m() - mb.m0());
        const double cur = mb.psi(w, m);
        CHECK(cur >= prev - 1e-12);
        prev = cur;
    }
}

TEST_CASE("degenerate interval: m0 at the stopping point") {
    // affine config just past the condition crossing is blocked, so nudge m0
    // to sit essentially at m*: the boundary collapses to a single 4.1 node
    const MStarResult ms = m_star(kBase, kAffineK, 20.0);
    const MovingBoundary mb = integrate_boundaries(kBase, kAffineK, ms.anchor);
    CHECK(mb.nodes().size() == 1);
    const DualBoundary b = solve_boundary(kBase, kAffineK, ms.anchor);
    CHECK(mb.psi(0.5 * ms.anchor, ms.anchor)
          == doctest::Approx(DualFunction(kBase, b).psi(0.5 * ms.anchor)).epsilon(1e-9));
}

TEST_CASE("JSON round trip preserves evaluations") {
    const MovingBoundary& mb = affine_mb();
    const std::string text = mb.to_json();
    const MovingBoundary back = MovingBoundary::from_json(text);
    CHECK(back.m_star() == mb.m_star());
    CHECK(back.nodes().size() == mb.nodes().size());
    const double m = 0.5 * (mb.m0() + mb.anchor_m());
    for (double wf : {0.0, 0.3, 0.8})
        CHECK(back.psi(wf * m, m) == mb.psi(wf * m, m));

    CHECK_THROWS_AS(MovingBoundary::from_json("{}"), Error);
    CHECK_THROWS_AS(MovingBoundary::from_json("not json"), Error);
}

TEST_CASE("integration requires an active starting point") {
    CHECK_THROWS_AS(integrate_boundaries(kBase, ConsumptionSpec::affine(0.06, 0.0), 100.0),
                    Error);
}
