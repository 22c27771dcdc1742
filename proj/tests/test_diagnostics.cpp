#include <doctest.h>

#include <cmath>

#include "diagnostics.hpp"
#include "fixed_max.hpp"

using namespace ruin;

namespace {
const MarketParams kBase{0.05, 0.10, 0.20, 0.04};
const ConsumptionSpec kFlatAt4 = ConsumptionSpec::affine(0.04, 0.0);
const ConsumptionSpec kRho06 = ConsumptionSpec::affine(0.06, 0.0);
} // namespace

TEST_CASE("analytic residual passes for the closed form") {
    const FixedMaxSolution sol(kBase, kFlatAt4, 100.0);
    ValueSection sec;
    sec.value = [&](double w) { return sol.psi(w); };
    sec.dw = [&](double w) { return sol.psi_dw(w); };
    sec.dww = [&](double w) { return sol.psi_dww(w); };
    const CheckReport rep = hjb_residual(sec, kBase, sol.c_of_m(), Grid{0.0, sol.safe_w(), 100});
    CHECK(rep.pass);
    CHECK(rep.worst_residual < 1e-8);
}

TEST_CASE("analytic residual passes for the blocked value via dual derivatives") {
    const DualBoundary b = solve_boundary(kBase, kRho06, 100.0);
    const DualFunction dual(kBase, b);
    ValueSection sec;
    sec.value = [&](double w) { return dual.psi(w); };
    sec.dw = [&](double w) { return -dual.invert(w); };
    sec.dww = [&](double w) { return -1.0 / dual.second(dual.invert(w)); };
    const CheckReport rep = hjb_residual(sec, kBase, b.c_of_m, Grid{0.0, 100.0, 100});
    CHECK(rep.pass);
    CHECK(rep.worst_residual < 1e-8);
}

TEST_CASE("a perturbed coefficient fails the residual check") {
    DualBoundary b = solve_boundary(kBase, kRho06, 100.0);
    b.d1 *= 1.01;
    const DualFunction dual(kBase, b);
    ValueSection sec;
    sec.value = [&](double w) { return dual.psi(w); };
    sec.dw = [&](double w) { return -dual.invert(w); };
    sec.dww = [&](double w) { return -1.0 / dual.second(dual.invert(w)); };
    const CheckReport rep = hjb_residual(sec, kBase, b.c_of_m, Grid{0.0, 100.0, 100});
    CHECK(!rep.pass);
    CHECK(rep.worst_residual > 1e-4);
}

TEST_CASE("finite-difference fallback uses the looser threshold") {
    const FixedMaxSolution sol(kBase, kFlatAt4, 100.0);
    ValueSection sec;
    sec.value = [&](double w) { return sol.psi(w); };
    const CheckReport rep = hjb_residual(sec, kBase, sol.c_of_m(),
                                         Grid{1.0, sol.safe_w() - 1.0, 50});
    CHECK(rep.threshold == doctest::Approx(1e-3));
    CHECK(rep.pass);
}

TEST_CASE("verification conditions for the closed form") {
    auto h = [&](double w, double m) { return FixedMaxSolution(kBase, kFlatAt4, m).psi(w); };
    const CheckReport rep =
        verification_conditions(h, kBase, kFlatAt4, 100.0, Grid{0.0, 80.0, 40});
    CHECK(rep.pass);
    // the diagonal derivative row is strictly positive here
    for (const CheckRow& row : rep.rows)
        if (row.label == "diagonal_m_derivative") CHECK(row.value > 0.0);
}

TEST_CASE("verification conditions for the blocked value where ratcheting is suboptimal") {
    auto h = [&](double w, double m) {
        return DualFunction(kBase, solve_boundary(kBase, kRho06, m)).psi(w);
    };
    const CheckReport rep = verification_conditions(h, kBase, kRho06, 100.0, Grid{0.0, 100.0, 30});
    CHECK(rep.pass);
}

TEST_CASE("the blocked value fails the diagonal condition where ratcheting is optimal") {
    // concave power consumption at m = 100 sits in the active regime, so the
    // blocked solution cannot be the unrestricted minimum there
    const ConsumptionSpec concave = ConsumptionSpec::power(1.0, 0.5);
    auto h = [&](double w, double m) {
        return DualFunction(kBase, solve_boundary(kBase, concave, m)).psi(w);
    };
    const CheckReport rep =
        verification_conditions(h, kBase, concave, 100.0, Grid{0.0, 100.0, 30});
    CHECK(!rep.pass);
    bool diag_failed = false;
    for (const CheckRow& row : rep.rows)
        if (row.label == "diagonal_m_derivative") diag_failed = !row.ok && row.value < 0.0;
    CHECK(diag_failed);
}

TEST_CASE("comparison suite passes on three blocked configurations") {
    CHECK(section42_suite(kBase, kRho06, 100.0).pass);
    CHECK(section42_suite(kBase, ConsumptionSpec::affine(0.04, 1.0), 100.0).pass);
    CHECK(section42_suite(kBase, ConsumptionSpec::power(0.01, 1.5), 100.0).pass);
}

TEST_CASE("cross-check separation") {
    RuinEstimate est;
    est.point = 0.245;
    est.std_error = 1e-3;
    est.truncation_bias_bound = 2e-4;
    CHECK(mc_cross_check(0.2447, est).pass);
    CHECK(!mc_cross_check(0.245 + 10.0e-3, est).pass);   // ten standard errors off
    // k_sigma is honored
    CHECK(mc_cross_check(0.245 + 3.5e-3, est, 4.0).pass);
    CHECK(!mc_cross_check(0.245 + 3.5e-3, est, 3.0).pass);
}

TEST_CASE("reports serialize to JSON") {
    const CheckReport rep = section42_suite(kBase, kRho06, 50.0, 10);
    const std::string j = rep.to_json();
    CHECK(j.find("\"check\":\"section42_suite\"") != std::string::npos);
    CHECK(j.find("\"pass\":true") != std::string::npos);
}
