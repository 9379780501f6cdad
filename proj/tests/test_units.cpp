#include <gfmnet/units.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace gfmnet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected a gfmnet::Error");
    return ErrorCode::InvalidArgument;
}

const PerUnitBase kPvBase{18.2e3, 400.0, 650.0, 2.0 * std::numbers::pi * 50.0};
const PerUnitBase kSysBase{50e3, 400.0, 650.0, 2.0 * std::numbers::pi * 50.0};

}  // namespace

TEST_CASE("sm_tf examples", "[units]") {
    const SgParams p;
    CHECK_THAT(p.omega_r_star(), WithinAbs(157.08, 5e-3));
    CHECK_THAT(p.inertia_J(), WithinAbs(1.206, 1e-3));
    const RationalTF si = sm_tf(p);
    CHECK(si.num() == Polynomial::constant(1.0));
    CHECK_THAT(si.den().coeff(1), WithinAbs(189.4, 0.05));
    CHECK(si.den().coeff(0) == 0.0);
    CHECK_THAT(sm_tf(p, UnitSystem::PerUnit).den().coeff(1), WithinRel(0.2834, 1e-12));

    SgParams stiff = p;
    stiff.H = 1e9;
    CHECK(std::abs(tf_eval(sm_tf(stiff), cplx(0.0, 1.0))) < 1e-9);

    SgParams bad = p;
    bad.P_max = 2 * bad.S_n;
    CHECK(code_of([&] { sm_tf(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("vsc_dclink_tf examples", "[units]") {
    VscParams v;
    v.v_dc_star = 740.0;
    CHECK_THAT(vsc_dclink_tf(v).den().coeff(1), WithinAbs(2.294, 1e-3));
    CHECK_THAT(vsc_dclink_tf(v, UnitSystem::SI, {}, 6.2e-3).den().coeff(1), WithinRel(9.3e-3 * 740.0, 1e-12));

    VscParams v2 = v;
    v2.C_dc *= 2;
    for (double w : {0.1, 1.0, 10.0})
        CHECK_THAT(std::abs(tf_eval(vsc_dclink_tf(v2), cplx(0, w))), WithinRel(0.5 * std::abs(tf_eval(vsc_dclink_tf(v), cplx(0, w))), 1e-14));

    const PerUnitBase b{50e3, 400.0, 800.0, 2.0 * std::numbers::pi * 50.0};
    CHECK_THAT(vsc_dclink_tf(v, UnitSystem::PerUnit, b).den().coeff(1), WithinRel(3.1e-3 * 740.0 * 800.0 / 50e3, 1e-14));

    VscParams out = v;
    out.v_dc_star = 900.0;
    CHECK(code_of([&] { vsc_dclink_tf(out); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("storage transfer functions are pure integrators", "[units]") {
    for (const auto& tf : {sm_tf(SgParams{}), sm_tf(SgParams{}, UnitSystem::PerUnit), vsc_dclink_tf(VscParams{})}) {
        const auto r = tf.den().roots();
        REQUIRE(r.size() == 1);
        CHECK(r[0] == cplx(0.0, 0.0));
        CHECK(tf.num().degree() == 0);
    }
}

TEST_CASE("pv_curve anchors", "[units]") {
    const PvParams p;
    const PvCurve c(p);
    CHECK_THAT(c.current(p.V_oc), WithinAbs(0.0, 1e-9));
    CHECK_THAT(c.current(0.0), WithinRel(p.I_sc, 0.01));
    CHECK(code_of([&] { (void)c.current(900.0); }) == ErrorCode::OutOfRange);
    CHECK(code_of([&] { (void)c.current(-1.0); }) == ErrorCode::OutOfRange);

    double vbest = 0.0, pbest = 0.0;
    for (double V = 0.0; V <= p.V_oc; V += 0.05)
        if (c.power(V) > pbest) {
            pbest = c.power(V);
            vbest = V;
        }
    CHECK_THAT(vbest, WithinAbs(650.0, 5.0));
    CHECK_THAT(pbest, WithinRel(18.2e3, 0.02));
    // fitted current at the MPP is a residual, not a constraint
    CHECK(std::abs(c.mpp_current_residual()) < 0.02);
}

TEST_CASE("pv_curve is decreasing with a unimodal power curve", "[units]") {
    const PvCurve c(PvParams{});
    double prev_i = c.current(0.0), prev_p = 0.0;
    bool rising = true;
    int turns = 0;
    for (double V = 1.0; V < 812.5; V += 1.0) {
        const double i = c.current(V), pw = c.power(V);
        CHECK(i < prev_i);
        if (rising && pw < prev_p) {
            rising = false;
            ++turns;
        } else if (!rising && pw > prev_p) {
            ++turns;
        }
        prev_i = i;
        prev_p = pw;
    }
    CHECK(turns == 1);
}

TEST_CASE("pv_linearize examples", "[units]") {
    const PvParams p;
    const double k = pv_linearize(p, kPvBase);
    CHECK(k > 0);
    CHECK_THAT(k, WithinRel(3.4581, 0.15));

    CHECK_THAT(convert_k_pv(3.4581, kPvBase, kSysBase), WithinRel(3.4581 * 18.2 / 50.0, 1e-14));
    CHECK_THAT(convert_k_pv(3.4581, kPvBase, kSysBase), WithinAbs(1.2588, 1e-4));
    CHECK_THAT(convert_k_pv(3.4581, kPvBase, kSysBase) / 0.025, WithinAbs(50.35, 5e-3));

    PvParams mpp = p;
    mpp.V_op = p.V_mpp;
    CHECK(code_of([&] { pv_linearize(mpp, kPvBase); }) == ErrorCode::NotCurtailed);
}

TEST_CASE("k_pv base conversion covariance", "[units]") {
    std::mt19937 rng(21);
    std::uniform_real_distribution<double> S(1e3, 1e6), V(100.0, 2000.0);
    for (int i = 0; i < 50; ++i) {
        const PerUnitBase a{S(rng), 400.0, V(rng), 314.0}, b{S(rng), 400.0, V(rng), 314.0};
        const double k = 2.7;
        CHECK_THAT(convert_k_pv(convert_k_pv(k, a, b), b, a), WithinRel(k, 1e-12));
        CHECK_THAT(convert_k_pv(k, a, b), WithinRel(k * (a.S_base / b.S_base) * (b.V_base_dc / a.V_base_dc), 1e-14));
        // linearizing directly in a base equals converting from another
        PvParams p;
        CHECK_THAT(pv_linearize(p, b), WithinRel(convert_k_pv(pv_linearize(p, a), a, b), 1e-12));
    }
}

TEST_CASE("turbine_governor_tf examples", "[units]") {
    const SgParams p;
    const RationalTF tg = turbine_governor_tf(p);
    CHECK_THAT(tf_eval(tg, 0.0), WithinRel(-43.05, 1e-12));
    CHECK_THAT(tg.high_frequency_gain(), WithinRel(-1.05, 1e-12));
    SgParams none = p;
    none.k_tg = 0.0;
    none.k_omega = 0.0;
    CHECK(turbine_governor_tf(none).is_zero());
}

TEST_CASE("gfm_ctrl_tf examples", "[units]") {
    const RationalTF droop = gfm_ctrl_tf({0.025, 0.0, 0.05});
    for (double w : {0.0, 1.0, 1e3}) CHECK_THAT(std::abs(tf_eval(droop, cplx(0, w))), WithinRel(0.025, 1e-14));

    const GfmCtrlParams c{0.025, 0.01, 0.01};
    CHECK(c.proper());
    CHECK_THAT(tf_eval(gfm_ctrl_tf(c), 0.0), WithinRel(0.025, 1e-14));
    CHECK_THAT(gfm_ctrl_tf(c).high_frequency_gain(), WithinRel(1.025, 1e-14));

    const GfmCtrlParams ideal{0.025, 0.01, 0.0};
    CHECK_FALSE(ideal.proper());
    CHECK_FALSE(gfm_ctrl_tf(ideal).is_proper());
    CHECK(tf_eval(gfm_ctrl_tf(ideal), cplx(0.0, 2.0)) == cplx(0.025, 0.02));

    // steady-state map: omega - omega* = k_p (v_dc - v_dc*)
    for (double dv : {-0.05, 0.01, 0.2}) CHECK_THAT(tf_eval(gfm_ctrl_tf(c), 0.0) * dv, WithinAbs(0.025 * dv, 1e-16));
    CHECK(code_of([] { gfm_ctrl_tf({0.0, 0.01, 0.01}); }) == ErrorCode::InvalidArgument);
}
