#include <gfmnet/analysis.hpp>

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

const CableCatalog& catalog() {
    static const CableCatalog c = CableCatalog::load(std::string(GFMNET_DATA_DIR) + "/data/cable_catalog.json");
    return c;
}

StateSpace second_order(double wn, double zeta) {
    return tf_to_ss(RationalTF(Polynomial::constant(wn * wn), Polynomial({wn * wn, 2 * zeta * wn, 1.0})));
}

SystemConfig lvdc_with(double kd1) {
    LvdcAsyncParams p;
    p.ctrl1.k_d = kd1;
    return scenario_lvdc_async(p, catalog());
}

}  // namespace

TEST_CASE("bode of a static gain is flat", "[analysis]") {
    const BodeTable t = bode(static_gain(2.0, "u", "y"), "u", "y", 0.1, 100.0, 50);
    REQUIRE(t.rows.size() == 50);
    CHECK_THAT(t.rows.front().f_hz, WithinRel(0.1, 1e-12));
    CHECK_THAT(t.rows.back().f_hz, WithinRel(100.0, 1e-12));
    for (const auto& r : t.rows) {
        CHECK_THAT(r.mag_db, WithinAbs(20.0 * std::log10(2.0), 1e-12));
        CHECK(r.phase_deg == 0.0);
    }
    const BodeTable d = bode(static_gain(1.0, "u", "y"), "u", "y");
    CHECK(d.rows.size() == kDefaultBodePoints);
    CHECK_THAT(d.rows.front().f_hz * 2 * std::numbers::pi, WithinRel(kDefaultBodeOmegaMin, 1e-12));
    CHECK(code_of([] { bode(static_gain(1.0, "u", "y"), "u", "z"); }) == ErrorCode::ChannelNotFound);
}

TEST_CASE("bode phase is unwrapped", "[analysis]") {
    // fourth-order lag has phase going to -360 deg
    const RationalTF lag = RationalTF::lag(0.01);
    const StateSpace ss = tf_to_ss(lag * lag * lag * lag);
    const BodeTable t = bode(ss, "u", "y", 0.1, 1e4, 300);
    for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK(std::abs(t.rows[k].phase_deg - t.rows[k - 1].phase_deg) < 90.0);
    CHECK(t.rows.back().phase_deg < -300.0);
    CHECK_THAT(magnitude_at(ss, "u", "y", 100.0 / (2 * std::numbers::pi)), WithinRel(0.25, 1e-12));
}

TEST_CASE("resonance peak of a second-order system", "[analysis]") {
    for (double zeta : {0.05, 0.1, 0.3}) {
        const double wn = 2 * std::numbers::pi * 5.0;
        const BodeTable t = bode(second_order(wn, zeta), "u", "y", 0.1, 100.0, 400);
        const Peak p = resonance_peak(t);
        const double f_ref = wn * std::sqrt(1 - 2 * zeta * zeta) / (2 * std::numbers::pi);
        const double m_ref = to_db(1.0 / (2 * zeta * std::sqrt(1 - zeta * zeta)));
        CHECK_THAT(p.f_hz, WithinRel(f_ref, 2e-3));
        CHECK_THAT(p.mag_db, WithinAbs(m_ref, 0.05));
    }
    const BodeTable lag = bode(tf_to_ss(RationalTF::lag(0.1)), "u", "y", 0.1, 100.0, 100);
    CHECK(code_of([&] { resonance_peak(lag); }) == ErrorCode::NoInteriorPeak);
}

TEST_CASE("stability verdicts", "[analysis]") {
    const auto dbl = tf_to_ss(RationalTF(Polynomial::constant(1.0), Polynomial({0.0, 0.0, 1.0})));
    CHECK_FALSE(stability(dbl).stable);

    const auto v = stability(second_order(10.0, 0.2));
    CHECK(v.stable);
    CHECK_THAT(v.dominant_damping, WithinRel(0.2, 1e-10));
    CHECK_THAT(v.spectral_abscissa, WithinRel(-2.0, 1e-10));

    const auto isl = stability(build(scenario_islanded_pv(IslandedPvParams{}, catalog())));
    CHECK(isl.stable);
    CHECK(isl.structural_count == 1);

    CHECK(stability(build(lvdc_with(0.1))).stable);
}

TEST_CASE("stability is invariant under similarity transforms", "[analysis]") {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    const StateSpace ss = build(scenario_islanded_pv(IslandedPvParams{}, catalog())).ss;
    const auto ref = stability(ss);
    for (int trial = 0; trial < 3; ++trial) {
        Matrix T(ss.num_states(), ss.num_states());
        for (Eigen::Index i = 0; i < T.size(); ++i) T.data()[i] = nd(rng);
        T += 3.0 * Matrix::Identity(T.rows(), T.cols());
        const Matrix Ti = T.inverse();
        const StateSpace sim(Ti * ss.A() * T, Ti * ss.B(), ss.C() * T, ss.D(), ss.input_names(), ss.output_names());
        const auto v = stability(sim);
        CHECK(v.stable == ref.stable);
        CHECK(v.structural_count == ref.structural_count);
        CHECK_THAT(v.spectral_abscissa, WithinRel(ref.spectral_abscissa, 1e-6));
    }
}

TEST_CASE("islanded derivative-gain bound", "[analysis]") {
    const double k_pv = 3.4581 * 18.2 / 50.0;
    CHECK_THAT(bound_islanded_kd(0.025, implied_cdc_pu(k_pv), k_pv), WithinRel(0.2476, 1e-12));
    for (double kp : {0.01, 0.025, 0.1})
        CHECK_THAT(bound_islanded_kd(kp, implied_cdc_pu(k_pv), k_pv), WithinRel(kIslandedKdSlope * kp, 1e-12));
    CHECK_THAT(bound_islanded_kd(0.05, 0.2, 1.0), WithinRel(2.0 * bound_islanded_kd(0.025, 0.2, 1.0), 1e-14));
    CHECK(std::isinf(bound_islanded_kd(0.025, 0.1, 0.0)));
    CHECK(code_of([] { bound_islanded_kd(0.0, 0.1, 1.0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("LVDC ratio bound checks", "[analysis]") {
    const RatioBounds b;
    CHECK_THAT(b.effective_1(), WithinRel(0.256, 1e-12));
    CHECK_THAT(b.effective_2(), WithinRel(0.5142, 1e-12));

    const auto ok = check_ratio_bounds_async(0.025, 0.001, 0.025, 0.001);
    CHECK(ok.pass_1);
    CHECK(ok.pass_2);
    CHECK_FALSE(ok.note.empty());

    const auto edge = check_ratio_bounds_async(0.025, 0.0064, 0.025, 0.0128);
    CHECK_FALSE(edge.pass_1);
    CHECK(edge.pass_2);
    CHECK_FALSE(check_ratio_bounds_async(0.025, 0.001, 0.025, 0.0129).pass_2);
    CHECK_FALSE(check_ratio_bounds_async(0.025, 0.1, 0.025, 0.001).pass_1);
    CHECK(code_of([] { check_ratio_bounds_async(0.0, 0.1, 0.025, 0.001); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sweeps are deterministic and match direct evaluation", "[analysis]") {
    const SweepBuilder builder = [](const std::map<std::string, double>& v) {
        IslandedPvParams p;
        p.ctrl.k_p = v.at("k_p");
        p.ctrl.k_d = v.at("k_d");
        return scenario_islanded_pv(p, catalog());
    };
    const std::vector<SweepAxis> axes{{"k_p", {0.01, 0.025}}, {"k_d", {0.0, 0.01, 0.05}}};
    const std::vector<SweepChannel> ch{{"P_L.vk1", "omega.sg"}};
    SweepOptions seq;
    seq.threads = 1;
    seq.points = 120;
    SweepOptions par = seq;
    par.threads = 4;
    const SweepResult a = sweep(builder, axes, ch, seq), b = sweep(builder, axes, ch, par);
    REQUIRE(a.entries.size() == 6);
    CHECK(a.entries[1].point == std::vector<double>{0.01, 0.01});
    CHECK(a.entries[3].point == std::vector<double>{0.025, 0.0});
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto &x = a.entries[i], &y = b.entries[i];
        CHECK(x.ok);
        CHECK(x.point == y.point);
        CHECK(x.stable == y.stable);
        CHECK(x.dominant_damping == y.dominant_damping);
        REQUIRE(x.peaks.size() == 1);
        CHECK(x.peaks[0].has_value() == y.peaks[0].has_value());
        if (x.peaks[0] && y.peaks[0]) {
            CHECK(x.peaks[0]->f_hz == y.peaks[0]->f_hz);
            CHECK(x.peaks[0]->mag_db == y.peaks[0]->mag_db);
        }
    }

    // single point equals the direct computation
    const SweepResult one = sweep(builder, {{"k_p", {0.025}}, {"k_d", {0.01}}}, ch, seq);
    const ClosedLoopModel m = build(builder({{"k_p", 0.025}, {"k_d", 0.01}}));
    const Peak direct = resonance_peak(bode(m, "P_L.vk1", "omega.sg", seq.f_min, seq.f_max, seq.points));
    REQUIRE(one.entries[0].peaks[0]);
    CHECK(one.entries[0].peaks[0]->f_hz == direct.f_hz);
    CHECK(one.entries[0].dominant_damping == stability(m).dominant_damping);
}

TEST_CASE("sweep records per-point failures", "[analysis]") {
    const SweepBuilder builder = [](const std::map<std::string, double>& v) {
        IslandedPvParams p;
        p.ctrl.tau_kd = v.at("tau");
        return scenario_islanded_pv(p, catalog());
    };
    SweepOptions o;
    o.points = 60;
    const SweepResult r = sweep(builder, {{"tau", {0.0, 0.01}}}, {{"P_L.vk1", "omega.sg"}}, o);
    CHECK_FALSE(r.entries[0].ok);
    CHECK(r.entries[0].error.find("ImproperController") != std::string::npos);
    CHECK(r.entries[1].ok);
    CHECK(code_of([&] { sweep(builder, {}, {}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { sweep(builder, {{"tau", {}}}, {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("spectrum peak", "[analysis]") {
    const double dt = 1e-3;
    std::vector<double> x(4000);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.3 * std::sin(2 * std::numbers::pi * 12.5 * k * dt) + 0.1;
    const Peak p = spectrum_peak(fft_magnitude(x, dt));
    CHECK_THAT(p.f_hz, WithinAbs(12.5, 0.25));
    CHECK_THAT(p.mag_db, WithinAbs(to_db(0.3), 0.1));
    CHECK(code_of([&] { spectrum_peak(fft_magnitude(x, dt), 1e6); }) == ErrorCode::NoInteriorPeak);
}
