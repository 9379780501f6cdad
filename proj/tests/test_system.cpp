#include <gfmnet/response.hpp>
#include <gfmnet/system.hpp>

#include <catch_amalgamated.hpp>

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

SystemConfig islanded() { return scenario_islanded_pv(IslandedPvParams{}, catalog()); }
SystemConfig lvdc() { return scenario_lvdc_async(LvdcAsyncParams{}, catalog()); }
SystemConfig parallel() { return scenario_parallel_ac_dc(parallel_ac_dc_defaults(), catalog()); }

int count_structural(const StateSpace& ss) {
    int n = 0;
    for (const auto& p : poles(ss)) n += p.structural;
    return n;
}

double max_real_nonstructural(const StateSpace& ss) {
    double m = -INFINITY;
    for (const auto& p : poles(ss))
        if (!p.structural) m = std::max(m, p.value.real());
    return m;
}

/// Every steady-state value equals the DC gain of the closed loop, input by input.
void check_dual_path(const SystemConfig& cfg) {
    const ClosedLoopModel m = build(cfg);
    for (const auto& in : m.ss.input_names()) {
        const SteadyState st = steady_state(cfg, {{in, 1.0}});
        for (const auto& out : m.ss.output_names()) {
            INFO(cfg.name << ": " << in << " -> " << out);
            const double g = dc_gain(m.ss, in, out);
            CHECK_THAT(st.at(out), WithinAbs(g, 1e-8 * std::max(1.0, std::abs(g))));
        }
    }
}

}  // namespace

TEST_CASE("islanded scenario builds", "[system]") {
    const ClosedLoopModel m = build(islanded());
    CHECK(m.ss.num_states() == 9);
    CHECK(m.ss.input_names() == std::vector<std::string>{"P_L.vk1", "n.vsc"});
    CHECK(m.ss.output_names() ==
          std::vector<std::string>{"omega.sg", "omega.vsc", "v_dc.vsc", "P_ac.sg", "P_ac.vsc", "P_tg.sg", "P_pv.vsc"});
    CHECK(m.assumption1.verdict == A1Verdict::HoldsTrivially);
    CHECK(count_structural(m.ss) == 1);
    CHECK(max_real_nonstructural(m.ss) < 0.0);
    CHECK(m.warnings.empty());
    CHECK_FALSE(m.conversions.empty());
}

TEST_CASE("LVDC scenarios build", "[system]") {
    const ClosedLoopModel b = build(lvdc());
    CHECK(b.ss.input_names() == std::vector<std::string>{"P_L.vk1", "omega_pg", "n.vsc1", "n.vsc2"});
    CHECK(b.ss.has_output("P_dc.vsc1"));
    CHECK(b.ss.has_output("P_ac.grid"));
    CHECK(b.ss.has_output("omega.sg"));
    CHECK(max_real_nonstructural(b.ss) < 0.0);

    const ClosedLoopModel c = build(parallel());
    CHECK_FALSE(c.ss.has_output("omega.sg"));
    CHECK(c.ss.input_names() == std::vector<std::string>{"P_L.vk1", "omega_pg", "n.vsc1", "n.vsc2"});
    CHECK(max_real_nonstructural(c.ss) < 0.0);
    CHECK(c.assumption1.verdict != A1Verdict::Fails);

    LvdcAsyncParams with_sg = parallel_ac_dc_defaults();
    with_sg.include_sg = true;
    CHECK(build(scenario_parallel_ac_dc(with_sg, catalog())).ss.has_output("omega.sg"));
}

TEST_CASE("steady state agrees with the closed-loop DC gain", "[system]") {
    check_dual_path(islanded());
    check_dual_path(lvdc());
    check_dual_path(parallel());
    for (double kp : {0.01, 0.05}) {
        IslandedPvParams p;
        p.ctrl.k_p = kp;
        p.ctrl.k_d = 0.002;
        check_dual_path(scenario_islanded_pv(p, catalog()));
    }
}

TEST_CASE("islanded load sharing follows the droop ratios", "[system]") {
    const SystemConfig cfg = islanded();
    const SteadyState st = steady_state(cfg, 1.0);
    // hand values: governor droop k_tg P_max/S_base, PV droop k_pv/k_p in the system base
    const double droop_tg = 20.0 * 50e3 / 50e3;
    const double droop_pv = 3.4581 * (18.2e3 / 50e3) / 0.025;
    CHECK_THAT(1.0 / st.kappa_tg, WithinRel(droop_tg, 1e-12));
    CHECK_THAT(1.0 / st.kappa_pv, WithinRel(droop_pv, 1e-12));
    CHECK_THAT(st.delta_omega, WithinRel(-1.0 / (droop_tg + droop_pv), 1e-10));
    CHECK_THAT(st.at("P_pv.vsc"), WithinRel(droop_pv / (droop_pv + droop_tg), 1e-10));
    CHECK_THAT(st.at("P_tg.sg"), WithinRel(droop_tg / (droop_pv + droop_tg), 1e-10));
    CHECK_THAT(st.at("P_pv.vsc") + st.at("P_tg.sg"), WithinAbs(1.0, 1e-12));
    CHECK(st.at("omega.sg") == st.at("omega.vsc"));
}

TEST_CASE("infinite bus pins its area frequency", "[system]") {
    const SystemConfig cfg = lvdc();
    const SteadyState st = steady_state(cfg, {{"omega_pg", 0.01}});
    CHECK(st.at("omega.vsc2") == 0.01);
    CHECK_THAT(st.at("v_dc.vsc2"), WithinRel(0.01 / 0.025, 1e-12));

    const SteadyState load = steady_state(cfg, {{"P_L.vk1", 0.1}});
    CHECK(load.at("omega.vsc2") == 0.0);
    // the grid absorbs whatever the island does not cover
    CHECK_THAT(load.at("P_ac.grid") + load.at("P_ac.vsc2"), WithinAbs(0.0, 1e-12));
    CHECK(code_of([&] { steady_state(cfg, {{"P_L.nowhere", 1.0}}); }) == ErrorCode::ChannelNotFound);
}

TEST_CASE("nominal DC flow follows the setpoint order", "[system]") {
    const double r = 2 * 3.30 * 0.040;
    for (const auto& [v1, v2] : {std::pair{1.0037, 1.0}, std::pair{0.9975, 1.0}, std::pair{1.0, 1.0}}) {
        LvdcAsyncParams p = parallel_ac_dc_defaults();
        p.v_dc_star_1 = v1;
        p.v_dc_star_2 = v2;
        const auto flow = nominal_dc_power(scenario_parallel_ac_dc(p, catalog()));
        const double va = 800.0 * v1, vb = 800.0 * v2;
        CHECK_THAT(flow.at("vsc1"), WithinAbs(va * (va - vb) / r / 50e3, 1e-12));
        CHECK_THAT(flow.at("vsc2"), WithinAbs(vb * (vb - va) / r / 50e3, 1e-12));
        if (v1 > v2) CHECK(flow.at("vsc1") > 0.0);
        if (v1 < v2) CHECK(flow.at("vsc1") < 0.0);
        // losses are positive whenever power flows
        CHECK(flow.at("vsc1") + flow.at("vsc2") >= 0.0);
    }
}

TEST_CASE("added DC capacitance is additive", "[system]") {
    LvdcAsyncParams a;
    a.C_add = 3.1e-3;
    LvdcAsyncParams b = a;
    b.C_add = 0.0;
    b.vsc2.C_dc += 3.1e-3;
    const SystemConfig ca = scenario_lvdc_async(a, catalog()), cb = scenario_lvdc_async(b, catalog());
    CHECK_THAT(dc_node_capacitance_pu(ca, "vsc2"), WithinRel(6.2e-3 * 800.0 * 800.0 / 50e3, 1e-14));
    CHECK_THAT(dc_node_capacitance_pu(ca, "vsc2"), WithinRel(dc_node_capacitance_pu(cb, "vsc2"), 1e-14));
    const StateSpace sa = build(ca).ss, sb = build(cb).ss;
    for (double w : {0.1, 10.0, 1000.0}) {
        const cplx s(0.0, w);
        const CMatrix ta = transfer_at(sa, s), tb = transfer_at(sb, s);
        CHECK((ta - tb).norm() <= 1e-9 * ta.norm());
    }
}

TEST_CASE("configuration validation", "[system]") {
    {
        SystemConfig c = islanded();
        c.resources.push_back({ResourceKind::Pv, "sg", 1.0});
        CHECK(code_of([&] { build(c); }) == ErrorCode::ValidationError);
    }
    {
        SystemConfig c = islanded();
        c.resources.push_back({ResourceKind::Governor, "sg", 0.0});
        CHECK(code_of([&] { build(c); }) == ErrorCode::ValidationError);
    }
    {
        SystemConfig c = islanded();
        c.converters[0].params.v_dc_star = 700.0;
        CHECK(code_of([&] { build(c); }) == ErrorCode::ValidationError);
    }
    {
        SystemConfig c = islanded();
        c.converters.clear();
        CHECK(code_of([&] { build(c); }) == ErrorCode::ValidationError);
    }
    {
        SystemConfig c = islanded();
        c.converters[0].ctrl.tau_kd = 0.0;
        CHECK(code_of([&] { build(c); }) == ErrorCode::ImproperController);
        // the steady state does not need a realization
        CHECK_NOTHROW(steady_state(c, 1.0));
    }
    {
        SystemConfig c = islanded();
        c.resources.clear();
        CHECK(code_of([&] { steady_state(c, 1.0); }) == ErrorCode::NoDroop);
    }
    {
        SystemConfig c = islanded();
        CHECK(build(c, BuildOptions{false}).warnings.size() == 1);
    }
}

TEST_CASE("PV sensitivity from the fitted curve", "[system]") {
    IslandedPvParams p;
    p.k_pv_from_curve = true;
    const SystemConfig cfg = scenario_islanded_pv(p, catalog());
    const double k = cfg.resource(ResourceKind::Pv, "vsc")->k_pv;
    CHECK_THAT(k, WithinRel(convert_k_pv(pv_linearize(p.pv, p.k_pv_base), p.k_pv_base, p.base), 1e-14));
    CHECK_THAT(k, WithinRel(1.2588, 0.15));
    CHECK(max_real_nonstructural(build(cfg).ss) < 0.0);
}
