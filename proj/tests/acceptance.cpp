// Acceptance report: one PASS/FAIL line per criterion, tolerances and runtime limits pinned below.
// Exit status is 0 once the report is complete; --strict returns the number of failed criteria.

#include <gfmnet/gfmnet.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <random>

using namespace gfmnet;

namespace {

constexpr double kShareTol = 1e-3;
constexpr double kDualPathTol = 1e-9;
constexpr double kPublishedHalfUlp = 5e-3;  // 50.35, 25.17 are given to two decimals
constexpr double kConvertedKpvTol = 1e-4;   // published 1.2588 against 3.4581 * 18.2 / 50 = 1.258748
constexpr double kKronTol = 1e-9;
constexpr double kPinTol = 1e-9;
constexpr double kFinalValueTol = 1e-4;
constexpr double kPeakBelowHz = 1.0;

const double kFmin = kDefaultBodeOmegaMin / (2 * std::numbers::pi);
const double kFmax = kDefaultBodeOmegaMax / (2 * std::numbers::pi);

struct Outcome {
    bool pass = true;
    std::string detail;
    void expect(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [fail]");
    }
};

std::string f6(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f6(v[i]);
    return s + "]";
}

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

bool non_decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[i - 1]) return false;
    return true;
}

const CableCatalog& catalog() {
    static const CableCatalog c = CableCatalog::load(default_catalog_path());
    return c;
}

SystemConfig islanded(double k_p = 0.025, double k_d = 0.01, double tau = 0.01) {
    IslandedPvParams p;
    p.ctrl = {k_p, k_d, tau};
    return scenario_islanded_pv(p, catalog());
}

SystemConfig async_kd1(double kd1) {
    LvdcAsyncParams p;
    p.ctrl1.k_d = kd1;
    return scenario_lvdc_async(p, catalog());
}

const std::vector<double> kKd1{0.001, 0.01, 0.05, 0.1};

// ---- criteria ---------------------------------------------------------------

Outcome c1() {
    Outcome o;
    for (double kp : {0.025, 0.05}) {
        const SystemConfig cfg = islanded(kp);
        const SteadyState st = steady_state(cfg, 1.0);
        const double pv = 1.0 / st.kappa_pv, tg = 1.0 / st.kappa_tg;
        const double published = kp == 0.025 ? 50.35 : 25.17;
        o.expect(std::abs(pv - published) <= kPublishedHalfUlp, "k_p=" + f6(kp) + " kappa_pv^-1=" + f6(pv) + " vs " + f6(published));
        o.expect(std::abs(tg - 20.0) <= 1e-12, "kappa_tg^-1=" + f6(tg));
        if (kp == 0.025) {
            const double share = st.at("P_pv.vsc");
            o.expect(std::abs(share - 0.7157) <= kShareTol, "dP_pv/dP_L=" + f6(share));
            const ClosedLoopModel m = build(cfg);
            double diff = 0.0;
            for (const auto& out : m.ss.output_names()) diff = std::max(diff, std::abs(st.at(out) - dc_gain(m.ss, "P_L.vk1", out)));
            o.expect(diff <= kDualPathTol, "steady vs dc_gain max diff " + f6(diff));
            o.expect(std::abs(cfg.resource(ResourceKind::Pv, "vsc")->k_pv - 1.2588) <= kConvertedKpvTol, "k_pv system base " + f6(cfg.resource(ResourceKind::Pv, "vsc")->k_pv));
        }
    }
    return o;
}

Outcome c2() {
    Outcome o;
    for (const auto& [kp, kd] : {std::pair{0.025, 0.01}, std::pair{0.025, 0.005}, std::pair{0.05, 0.01}}) {
        const auto v = stability(build(islanded(kp, kd)));
        o.expect(v.stable, "(" + f6(kp) + "," + f6(kd) + ") abscissa " + f6(v.spectral_abscissa));
    }
    const double k_pv = islanded().resource(ResourceKind::Pv, "vsc")->k_pv;
    const double c = implied_cdc_pu(k_pv);
    bool exact = true;
    for (double kp : {0.01, 0.025, 0.05, 0.1})
        exact = exact && std::abs(bound_islanded_kd(kp, c, k_pv) - kIslandedKdSlope * kp) <= 1e-12 * kp;
    o.expect(exact, "k_d_max = 9.9040 k_p with implied C_dc_pu " + f6(c));
    return o;
}

Outcome c3() {
    Outcome o;
    IslandedPvParams p;
    const SystemConfig cfg = scenario_islanded_pv(p, catalog());
    const HybridGraph& g = cfg.graph;
    const AcEdge& es = g.ac_edges()[0];
    const AcEdge& ev = g.ac_edges()[1];
    const double V = p.V_ac, w0 = g.omega_star();
    const double kv = ev.k(), rs = es.rho(), rv = ev.rho();
    const int i_sg = g.ac_index("sg"), i_v = g.ac_index("vsc");
    double worst = 0.0;
    for (double w : logspace(1e-2, 1e4, 100)) {
        const cplx s(0.0, w);
        const cplx gs = s * s + 2.0 * rs * s + rs * rs + w0 * w0;
        const cplx gv = s * s + 2.0 * rv * s + rv * rv + kv * kv * w0 * w0;
        const cplx den = ev.l * gv + es.l * kv * gs;
        const cplx line = V * V * w0 * kv / den, lsm = ev.l * gv / den, lvsc = kv * es.l * gs / den;
        const auto kr = kron_reduce(assemble_ac_laplacian(g, s));
        worst = std::max({worst, std::abs(-kr.G_bar(i_sg, i_v) - line) / std::abs(line), std::abs(kr.G_L(i_sg, 0) - lsm) / std::abs(lsm),
                          std::abs(kr.G_L(i_v, 0) - lvsc) / std::abs(lvsc)});
    }
    o.expect(worst <= kKronTol, "max relative error " + f6(worst) + " over 100 frequencies");
    return o;
}

Outcome c4() {
    Outcome o;
    const Segment s = catalog().dc_segment("H07RN-F 2x6", 40.0);
    const DcEdge e{"vsc1", "vsc2", s.l, s.r};
    o.expect(dc_loss_tf(e, 0.0).is_zero(), "equal setpoints: loss tf is zero");
    bool anti = true;
    for (double w : logspace(1e-2, 1e4, 50)) {
        const cplx z(0.0, w);
        anti = anti && tf_eval(dc_edge_tf(e, 800.0), z) == -(tf_eval(dc_edge_tf(e.flipped(), 800.0), z) * -1.0);
    }
    o.expect(anti, "p_nk = -p_kn");

    std::vector<double> pac;
    for (double v1 : {1.0037, 0.9975}) {
        LvdcAsyncParams p = parallel_ac_dc_defaults();
        p.v_dc_star_1 = v1;
        const SystemConfig cfg = scenario_parallel_ac_dc(p, catalog());
        // no PV on the converter DC nodes: the AC injection of VSC 1 balances its DC-link export
        pac.push_back(-nominal_dc_power(cfg).at("vsc1"));
    }
    o.expect(pac[0] * pac[1] < 0, "P_ac,1 at (1.0037,1) -> (0.9975,1): " + list(pac));
    return o;
}

Outcome c5() {
    Outcome o;
    std::vector<double> hi;
    bool rolloff = true;
    for (double tau : {0.005, 0.01, 0.02, 0.1}) {
        const StateSpace ss = build(islanded(0.025, 0.01, tau)).ss;
        hi.push_back(magnitude_at(ss, "n.vsc", "omega.vsc", 1000.0));
        rolloff = rolloff && magnitude_at(ss, "n.vsc", "v_dc.vsc", 1000.0) < magnitude_at(ss, "n.vsc", "v_dc.vsc", 10.0);
    }
    o.expect(strictly_decreasing(hi), "|G_n,omega| at 1 kHz " + list(hi));
    o.expect(rolloff, "|G_n,vdc| 1 kHz below 10 Hz");
    return o;
}

Outcome c6() {
    Outcome o;
    std::vector<double> fa;
    for (double kd : {0.01, 0.005}) fa.push_back(resonance_peak(bode(build(islanded(0.025, kd)), "P_L.vk1", "omega.vsc", kFmin, kFmax)).f_hz);
    o.expect(fa[1] > fa[0], "(a) f_peak omega_vsc k_d 0.01 -> 0.005: " + list(fa) + " Hz");

    std::vector<double> f_vdc1, m_w2, m_w1, slow;
    double dominant_hz = 0.0;
    for (double kd : kKd1) {
        const ClosedLoopModel m = build(async_kd1(kd));
        f_vdc1.push_back(resonance_peak(bode(m, "P_L.vk1", "v_dc.vsc1", kFmin, kFmax)).f_hz);
        const Peak w2 = resonance_peak(bode(m, "P_L.vk1", "omega.vsc2", kFmin, kFmax));
        m_w2.push_back(w2.mag_db);
        m_w1.push_back(resonance_peak(bode(m, "P_L.vk1", "omega.vsc1", kFmin, kFmax)).mag_db);
        if (kd == 0.1) dominant_hz = w2.f_hz;
        // diagnostic only: slowest oscillatory closed-loop mode
        double f_slow = INFINITY;
        for (const cplx z : stability(m).poles)
            if (z.imag() > 1e-6) f_slow = std::min(f_slow, z.imag() / (2 * std::numbers::pi));
        slow.push_back(f_slow);
    }
    o.expect(strictly_decreasing(f_vdc1), "(b) f_peak v_dc,1 " + list(f_vdc1) + " Hz");
    o.expect(strictly_decreasing(m_w2), "(b) mag_peak omega_2 " + list(m_w2) + " dB");
    o.expect(non_decreasing(m_w1), "(b) resonance |omega_1| " + list(m_w1) + " dB");
    o.expect(dominant_hz < kPeakBelowHz, "(b) k_d,1=0.1 peak of omega_2 at " + f6(dominant_hz) + " Hz");
    o.detail += "; info: slowest oscillatory mode " + list(slow) + " Hz";
    return o;
}

Outcome c7() {
    Outcome o;
    const LvdcAsyncParams p;
    const ClosedLoopModel m = build(scenario_lvdc_async(p, catalog()));
    const double g0 = dc_gain(m.ss, "P_L.vk1", "omega.vsc2");
    o.expect(std::abs(g0) <= kPinTol, "P_L -> omega_2 " + f6(g0));
    const double g1 = dc_gain(m.ss, "omega_pg", "v_dc.vsc1"), g2 = dc_gain(m.ss, "omega_pg", "v_dc.vsc2");
    o.expect(std::abs(g1 - 1.0 / p.ctrl1.k_p) <= kPinTol * (1.0 / p.ctrl1.k_p), "omega_pg -> v_dc,1 " + f6(g1) + " vs " + f6(1.0 / p.ctrl1.k_p));
    o.expect(std::abs(g2 - 1.0 / p.ctrl2.k_p) <= kPinTol * (1.0 / p.ctrl2.k_p), "omega_pg -> v_dc,2 " + f6(g2) + " vs " + f6(1.0 / p.ctrl2.k_p));
    return o;
}

Outcome c8() {
    Outcome o;
    const SystemConfig cfg = islanded();
    const double dP = 2500.0 / cfg.base.S_base;
    const TimeSeries ts = step_response(build(cfg).ss, "P_L.vk1", 30.0, 1e-3, dP);
    const SteadyState st = steady_state(cfg, dP);
    double worst = 0.0;
    for (const auto& ch : {"omega.sg", "omega.vsc", "v_dc.vsc"}) worst = std::max(worst, std::abs(ts.channel(ch).back() - st.at(ch)));
    o.expect(worst <= kFinalValueTol, "(a) |y(30 s) - steady| max " + f6(worst) + " pu");

    std::vector<double> f;
    for (double kd : kKd1) {
        const TimeSeries tb = step_response(build(async_kd1(kd)).ss, "P_L.vk1", 30.0, 1e-3, dP);
        f.push_back(spectrum_peak(fft_magnitude(tb, "v_dc.vsc1")).f_hz);
    }
    o.expect(strictly_decreasing(f), "(b) step-spectrum peak v_dc,1 " + list(f) + " Hz");
    return o;
}

Outcome c9() {
    Outcome o;
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> L(0.2e-3, 3e-3), R(0.0, 0.5), U(0.0, 2000.0);
    bool rows = true, orient = true, seq = true;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<AcNode> nodes{{"c0", NodeKind::SM}, {"c1", NodeKind::SM}, {"l0", NodeKind::LoadAC}, {"l1", NodeKind::LoadAC}, {"l2", NodeKind::LoadAC}};
        std::vector<AcEdge> edges;
        for (int i = 1; i < 5; ++i) edges.push_back({nodes[i].name, nodes[rng() % i].name, L(rng), R(rng)});
        edges.push_back({"c0", "l2", L(rng), R(rng)});
        const HybridGraph g(nodes, {}, edges, {});
        std::vector<AcEdge> fl;
        for (const auto& e : edges) fl.push_back(rng() % 2 ? e.flipped() : e);
        const HybridGraph h(nodes, {}, fl, {});
        const cplx s(0.0, U(rng));
        const auto lap = assemble_ac_laplacian(g, s);
        rows = rows && lap.L.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12 * lap.L.norm();
        orient = orient && (lap.L - assemble_ac_laplacian(h, s).L).norm() == 0.0;
        CMatrix Ls = lap.L;
        for (int k = 0; k < 3; ++k) {
            const auto n = Ls.rows() - 1;
            Ls = (Ls.topLeftCorner(n, n) - Ls.topRightCorner(n, 1) * Ls.bottomLeftCorner(1, n) / Ls(n, n)).eval();
        }
        const CMatrix Gb = kron_reduce(lap).G_bar;
        seq = seq && (Ls - Gb).norm() <= 1e-10 * Gb.norm();
    }
    o.expect(rows, "Laplacian row sums");
    o.expect(orient, "orientation invariance");
    o.expect(seq, "sequential vs joint Kron");

    // ZOH against the analytic second-order step
    const double wn = 20.0, z = 0.3, wd = wn * std::sqrt(1 - z * z);
    const StateSpace so = tf_to_ss(RationalTF(Polynomial::constant(wn * wn), Polynomial({wn * wn, 2 * z * wn, 1.0})));
    const TimeSeries ts = step_response(so, "u", 2.0, 1e-3);
    double zoh_err = 0.0;
    for (std::size_t k = 0; k < ts.t.size(); ++k) {
        const double t = ts.t[k];
        const double y = 1 - std::exp(-z * wn * t) * (std::cos(wd * t) + z / std::sqrt(1 - z * z) * std::sin(wd * t));
        zoh_err = std::max(zoh_err, std::abs(ts.channels[0][k] - y));
    }
    o.expect(zoh_err <= 1e-10, "ZOH exactness " + f6(zoh_err));

    double fr_err = 0.0;
    std::uniform_real_distribution<double> a(0.5, 30.0), c(-2.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        const RationalTF tf(Polynomial({c(rng), c(rng), c(rng)}), Polynomial({a(rng) * a(rng), a(rng), 1.0}) * Polynomial::linear(1.0, a(rng)));
        const StateSpace ss = tf_to_ss(tf);
        for (double w : {0.1, 3.0, 100.0}) {
            const cplx s(0.0, w), ref = tf_eval(tf, s);
            fr_err = std::max(fr_err, std::abs(transfer_at(ss, s)(0, 0) - ref) / std::max(1.0, std::abs(ref)));
        }
    }
    o.expect(fr_err <= 1e-9, "tf vs ss frequency response " + f6(fr_err));
    return o;
}

struct Criterion {
    int id;
    double limit_s;
    Outcome (*fn)();
};

}  // namespace

int main(int argc, char** argv) {
    const bool strict = argc > 1 && std::string(argv[1]) == "--strict";
    const std::vector<Criterion> all{{1, 1.0, c1}, {2, 5.0, c2}, {3, 1.0, c3}, {4, 5.0, c4}, {5, 5.0, c5},
                                     {6, 30.0, c6}, {7, 1.0, c7}, {8, 30.0, c8}, {9, 60.0, c9}};
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.expect(dt < c.limit_s, "runtime " + f6(dt) + " s < " + f6(c.limit_s) + " s");
        failed += !o.pass;
        std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.detail << ")\n";
    }
    std::cout << (all.size() - failed) << "/" << all.size() << " criteria pass\n";
    return strict ? failed : 0;
}
