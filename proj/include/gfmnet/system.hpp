#pragma once

#include <gfmnet/network.hpp>
#include <gfmnet/response.hpp>
#include <gfmnet/units.hpp>

#include <limits>
#include <optional>

namespace gfmnet {

// ============================================================================
// Configuration
// ============================================================================

struct SmUnit {
    std::string node;
    SgParams params;
    /// Include the k_omega damping term in the governor response.
    bool governor_speed_damping = false;
};

struct VscUnit {
    std::string node;
    VscParams params;
    double C_add = 0.0;  ///< F, extra capacitance on the converter's DC node
    GfmCtrlParams ctrl;
};

enum class ResourceKind { Governor, Pv };

/// A resource attached to a conversion unit (one row of I_g).
struct Resource {
    ResourceKind kind = ResourceKind::Governor;
    std::string unit;   ///< SM node for governors, VSC node for PV
    double k_pv = 0.0;  ///< system base, PV only
};

struct SystemConfig {
    std::string name;
    HybridGraph graph;
    PerUnitBase base;
    std::vector<SmUnit> machines;
    std::vector<VscUnit> converters;
    std::vector<Resource> resources;

    /// SM and VSC AC nodes, in AC node order.
    [[nodiscard]] std::vector<std::string> conversion_units() const {
        std::vector<std::string> out;
        for (const auto& n : graph.ac_nodes())
            if (n.kind == NodeKind::SM || n.kind == NodeKind::VSC) out.push_back(n.name);
        return out;
    }

    [[nodiscard]] const SmUnit* machine(const std::string& node) const {
        for (const auto& m : machines)
            if (m.node == node) return &m;
        return nullptr;
    }
    [[nodiscard]] const VscUnit* converter(const std::string& node) const {
        for (const auto& c : converters)
            if (c.node == node) return &c;
        return nullptr;
    }
    [[nodiscard]] const Resource* resource(ResourceKind k, const std::string& unit) const {
        for (const auto& r : resources)
            if (r.kind == k && r.unit == unit) return &r;
        return nullptr;
    }

    /// Resource-to-unit interconnection: I_g(j, i) = 1 if resource j feeds conversion unit i.
    [[nodiscard]] Matrix I_g() const {
        const auto units = conversion_units();
        Matrix M = Matrix::Zero(resources.size(), units.size());
        for (std::size_t j = 0; j < resources.size(); ++j)
            for (std::size_t i = 0; i < units.size(); ++i)
                if (resources[j].unit == units[i]) M(j, i) = 1.0;
        return M;
    }

    /// AC conversion unit to DC node: I_dc(i, j) = 1 if unit i is a VSC on DC node j.
    [[nodiscard]] Matrix I_dc() const {
        const auto units = conversion_units();
        Matrix M = Matrix::Zero(units.size(), graph.dc_nodes().size());
        for (std::size_t i = 0; i < units.size(); ++i)
            if (graph.has_dc(units[i])) M(i, graph.dc_index(units[i])) = 1.0;
        return M;
    }

    void validate() const {
        const auto bad = [](const std::string& m) { fail(ErrorCode::ValidationError, m); };
        base.validate();
        for (const auto& n : graph.ac_nodes()) {
            const int nm = static_cast<int>(std::count_if(machines.begin(), machines.end(), [&](const SmUnit& u) { return u.node == n.name; }));
            const int nc = static_cast<int>(std::count_if(converters.begin(), converters.end(), [&](const VscUnit& u) { return u.node == n.name; }));
            if (n.kind == NodeKind::SM && nm != 1) bad("SM node '" + n.name + "' needs exactly one machine");
            if (n.kind == NodeKind::VSC && nc != 1) bad("VSC node '" + n.name + "' needs exactly one controller");
            if (n.kind != NodeKind::SM && nm) bad("machine assigned to non-SM node '" + n.name + "'");
            if (n.kind != NodeKind::VSC && nc) bad("converter assigned to non-VSC node '" + n.name + "'");
        }
        for (const auto& m : machines) {
            if (!graph.has_ac(m.node)) bad("machine at unknown node '" + m.node + "'");
            m.params.validate();
        }
        for (const auto& c : converters) {
            if (!graph.has_ac(c.node)) bad("converter at unknown node '" + c.node + "'");
            c.params.validate();
            c.ctrl.validate();
            if (c.C_add < 0) bad("C_add must be nonnegative at '" + c.node + "'");
            const double vs = graph.dc_node(c.node).v_star;
            if (std::abs(c.params.v_dc_star - vs) > 1e-9 * vs) bad("converter '" + c.node + "' v_dc_star differs from the DC node setpoint");
            if (std::abs(c.ctrl.v_dc_star * base.V_base_dc - vs) > 1e-9 * vs) bad("controller '" + c.node + "' v_dc_star (p.u.) inconsistent with V_base_dc");
        }
        for (const auto& n : graph.dc_nodes())
            if (n.kind == NodeKind::DcInterior && !(n.capacitance > 0)) bad("DcInterior node '" + n.name + "' needs shunt capacitance");
        std::set<std::pair<int, std::string>> seen;
        for (const auto& r : resources) {
            if (!seen.insert({static_cast<int>(r.kind), r.unit}).second) bad("duplicate resource at '" + r.unit + "'");
            if (r.kind == ResourceKind::Governor && !machine(r.unit)) bad("governor attached to non-SM unit '" + r.unit + "'");
            if (r.kind == ResourceKind::Pv && !converter(r.unit)) bad("PV attached to non-VSC unit '" + r.unit + "'");
            if (r.kind == ResourceKind::Pv && !(r.k_pv >= 0)) bad("PV k_pv must be nonnegative");
        }
    }
};

// ============================================================================
// Unit models in the system base
// ============================================================================

/// Governor droop with its table-base power converted to the system base.
inline RationalTF system_governor_tf(const SmUnit& m, double S_base) {
    const auto& p = m.params;
    return governor_tf({p.k_tg, m.governor_speed_damping ? p.k_omega : 0.0, p.T1, p.T2, p.P_max / S_base});
}

/// DC node capacitance in p.u.: C v* V_b / S for the summed capacitance at the node.
inline double dc_node_capacitance_pu(const SystemConfig& c, const std::string& dc_node) {
    const auto& n = c.graph.dc_node(dc_node);
    double C = n.capacitance;
    for (const auto& v : c.converters)
        if (v.node == dc_node) C += v.params.C_dc + v.C_add;
    return C * n.v_star * c.base.V_base_dc / c.base.S_base;
}

inline std::vector<std::string> infinite_buses(const HybridGraph& g) {
    std::vector<std::string> out;
    for (const auto& n : g.ac_nodes())
        if (n.kind == NodeKind::InfiniteBus) out.push_back(n.name);
    return out;
}

/// Exogenous frequency channel of an infinite bus.
inline std::string omega_pg_channel(const HybridGraph& g, const std::string& ib) {
    return infinite_buses(g).size() == 1 ? std::string("omega_pg") : "omega_pg." + ib;
}

// ============================================================================
// Closed loop
// ============================================================================

struct ClosedLoopModel {
    StateSpace ss;
    Assumption1Result assumption1;
    std::vector<std::string> warnings;
    std::vector<std::string> conversions;  ///< per-unit conversion log
};

struct BuildOptions {
    bool check_assumption1 = true;
};

inline ClosedLoopModel build(const SystemConfig& cfg, const BuildOptions& opt = {}) {
    cfg.validate();
    const auto& g = cfg.graph;
    const double S = cfg.base.S_base, Vb = cfg.base.V_base_dc, wstar = g.omega_star();

    ClosedLoopModel model;
    if (opt.check_assumption1) {
        model.assumption1 = check_assumption1(g);
        if (model.assumption1.verdict == A1Verdict::Fails)
            fail(ErrorCode::Assumption1Fails, "inverse of L_L(s) is unstable: " + model.assumption1.reason);
    } else {
        model.assumption1.reason = "not checked";
        model.warnings.push_back("load-node determinant check skipped");
    }
    for (const auto& c : cfg.converters)
        if (!c.ctrl.proper()) fail(ErrorCode::ImproperController, "controller at '" + c.node + "' has tau_kd = 0");

    std::vector<StateSpace> blocks;
    std::vector<Connection> conns;
    std::vector<std::string> ext_in, ext_out;

    for (const auto& n : g.ac_nodes())
        if (n.kind == NodeKind::LoadAC) ext_in.push_back("P_L." + n.name);
    for (const auto& ib : infinite_buses(g)) ext_in.push_back(omega_pg_channel(g, ib));
    for (const auto& c : cfg.converters) ext_in.push_back("n." + c.node);

    // AC network
    {
        StateSpace net = ac_network_ss(g, S);
        std::vector<std::string> ins;
        for (const auto& nm : net.input_names()) ins.push_back("in:acnet." + nm);
        blocks.push_back(net.renamed(ins, net.output_names()));
        // theta.<node> from the angle integrators, P_L.<load> from outside
        for (const auto& nm : net.input_names()) conns.push_back({nm, "in:acnet." + nm, 1.0});
    }
    // angle integrators
    for (const auto& n : g.ac_nodes()) {
        if (n.kind == NodeKind::LoadAC) continue;
        blocks.push_back(tf_to_ss(RationalTF::integrator(wstar), "in:angle." + n.name, "theta." + n.name));
        const std::string src = n.kind == NodeKind::InfiniteBus ? omega_pg_channel(g, n.name) : "omega." + n.name;
        conns.push_back({src, "in:angle." + n.name, 1.0});
        ext_out.push_back("P_ac." + n.name);
    }
    // synchronous machines
    for (const auto& m : cfg.machines) {
        const RationalTF swing = sm_tf_pu(m.params, S);
        model.conversions.push_back("SM " + m.node + ": M = 2H S_n/S_base = " + std::to_string(swing.den().coeff(1)) + " s");
        blocks.push_back(tf_to_ss(swing, "in:swing." + m.node, "omega." + m.node));
        conns.push_back({"P_ac." + m.node, "in:swing." + m.node, -1.0});
        if (cfg.resource(ResourceKind::Governor, m.node)) {
            const RationalTF gov = system_governor_tf(m, S);
            model.conversions.push_back("governor " + m.node + ": power scale P_max/S_base = " + std::to_string(m.params.P_max / S));
            blocks.push_back(tf_to_ss(gov, "in:gov." + m.node, "P_tg." + m.node));
            conns.push_back({"omega." + m.node, "in:gov." + m.node, 1.0});
            conns.push_back({"P_tg." + m.node, "in:swing." + m.node, 1.0});
            ext_out.push_back("P_tg." + m.node);
        }
    }
    // converters
    for (const auto& c : cfg.converters) {
        blocks.push_back(tf_to_ss(gfm_ctrl_tf(c.ctrl), "in:ctrl." + c.node, "omega." + c.node));
        conns.push_back({"v_dc." + c.node, "in:ctrl." + c.node, 1.0});
        conns.push_back({"n." + c.node, "in:ctrl." + c.node, 1.0});
        conns.push_back({"P_ac." + c.node, "in:cap." + c.node, -1.0});
    }
    // DC nodes
    for (const auto& n : g.dc_nodes()) {
        const double Cpu = dc_node_capacitance_pu(cfg, n.name);
        model.conversions.push_back("DC node " + n.name + ": C v* V_b/S_base = " + std::to_string(Cpu) + " s");
        blocks.push_back(tf_to_ss(RationalTF({Polynomial::constant(1.0), Polynomial({0.0, Cpu})}), "in:cap." + n.name, "v_dc." + n.name));
        if (const Resource* pv = cfg.resource(ResourceKind::Pv, n.name)) {
            blocks.push_back(static_gain(-pv->k_pv, "in:pv." + n.name, "P_pv." + n.name));
            conns.push_back({"v_dc." + n.name, "in:pv." + n.name, 1.0});
            conns.push_back({"P_pv." + n.name, "in:cap." + n.name, 1.0});
        }
    }
    // DC network
    if (!g.dc_edges().empty()) {
        StateSpace net = dc_network_ss(g, S, Vb);
        std::vector<std::string> ins;
        for (const auto& nm : net.input_names()) ins.push_back("in:dcnet." + nm);
        blocks.push_back(net.renamed(ins, net.output_names()));
        for (const auto& nm : net.input_names()) conns.push_back({nm, "in:dcnet." + nm, 1.0});
        for (const auto& n : g.dc_nodes()) conns.push_back({"P_dc." + n.name, "in:cap." + n.name, -1.0});
    }

    // output ordering: frequencies, DC voltages, AC powers, DC powers, resources
    std::vector<std::string> outs;
    for (const auto& u : cfg.conversion_units()) outs.push_back("omega." + u);
    for (const auto& n : g.dc_nodes()) outs.push_back("v_dc." + n.name);
    for (const auto& o : ext_out)
        if (o.rfind("P_ac.", 0) == 0) outs.push_back(o);
    for (const auto& n : g.dc_nodes())
        if (g.dc_degree(n.name) > 0) outs.push_back("P_dc." + n.name);
    for (const auto& o : ext_out)
        if (o.rfind("P_tg.", 0) == 0) outs.push_back(o);
    for (const auto& n : g.dc_nodes())
        if (cfg.resource(ResourceKind::Pv, n.name)) outs.push_back("P_pv." + n.name);

    model.ss = compose(blocks, conns, ext_in, outs);
    return model;
}

// ============================================================================
// Steady state
// ============================================================================

struct SteadyState {
    std::map<std::string, double> values;  ///< keyed by output channel name, p.u.
    double delta_omega = std::numeric_limits<double>::quiet_NaN();  ///< first free area, or pinned value
    double kappa_tg = std::numeric_limits<double>::quiet_NaN();     ///< 1 / sum of governor droops
    double kappa_pv = std::numeric_limits<double>::quiet_NaN();     ///< 1 / sum of k_pv/k_p

    [[nodiscard]] double at(const std::string& ch) const {
        auto it = values.find(ch);
        if (it == values.end()) fail(ErrorCode::ChannelNotFound, "no steady-state value for '" + ch + "'");
        return it->second;
    }
};

/// Algebraic s = 0 solution for constant inputs (channel -> p.u. value).
inline SteadyState steady_state(const SystemConfig& cfg, const std::map<std::string, double>& inputs) {
    cfg.validate();
    const auto& g = cfg.graph;
    const double S = cfg.base.S_base, Vb = cfg.base.V_base_dc;
    const auto comps = g.ac_components();
    std::vector<int> area_of(g.ac_nodes().size());
    for (std::size_t a = 0; a < comps.size(); ++a)
        for (int i : comps[a]) area_of[i] = static_cast<int>(a);

    std::set<std::string> known;
    for (const auto& n : g.ac_nodes())
        if (n.kind == NodeKind::LoadAC) known.insert("P_L." + n.name);
    for (const auto& ib : infinite_buses(g)) known.insert(omega_pg_channel(g, ib));
    for (const auto& c : cfg.converters) known.insert("n." + c.node);
    for (const auto& [k, v] : inputs)
        if (!known.count(k)) fail(ErrorCode::ChannelNotFound, "no input channel '" + k + "'");
    auto in = [&](const std::string& k) {
        auto it = inputs.find(k);
        return it == inputs.end() ? 0.0 : it->second;
    };

    // area frequencies: pinned by an infinite bus or unknown
    std::vector<std::optional<double>> pinned(comps.size());
    for (const auto& ib : infinite_buses(g)) {
        const int a = area_of[g.ac_index(ib)];
        if (!pinned[a]) pinned[a] = in(omega_pg_channel(g, ib));
    }
    std::vector<int> free_areas, area_var(comps.size(), -1);
    for (std::size_t a = 0; a < comps.size(); ++a)
        if (!pinned[a] && std::any_of(comps[a].begin(), comps[a].end(), [&](int i) { return g.ac_nodes()[i].kind != NodeKind::LoadAC; }))
            free_areas.push_back(static_cast<int>(a));

    const auto units = cfg.conversion_units();
    const int nf = static_cast<int>(free_areas.size()), nd = static_cast<int>(g.dc_nodes().size()), nu = static_cast<int>(units.size());
    for (int k = 0; k < nf; ++k) area_var[free_areas[k]] = k;
    const int N = nf + nd + nu;
    const auto iv = [&](int j) { return nf + j; };
    const auto ip = [&](int u) { return nf + nd + u; };

    Matrix A = Matrix::Zero(N, N);
    Vector b = Vector::Zero(N);
    int row = 0;
    // omega of an area: either a variable column or a constant
    auto add_omega = [&](int r, int area, double coeff) {
        if (pinned[area]) b(r) -= coeff * *pinned[area];
        else A(r, area_var[area]) += coeff;
    };

    double sum_droop_tg = 0.0, sum_pv = 0.0;
    bool any_tg = false, any_pv = false;
    for (int u = 0; u < nu; ++u) {
        const std::string& name = units[u];
        const int area = area_of[g.ac_index(name)];
        if (const SmUnit* m = cfg.machine(name)) {
            // P_ac = G_tg(0) omega
            A(row, ip(u)) = 1.0;
            if (cfg.resource(ResourceKind::Governor, name)) {
                const double gtg = tf_eval(system_governor_tf(*m, S), 0.0);
                add_omega(row, area, -gtg);
                sum_droop_tg += -gtg;
                any_tg = true;
            }
        } else {
            const VscUnit* c = cfg.converter(name);
            // k_p (v + n) = omega
            A(row, iv(g.dc_index(name))) = c->ctrl.k_p;
            add_omega(row, area, -1.0);
            b(row) -= c->ctrl.k_p * in("n." + name);
            if (const Resource* pv = cfg.resource(ResourceKind::Pv, name)) {
                sum_pv += pv->k_pv / c->ctrl.k_p;
                any_pv = true;
            }
        }
        ++row;
    }
    // DC node balance: P_pv - sum P_ac - P_dc = 0
    const DcLaplacian dl = assemble_dc_laplacian(g, cplx(0.0), S);
    for (int j = 0; j < nd; ++j) {
        const std::string& name = g.dc_nodes()[j].name;
        if (const Resource* pv = cfg.resource(ResourceKind::Pv, name)) A(row, iv(j)) -= pv->k_pv;
        for (int u = 0; u < nu; ++u)
            if (units[u] == name) A(row, ip(u)) -= 1.0;
        for (int k = 0; k < nd; ++k) A(row, iv(k)) -= dl.L(j, k).real() * Vb;
        A(row, iv(j)) -= dl.loss(j).real() * Vb;
        ++row;
    }
    // free-area power balance: sum of unit injections equals load consumption
    for (int a : free_areas) {
        for (int u = 0; u < nu; ++u)
            if (area_of[g.ac_index(units[u])] == a) A(row, ip(u)) = 1.0;
        for (int i : comps[a])
            if (g.ac_nodes()[i].kind == NodeKind::LoadAC) b(row) += in("P_L." + g.ac_nodes()[i].name);
        ++row;
    }

    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) fail(ErrorCode::NoDroop, "no unit provides steady-state droop (singular steady-state map)");
    const Vector x = lu.solve(b);

    SteadyState ss;
    auto area_omega = [&](int area) { return pinned[area] ? *pinned[area] : x(area_var[area]); };
    for (int u = 0; u < nu; ++u) {
        const int area = area_of[g.ac_index(units[u])];
        ss.values["omega." + units[u]] = area_omega(area);
        ss.values["P_ac." + units[u]] = x(ip(u));
        if (cfg.machine(units[u]) && cfg.resource(ResourceKind::Governor, units[u])) ss.values["P_tg." + units[u]] = x(ip(u));
    }
    for (int j = 0; j < nd; ++j) {
        const std::string& name = g.dc_nodes()[j].name;
        ss.values["v_dc." + name] = x(iv(j));
        double pdc = dl.loss(j).real() * Vb * x(iv(j));
        for (int k = 0; k < nd; ++k) pdc += dl.L(j, k).real() * Vb * x(iv(k));
        if (g.dc_degree(name) > 0) ss.values["P_dc." + name] = pdc;
        if (const Resource* pv = cfg.resource(ResourceKind::Pv, name)) ss.values["P_pv." + name] = -pv->k_pv * x(iv(j));
    }
    for (const auto& ib : infinite_buses(g)) {
        const int a = area_of[g.ac_index(ib)];
        double load = 0.0, gen = 0.0;
        for (int i : comps[a])
            if (g.ac_nodes()[i].kind == NodeKind::LoadAC) load += in("P_L." + g.ac_nodes()[i].name);
        for (int u = 0; u < nu; ++u)
            if (area_of[g.ac_index(units[u])] == a) gen += x(ip(u));
        // several infinite buses in one area share the residual equally
        int n_ib = 0;
        for (const auto& other : infinite_buses(g))
            if (area_of[g.ac_index(other)] == a) ++n_ib;
        ss.values["P_ac." + ib] = (load - gen) / n_ib;
    }
    if (!units.empty()) ss.delta_omega = ss.values["omega." + units.front()];
    if (any_tg) ss.kappa_tg = 1.0 / sum_droop_tg;
    if (any_pv) ss.kappa_pv = 1.0 / sum_pv;
    return ss;
}

/// Steady state for a load step on the only load node.
inline SteadyState steady_state(const SystemConfig& cfg, double dP_L_pu) {
    std::vector<std::string> loads;
    for (const auto& n : cfg.graph.ac_nodes())
        if (n.kind == NodeKind::LoadAC) loads.push_back(n.name);
    require(loads.size() == 1, ErrorCode::InvalidArgument, "scalar load step needs exactly one load node");
    return steady_state(cfg, std::map<std::string, double>{{"P_L." + loads.front(), dP_L_pu}});
}

/// Nominal DC-link power leaving each DC node (p.u.), from the voltage setpoints and r_dc.
inline std::map<std::string, double> nominal_dc_power(const SystemConfig& cfg) {
    std::map<std::string, double> out;
    const auto& g = cfg.graph;
    for (const auto& n : g.dc_nodes()) out[n.name] = 0.0;
    for (const auto& e : g.dc_edges()) {
        const double va = g.dc_node(e.from).v_star, vb = g.dc_node(e.to).v_star;
        require(e.r > 0, ErrorCode::InvalidArgument, "nominal DC flow needs r_dc > 0");
        out[e.from] += va * (va - vb) / e.r / cfg.base.S_base;
        out[e.to] += vb * (vb - va) / e.r / cfg.base.S_base;
    }
    return out;
}

// ============================================================================
// Testbed scenarios
// ============================================================================

struct CableRun {
    std::string cable;
    double length_m = 0.0;
    friend bool operator==(const CableRun&, const CableRun&) = default;
};

inline Segment sum_runs(const CableCatalog& cat, const std::vector<CableRun>& runs, bool dc = false) {
    Segment s;
    for (const auto& r : runs) {
        const Segment x = dc ? cat.dc_segment(r.cable, r.length_m) : cat.ac_segment(r.cable, r.length_m);
        s.r += x.r;
        s.l += x.l;
    }
    return s;
}

struct IslandedPvParams {
    PerUnitBase base{50e3, 400.0, 650.0, 2.0 * std::numbers::pi * 50.0};
    double V_ac = 400.0;
    SgParams sg;
    bool governor_speed_damping = false;
    VscParams vsc;
    GfmCtrlParams ctrl{0.025, 0.01, 0.01};
    std::vector<CableRun> line_sm{{"NAYY 4x240", 4.0}};
    std::vector<CableRun> line_vsc{{"NAYY 4x35", 25.0}};
    PvParams pv;
    bool k_pv_from_curve = false;
    double k_pv = 3.4581;  ///< in k_pv_base
    PerUnitBase k_pv_base{18.2e3, 400.0, 650.0, 2.0 * std::numbers::pi * 50.0};
    double P_load_nominal_W = 20e3;
};

/// PV sensitivity converted to the system base.
inline double system_k_pv(const IslandedPvParams& p) {
    const double k = p.k_pv_from_curve ? pv_linearize(p.pv, p.k_pv_base) : p.k_pv;
    return convert_k_pv(k, p.k_pv_base, p.base);
}

inline SystemConfig scenario_islanded_pv(const IslandedPvParams& p, const CableCatalog& cat) {
    const Segment sm = sum_runs(cat, p.line_sm), vs = sum_runs(cat, p.line_vsc);
    const double wstar = p.base.omega_base;
    HybridGraph g({{"sg", NodeKind::SM, p.V_ac}, {"vk1", NodeKind::LoadAC, p.V_ac}, {"vsc", NodeKind::VSC, p.V_ac}},
                  {{"vsc", NodeKind::VSC, p.vsc.v_dc_star, 0.0}},
                  {{"sg", "vk1", sm.l, sm.r}, {"vk1", "vsc", vs.l, vs.r, 0.0, p.vsc.l_virtual, 0.0, p.vsc.r_virtual}},
                  {}, wstar);
    SystemConfig c;
    c.name = "islanded_pv";
    c.graph = std::move(g);
    c.base = p.base;
    c.machines = {{"sg", p.sg, p.governor_speed_damping}};
    GfmCtrlParams ctrl = p.ctrl;
    ctrl.omega_star = wstar;
    ctrl.v_dc_star = p.vsc.v_dc_star / p.base.V_base_dc;
    c.converters = {{"vsc", p.vsc, 0.0, ctrl}};
    c.resources = {{ResourceKind::Governor, "sg", 0.0}, {ResourceKind::Pv, "vsc", system_k_pv(p)}};
    return c;
}

struct LvdcAsyncParams {
    PerUnitBase base{50e3, 400.0, 800.0, 2.0 * std::numbers::pi * 50.0};
    double V_ac = 400.0;
    bool include_sg = true;
    SgParams sg;
    bool governor_speed_damping = false;
    VscParams vsc1{22e3, 800.0, 3.1e-3, 800.0, 2.3e-3, 0.0, 650.0, 850.0};
    VscParams vsc2{22e3, 800.0, 3.1e-3, 800.0, 2.3e-3, 0.0, 650.0, 850.0};
    double C_add = 3.1e-3;  ///< at VSC 2
    double v_dc_star_1 = 1.0, v_dc_star_2 = 1.0;  ///< p.u.
    GfmCtrlParams ctrl1{0.025, 0.001, 0.01};
    GfmCtrlParams ctrl2{0.025, 0.001, 0.01};
    std::vector<CableRun> line_sm{{"NAYY 4x240", 4.0}};
    std::vector<CableRun> line_vsc{{"NAYY 4x35", 25.0}};
    std::vector<CableRun> line_pg{{"NAYY 4x240", 5.0}, {"NAYY 4x35", 215.0}};
    double l_add = 1.5e-3;
    std::vector<CableRun> dc_link{{"H07RN-F 2x6", 40.0}};
    /// LVAC link between the converter buses; empty for the DC-only interconnection.
    std::vector<CableRun> lvac_link;
};

inline SystemConfig scenario_lvdc_async(const LvdcAsyncParams& p, const CableCatalog& cat) {
    const double wstar = p.base.omega_base, Vb = p.base.V_base_dc;
    const Segment vs = sum_runs(cat, p.line_vsc), pg = sum_runs(cat, p.line_pg), dc = sum_runs(cat, p.dc_link, true);
    VscParams v1 = p.vsc1, v2 = p.vsc2;
    v1.v_dc_star = p.v_dc_star_1 * Vb;
    v2.v_dc_star = p.v_dc_star_2 * Vb;

    std::vector<AcNode> ac{{"vk1", NodeKind::LoadAC, p.V_ac}, {"vsc1", NodeKind::VSC, p.V_ac}, {"vsc2", NodeKind::VSC, p.V_ac},
                           {"grid", NodeKind::InfiniteBus, p.V_ac}};
    std::vector<AcEdge> edges{{"vk1", "vsc1", vs.l, vs.r, 0.0, v1.l_virtual, 0.0, v1.r_virtual},
                              {"vsc2", "grid", pg.l + p.l_add, pg.r, v2.l_virtual, 0.0, v2.r_virtual, 0.0}};
    if (p.include_sg) {
        const Segment sm = sum_runs(cat, p.line_sm);
        ac.insert(ac.begin(), {"sg", NodeKind::SM, p.V_ac});
        edges.insert(edges.begin(), {"sg", "vk1", sm.l, sm.r});
    }
    if (!p.lvac_link.empty()) {
        const Segment lk = sum_runs(cat, p.lvac_link);
        edges.push_back({"vsc1", "vsc2", lk.l, lk.r, v1.l_virtual, v2.l_virtual, v1.r_virtual, v2.r_virtual});
    }
    HybridGraph g(std::move(ac), {{"vsc1", NodeKind::VSC, v1.v_dc_star, 0.0}, {"vsc2", NodeKind::VSC, v2.v_dc_star, 0.0}},
                  std::move(edges), {{"vsc1", "vsc2", dc.l, dc.r}}, wstar);

    SystemConfig c;
    c.name = p.lvac_link.empty() ? "lvdc_async" : "parallel_ac_dc";
    c.graph = std::move(g);
    c.base = p.base;
    if (p.include_sg) {
        c.machines = {{"sg", p.sg, p.governor_speed_damping}};
        c.resources = {{ResourceKind::Governor, "sg", 0.0}};
    }
    GfmCtrlParams k1 = p.ctrl1, k2 = p.ctrl2;
    k1.omega_star = k2.omega_star = wstar;
    k1.v_dc_star = p.v_dc_star_1;
    k2.v_dc_star = p.v_dc_star_2;
    c.converters = {{"vsc1", v1, 0.0, k1}, {"vsc2", v2, p.C_add, k2}};
    return c;
}

/// Parallel AC/DC defaults: no SG, 119 m LVAC link between the converter buses.
inline LvdcAsyncParams parallel_ac_dc_defaults() {
    LvdcAsyncParams p;
    p.include_sg = false;
    p.lvac_link = {{"NAYY 4x150", 119.0}};
    return p;
}

/// The async LVDC scenario plus the LVAC link between the converter buses.
inline SystemConfig scenario_parallel_ac_dc(LvdcAsyncParams p, const CableCatalog& cat) {
    if (p.lvac_link.empty()) p.lvac_link = {{"NAYY 4x150", 119.0}};
    return scenario_lvdc_async(p, cat);
}

}  // namespace gfmnet
