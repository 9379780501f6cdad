#pragma once

#include <gfmnet/analysis.hpp>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef GFMNET_DATA_DIR
#define GFMNET_DATA_DIR "."
#endif

namespace gfmnet {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

// ============================================================================
// Strict JSON field access
// ============================================================================

namespace cfg {

[[noreturn]] inline void invalid(const std::string& path, const std::string& what) {
    fail(ErrorCode::ValidationError, path + ": " + what);
}

inline void check_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) invalid(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) invalid(path + "/" + it.key(), "unknown field");
    }
}

inline void read(const json& j, const char* key, double& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number()) invalid(path + "/" + key, "expected a number");
    out = v.get<double>();
    if (!std::isfinite(out)) invalid(path + "/" + key, "must be finite");
}

inline void read(const json& j, const char* key, int& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_number_integer()) invalid(path + "/" + key, "expected an integer");
    out = v.get<int>();
}

inline void read(const json& j, const char* key, bool& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_boolean()) invalid(path + "/" + key, "expected true or false");
    out = v.get<bool>();
}

inline void read(const json& j, const char* key, std::string& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_string()) invalid(path + "/" + key, "expected a string");
    out = v.get<std::string>();
}

inline void read(const json& j, const char* key, std::vector<double>& out, const std::string& path) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_array()) invalid(path + "/" + key, "expected an array of numbers");
    out.clear();
    for (const auto& x : v) {
        if (!x.is_number()) invalid(path + "/" + key, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
}

// ---- parameter records -----------------------------------------------------

inline PerUnitBase base_from(const json& j, const std::string& path, PerUnitBase b) {
    check_keys(j, path, {"S_base", "V_base_ac", "V_base_dc", "f_base_hz"});
    double f = b.omega_base / (2.0 * std::numbers::pi);
    read(j, "S_base", b.S_base, path);
    read(j, "V_base_ac", b.V_base_ac, path);
    read(j, "V_base_dc", b.V_base_dc, path);
    read(j, "f_base_hz", f, path);
    b.omega_base = 2.0 * std::numbers::pi * f;
    return b;
}
/// Shortest decimal frequency that maps back to the same omega.
inline double base_frequency_hz(double omega) {
    const double f = omega / (2.0 * std::numbers::pi);
    for (int digits = 1; digits <= 17; ++digits) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.*g", digits, f);
        const double g = std::strtod(buf, nullptr);
        if (2.0 * std::numbers::pi * g == omega) return g;
    }
    return f;
}

inline json to_json(const PerUnitBase& b) {
    return {{"S_base", b.S_base}, {"V_base_ac", b.V_base_ac}, {"V_base_dc", b.V_base_dc},
            {"f_base_hz", base_frequency_hz(b.omega_base)}};
}

inline SgParams sg_from(const json& j, const std::string& path, SgParams p) {
    check_keys(j, path, {"S_n", "P_max", "V_n", "n_r", "H", "k_tg", "k_omega", "T1", "T2"});
    read(j, "S_n", p.S_n, path);
    read(j, "P_max", p.P_max, path);
    read(j, "V_n", p.V_n, path);
    read(j, "n_r", p.n_r, path);
    read(j, "H", p.H, path);
    read(j, "k_tg", p.k_tg, path);
    read(j, "k_omega", p.k_omega, path);
    read(j, "T1", p.T1, path);
    read(j, "T2", p.T2, path);
    return p;
}
inline json to_json(const SgParams& p) {
    return {{"S_n", p.S_n}, {"P_max", p.P_max}, {"V_n", p.V_n}, {"n_r", p.n_r}, {"H", p.H},
            {"k_tg", p.k_tg}, {"k_omega", p.k_omega}, {"T1", p.T1}, {"T2", p.T2}};
}

inline VscParams vsc_from(const json& j, const std::string& path, VscParams p) {
    check_keys(j, path, {"S_rated", "V_rated", "C_dc", "v_dc_star", "l_virtual", "r_virtual", "v_dc_min", "v_dc_max"});
    read(j, "S_rated", p.S_rated, path);
    read(j, "V_rated", p.V_rated, path);
    read(j, "C_dc", p.C_dc, path);
    read(j, "v_dc_star", p.v_dc_star, path);
    read(j, "l_virtual", p.l_virtual, path);
    read(j, "r_virtual", p.r_virtual, path);
    read(j, "v_dc_min", p.v_dc_min, path);
    read(j, "v_dc_max", p.v_dc_max, path);
    return p;
}
inline json to_json(const VscParams& p) {
    return {{"S_rated", p.S_rated}, {"V_rated", p.V_rated}, {"C_dc", p.C_dc}, {"v_dc_star", p.v_dc_star},
            {"l_virtual", p.l_virtual}, {"r_virtual", p.r_virtual}, {"v_dc_min", p.v_dc_min}, {"v_dc_max", p.v_dc_max}};
}

inline PvParams pv_from(const json& j, const std::string& path, PvParams p) {
    check_keys(j, path, {"V_mpp", "I_mpp", "V_oc", "I_sc", "V_op"});
    read(j, "V_mpp", p.V_mpp, path);
    read(j, "I_mpp", p.I_mpp, path);
    read(j, "V_oc", p.V_oc, path);
    read(j, "I_sc", p.I_sc, path);
    read(j, "V_op", p.V_op, path);
    return p;
}
inline json to_json(const PvParams& p) {
    return {{"V_mpp", p.V_mpp}, {"I_mpp", p.I_mpp}, {"V_oc", p.V_oc}, {"I_sc", p.I_sc}, {"V_op", p.V_op}};
}

/// omega_star and v_dc_star are set by the scenario from the bases.
inline GfmCtrlParams ctrl_from(const json& j, const std::string& path, GfmCtrlParams p) {
    check_keys(j, path, {"k_p", "k_d", "tau_kd"});
    read(j, "k_p", p.k_p, path);
    read(j, "k_d", p.k_d, path);
    read(j, "tau_kd", p.tau_kd, path);
    return p;
}
inline json to_json(const GfmCtrlParams& p) { return {{"k_p", p.k_p}, {"k_d", p.k_d}, {"tau_kd", p.tau_kd}}; }

inline std::vector<CableRun> runs_from(const json& j, const std::string& path) {
    if (!j.is_array()) invalid(path, "expected an array of cable runs");
    std::vector<CableRun> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "/" + std::to_string(i);
        check_keys(j[i], p, {"cable", "length_m"});
        CableRun r;
        read(j[i], "cable", r.cable, p);
        read(j[i], "length_m", r.length_m, p);
        if (r.cable.empty()) invalid(p + "/cable", "missing cable type");
        if (!(r.length_m > 0)) invalid(p + "/length_m", "must be positive");
        out.push_back(r);
    }
    return out;
}
inline json to_json(const std::vector<CableRun>& runs) {
    json a = json::array();
    for (const auto& r : runs) a.push_back({{"cable", r.cable}, {"length_m", r.length_m}});
    return a;
}

// ---- scenario parameter sets ----------------------------------------------

inline IslandedPvParams islanded_from(const json& j) {
    const std::string P = "/params";
    check_keys(j, P, {"base", "V_ac", "sg", "governor_speed_damping", "vsc", "ctrl", "line_sm", "line_vsc", "pv",
                      "k_pv_from_curve", "k_pv", "k_pv_base", "P_load_nominal_W"});
    IslandedPvParams p;
    if (j.contains("base")) p.base = base_from(j["base"], P + "/base", p.base);
    read(j, "V_ac", p.V_ac, P);
    if (j.contains("sg")) p.sg = sg_from(j["sg"], P + "/sg", p.sg);
    read(j, "governor_speed_damping", p.governor_speed_damping, P);
    if (j.contains("vsc")) p.vsc = vsc_from(j["vsc"], P + "/vsc", p.vsc);
    if (j.contains("ctrl")) p.ctrl = ctrl_from(j["ctrl"], P + "/ctrl", p.ctrl);
    if (j.contains("line_sm")) p.line_sm = runs_from(j["line_sm"], P + "/line_sm");
    if (j.contains("line_vsc")) p.line_vsc = runs_from(j["line_vsc"], P + "/line_vsc");
    if (j.contains("pv")) p.pv = pv_from(j["pv"], P + "/pv", p.pv);
    read(j, "k_pv_from_curve", p.k_pv_from_curve, P);
    read(j, "k_pv", p.k_pv, P);
    if (j.contains("k_pv_base")) p.k_pv_base = base_from(j["k_pv_base"], P + "/k_pv_base", p.k_pv_base);
    read(j, "P_load_nominal_W", p.P_load_nominal_W, P);
    return p;
}
inline json to_json(const IslandedPvParams& p) {
    return {{"base", to_json(p.base)}, {"V_ac", p.V_ac}, {"sg", to_json(p.sg)},
            {"governor_speed_damping", p.governor_speed_damping}, {"vsc", to_json(p.vsc)}, {"ctrl", to_json(p.ctrl)},
            {"line_sm", to_json(p.line_sm)}, {"line_vsc", to_json(p.line_vsc)}, {"pv", to_json(p.pv)},
            {"k_pv_from_curve", p.k_pv_from_curve}, {"k_pv", p.k_pv}, {"k_pv_base", to_json(p.k_pv_base)},
            {"P_load_nominal_W", p.P_load_nominal_W}};
}

inline LvdcAsyncParams lvdc_from(const json& j, LvdcAsyncParams p = {}) {
    const std::string P = "/params";
    check_keys(j, P, {"base", "V_ac", "include_sg", "sg", "governor_speed_damping", "vsc1", "vsc2", "C_add",
                      "v_dc_star_1", "v_dc_star_2", "ctrl1", "ctrl2", "line_sm", "line_vsc", "line_pg", "l_add",
                      "dc_link", "lvac_link"});
    if (j.contains("base")) p.base = base_from(j["base"], P + "/base", p.base);
    read(j, "V_ac", p.V_ac, P);
    read(j, "include_sg", p.include_sg, P);
    if (j.contains("sg")) p.sg = sg_from(j["sg"], P + "/sg", p.sg);
    read(j, "governor_speed_damping", p.governor_speed_damping, P);
    if (j.contains("vsc1")) p.vsc1 = vsc_from(j["vsc1"], P + "/vsc1", p.vsc1);
    if (j.contains("vsc2")) p.vsc2 = vsc_from(j["vsc2"], P + "/vsc2", p.vsc2);
    read(j, "C_add", p.C_add, P);
    read(j, "v_dc_star_1", p.v_dc_star_1, P);
    read(j, "v_dc_star_2", p.v_dc_star_2, P);
    if (j.contains("ctrl1")) p.ctrl1 = ctrl_from(j["ctrl1"], P + "/ctrl1", p.ctrl1);
    if (j.contains("ctrl2")) p.ctrl2 = ctrl_from(j["ctrl2"], P + "/ctrl2", p.ctrl2);
    if (j.contains("line_sm")) p.line_sm = runs_from(j["line_sm"], P + "/line_sm");
    if (j.contains("line_vsc")) p.line_vsc = runs_from(j["line_vsc"], P + "/line_vsc");
    if (j.contains("line_pg")) p.line_pg = runs_from(j["line_pg"], P + "/line_pg");
    read(j, "l_add", p.l_add, P);
    if (j.contains("dc_link")) p.dc_link = runs_from(j["dc_link"], P + "/dc_link");
    if (j.contains("lvac_link")) p.lvac_link = runs_from(j["lvac_link"], P + "/lvac_link");
    return p;
}
inline json to_json(const LvdcAsyncParams& p) {
    return {{"base", to_json(p.base)}, {"V_ac", p.V_ac}, {"include_sg", p.include_sg}, {"sg", to_json(p.sg)},
            {"governor_speed_damping", p.governor_speed_damping}, {"vsc1", to_json(p.vsc1)}, {"vsc2", to_json(p.vsc2)},
            {"C_add", p.C_add}, {"v_dc_star_1", p.v_dc_star_1}, {"v_dc_star_2", p.v_dc_star_2},
            {"ctrl1", to_json(p.ctrl1)}, {"ctrl2", to_json(p.ctrl2)}, {"line_sm", to_json(p.line_sm)},
            {"line_vsc", to_json(p.line_vsc)}, {"line_pg", to_json(p.line_pg)}, {"l_add", p.l_add},
            {"dc_link", to_json(p.dc_link)}, {"lvac_link", to_json(p.lvac_link)}};
}

/// Toy single-channel transfer function, ascending coefficients.
struct TfParams {
    std::vector<double> num{1.0};
    std::vector<double> den{1.0};
    std::string input = "u", output = "y";
};

inline TfParams tf_from(const json& j) {
    const std::string P = "/params";
    check_keys(j, P, {"num", "den", "input", "output"});
    TfParams p;
    read(j, "num", p.num, P);
    read(j, "den", p.den, P);
    read(j, "input", p.input, P);
    read(j, "output", p.output, P);
    if (p.num.empty() || p.den.empty()) invalid(P, "num and den must be non-empty");
    return p;
}
inline json to_json(const TfParams& p) {
    return {{"num", p.num}, {"den", p.den}, {"input", p.input}, {"output", p.output}};
}

// ---- inline system description --------------------------------------------

inline json inline_system_defaults(json j) {
    const std::string P = "/params";
    check_keys(j, P, {"base", "ac_nodes", "ac_edges", "dc_nodes", "dc_edges", "machines", "converters", "resources"});
    PerUnitBase b;
    if (j.contains("base")) b = base_from(j["base"], P + "/base", b);
    j["base"] = to_json(b);
    for (const char* k : {"ac_nodes", "ac_edges", "dc_nodes", "dc_edges", "machines", "converters", "resources"}) {
        if (!j.contains(k)) j[k] = json::array();
        if (!j[k].is_array()) invalid(P + "/" + k, "expected an array");
    }
    return j;
}

inline SystemConfig system_from(const json& j0) {
    const json j = inline_system_defaults(j0);
    const std::string P = "/params";
    SystemConfig c;
    c.name = "inline";
    c.base = base_from(j["base"], P + "/base", {});
    const double wstar = c.base.omega_base;

    std::vector<AcNode> ac;
    for (std::size_t i = 0; i < j["ac_nodes"].size(); ++i) {
        const json& n = j["ac_nodes"][i];
        const std::string p = P + "/ac_nodes/" + std::to_string(i);
        check_keys(n, p, {"name", "kind", "V_star"});
        AcNode a;
        std::string kind = "LoadAC";
        read(n, "name", a.name, p);
        read(n, "kind", kind, p);
        a.V_star = c.base.V_base_ac;
        read(n, "V_star", a.V_star, p);
        try {
            a.kind = parse_kind(kind);
        } catch (const Error&) {
            invalid(p + "/kind", "unknown node kind '" + kind + "'");
        }
        ac.push_back(a);
    }
    std::vector<AcEdge> ae;
    for (std::size_t i = 0; i < j["ac_edges"].size(); ++i) {
        const json& e = j["ac_edges"][i];
        const std::string p = P + "/ac_edges/" + std::to_string(i);
        check_keys(e, p, {"from", "to", "l", "r", "l_virt_from", "l_virt_to", "r_virt_from", "r_virt_to"});
        AcEdge a;
        read(e, "from", a.from, p);
        read(e, "to", a.to, p);
        read(e, "l", a.l, p);
        read(e, "r", a.r, p);
        read(e, "l_virt_from", a.l_virt_from, p);
        read(e, "l_virt_to", a.l_virt_to, p);
        read(e, "r_virt_from", a.r_virt_from, p);
        read(e, "r_virt_to", a.r_virt_to, p);
        ae.push_back(a);
    }
    std::vector<DcNode> dc;
    for (std::size_t i = 0; i < j["dc_nodes"].size(); ++i) {
        const json& n = j["dc_nodes"][i];
        const std::string p = P + "/dc_nodes/" + std::to_string(i);
        check_keys(n, p, {"name", "kind", "v_star", "capacitance"});
        DcNode d;
        std::string kind = "VSC";
        read(n, "name", d.name, p);
        read(n, "kind", kind, p);
        d.v_star = c.base.V_base_dc;
        read(n, "v_star", d.v_star, p);
        read(n, "capacitance", d.capacitance, p);
        try {
            d.kind = parse_kind(kind);
        } catch (const Error&) {
            invalid(p + "/kind", "unknown node kind '" + kind + "'");
        }
        dc.push_back(d);
    }
    std::vector<DcEdge> de;
    for (std::size_t i = 0; i < j["dc_edges"].size(); ++i) {
        const json& e = j["dc_edges"][i];
        const std::string p = P + "/dc_edges/" + std::to_string(i);
        check_keys(e, p, {"from", "to", "l", "r"});
        DcEdge d;
        read(e, "from", d.from, p);
        read(e, "to", d.to, p);
        read(e, "l", d.l, p);
        read(e, "r", d.r, p);
        de.push_back(d);
    }
    c.graph = HybridGraph(std::move(ac), std::move(dc), std::move(ae), std::move(de), wstar);

    for (std::size_t i = 0; i < j["machines"].size(); ++i) {
        const json& m = j["machines"][i];
        const std::string p = P + "/machines/" + std::to_string(i);
        check_keys(m, p, {"node", "sg", "governor_speed_damping"});
        SmUnit u;
        read(m, "node", u.node, p);
        if (m.contains("sg")) u.params = sg_from(m["sg"], p + "/sg", u.params);
        read(m, "governor_speed_damping", u.governor_speed_damping, p);
        c.machines.push_back(u);
    }
    for (std::size_t i = 0; i < j["converters"].size(); ++i) {
        const json& v = j["converters"][i];
        const std::string p = P + "/converters/" + std::to_string(i);
        check_keys(v, p, {"node", "vsc", "C_add", "ctrl"});
        VscUnit u;
        read(v, "node", u.node, p);
        if (v.contains("vsc")) u.params = vsc_from(v["vsc"], p + "/vsc", u.params);
        read(v, "C_add", u.C_add, p);
        if (v.contains("ctrl")) u.ctrl = ctrl_from(v["ctrl"], p + "/ctrl", u.ctrl);
        u.ctrl.omega_star = wstar;
        if (!c.graph.has_dc(u.node)) invalid(p + "/node", "converter node '" + u.node + "' has no DC terminal");
        u.params.v_dc_star = c.graph.dc_node(u.node).v_star;
        u.ctrl.v_dc_star = u.params.v_dc_star / c.base.V_base_dc;
        c.converters.push_back(u);
    }
    for (std::size_t i = 0; i < j["resources"].size(); ++i) {
        const json& r = j["resources"][i];
        const std::string p = P + "/resources/" + std::to_string(i);
        check_keys(r, p, {"kind", "unit", "k_pv"});
        Resource res;
        std::string kind;
        read(r, "kind", kind, p);
        if (kind == "governor") res.kind = ResourceKind::Governor;
        else if (kind == "pv") res.kind = ResourceKind::Pv;
        else invalid(p + "/kind", "expected 'governor' or 'pv'");
        read(r, "unit", res.unit, p);
        read(r, "k_pv", res.k_pv, p);
        c.resources.push_back(res);
    }
    c.validate();
    return c;
}

}  // namespace cfg

// ============================================================================
// RunConfig
// ============================================================================

enum class Command { Poles, Bode, Step, Steady, Sweep, Spectrum, Check };

inline std::string_view command_name(Command c) {
    switch (c) {
        case Command::Poles: return "poles";
        case Command::Bode: return "bode";
        case Command::Step: return "step";
        case Command::Steady: return "steady";
        case Command::Sweep: return "sweep";
        case Command::Spectrum: return "spectrum";
        case Command::Check: return "check";
    }
    return "?";
}

inline Command parse_command(const std::string& s) {
    for (Command c : {Command::Poles, Command::Bode, Command::Step, Command::Steady, Command::Sweep, Command::Spectrum, Command::Check})
        if (command_name(c) == s) return c;
    fail(ErrorCode::ValidationError, "/command: unknown command '" + s + "'");
}

inline const std::vector<std::string>& scenario_types() {
    static const std::vector<std::string> t{"islanded_pv", "lvdc_async", "parallel_ac_dc", "tf", "system"};
    return t;
}

struct SweepAxisSpec {
    std::string param;  ///< JSON pointer into the scenario parameters
    std::vector<double> values;
    friend bool operator==(const SweepAxisSpec&, const SweepAxisSpec&) = default;
};

struct CommandOptions {
    std::vector<std::pair<std::string, std::string>> channels;  ///< (input, output)
    double f_min_hz = kDefaultBodeOmegaMin / (2.0 * std::numbers::pi);
    double f_max_hz = kDefaultBodeOmegaMax / (2.0 * std::numbers::pi);
    int points = kDefaultBodePoints;
    std::string input;   ///< step / spectrum input channel
    double amplitude = 1.0;
    std::string amplitude_unit = "pu";  ///< "pu" or "W" (power inputs, divided by S_base)
    double T = 10.0;     ///< s
    double dt = 1e-3;    ///< s
    std::vector<std::string> outputs;  ///< step / spectrum channel filter; empty = all
    double spectrum_f_min_hz = 0.0;
    std::vector<SweepAxisSpec> axes;
    json inputs = json::object();  ///< steady: channel -> value in amplitude_unit
    unsigned threads = 0;
    friend bool operator==(const CommandOptions&, const CommandOptions&) = default;
};

struct RunConfig {
    Command command = Command::Check;
    std::string preset;    ///< name of the preset the parameters started from, informational
    std::string scenario;  ///< one of scenario_types()
    json params;           ///< fully resolved scenario parameters
    json metadata = json::object();  ///< preset metadata (reported constants, gain sets)
    CommandOptions options;
    std::string catalog;   ///< cable catalog path
    std::string out = "out";
    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// ---- paths ------------------------------------------------------------------

inline std::filesystem::path data_dir() {
    if (const char* e = std::getenv("GFMNET_DATA_DIR"); e && *e) return e;
    return GFMNET_DATA_DIR;
}

inline std::filesystem::path preset_path(const std::string& name) {
    if (name.find('/') != std::string::npos || name.ends_with(".json")) return name;
    return data_dir() / "presets" / (name + ".json");
}

inline std::filesystem::path default_catalog_path() { return data_dir() / "data" / "cable_catalog.json"; }

// ---- parsing -----------------------------------------------------------------

inline json parse_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::ParseError, "cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        fail(ErrorCode::ParseError, path.string() + ":" + std::to_string(line) + ": " + e.what());
    }
}

/// Canonical fully-defaulted parameters for a scenario type.
inline json resolve_params(const std::string& scenario, const json& j) {
    if (scenario == "islanded_pv") return cfg::to_json(cfg::islanded_from(j));
    if (scenario == "lvdc_async") return cfg::to_json(cfg::lvdc_from(j));
    if (scenario == "parallel_ac_dc") return cfg::to_json(cfg::lvdc_from(j, parallel_ac_dc_defaults()));
    if (scenario == "tf") return cfg::to_json(cfg::tf_from(j));
    if (scenario == "system") {
        const json r = cfg::inline_system_defaults(j);
        (void)cfg::system_from(r);
        return r;
    }
    fail(ErrorCode::ValidationError, "/scenario/type: unknown scenario type '" + scenario + "'");
}

/// "ctrl.k_d" or "/ctrl/k_d" to a JSON pointer.
inline json::json_pointer param_pointer(const std::string& key) {
    std::string p = key;
    if (p.empty()) fail(ErrorCode::ValidationError, "empty override key");
    if (p[0] != '/') {
        std::replace(p.begin(), p.end(), '.', '/');
        p = "/" + p;
    }
    try {
        return json::json_pointer(p);
    } catch (const json::exception& e) {
        fail(ErrorCode::ValidationError, "bad override key '" + key + "': " + e.what());
    }
}

/// Set an existing parameter; unknown paths are rejected.
inline void apply_override(json& params, const std::string& key, const json& value) {
    const auto ptr = param_pointer(key);
    if (!params.contains(ptr)) fail(ErrorCode::ValidationError, "override '" + key + "' does not name a scenario parameter");
    params[ptr] = value;
}

/// Parse the value side of --set key=value: JSON if it parses, string otherwise.
inline json parse_override_value(const std::string& v) {
    try {
        return json::parse(v);
    } catch (const json::parse_error&) {
        return v;
    }
}

inline CommandOptions options_from(const json& j) {
    using namespace cfg;
    const std::string P = "/options";
    check_keys(j, P, {"channels", "f_min_hz", "f_max_hz", "points", "input", "amplitude", "amplitude_unit", "T", "dt",
                      "outputs", "spectrum_f_min_hz", "axes", "inputs", "threads"});
    CommandOptions o;
    if (j.contains("channels")) {
        if (!j["channels"].is_array()) invalid(P + "/channels", "expected an array");
        for (std::size_t i = 0; i < j["channels"].size(); ++i) {
            const json& c = j["channels"][i];
            const std::string p = P + "/channels/" + std::to_string(i);
            check_keys(c, p, {"input", "output"});
            std::string in, out;
            read(c, "input", in, p);
            read(c, "output", out, p);
            if (in.empty() || out.empty()) invalid(p, "channel needs input and output");
            o.channels.emplace_back(in, out);
        }
    }
    read(j, "f_min_hz", o.f_min_hz, P);
    read(j, "f_max_hz", o.f_max_hz, P);
    read(j, "points", o.points, P);
    read(j, "input", o.input, P);
    read(j, "amplitude", o.amplitude, P);
    read(j, "amplitude_unit", o.amplitude_unit, P);
    read(j, "T", o.T, P);
    read(j, "dt", o.dt, P);
    if (j.contains("outputs")) {
        if (!j["outputs"].is_array()) invalid(P + "/outputs", "expected an array of strings");
        for (const auto& s : j["outputs"]) {
            if (!s.is_string()) invalid(P + "/outputs", "expected an array of strings");
            o.outputs.push_back(s.get<std::string>());
        }
    }
    read(j, "spectrum_f_min_hz", o.spectrum_f_min_hz, P);
    if (j.contains("axes")) {
        if (!j["axes"].is_array()) invalid(P + "/axes", "expected an array");
        for (std::size_t i = 0; i < j["axes"].size(); ++i) {
            const std::string p = P + "/axes/" + std::to_string(i);
            check_keys(j["axes"][i], p, {"param", "values"});
            SweepAxisSpec a;
            read(j["axes"][i], "param", a.param, p);
            read(j["axes"][i], "values", a.values, p);
            if (a.param.empty() || a.values.empty()) invalid(p, "axis needs a parameter and at least one value");
            a.param = param_pointer(a.param).to_string();
            o.axes.push_back(a);
        }
    }
    if (j.contains("inputs")) {
        if (!j["inputs"].is_object()) invalid(P + "/inputs", "expected an object of channel: value");
        for (auto it = j["inputs"].begin(); it != j["inputs"].end(); ++it)
            if (!it->is_number()) invalid(P + "/inputs/" + it.key(), "expected a number");
        o.inputs = j["inputs"];
    }
    int threads = 0;
    read(j, "threads", threads, P);
    if (threads < 0) invalid(P + "/threads", "must be nonnegative");
    o.threads = static_cast<unsigned>(threads);

    if (o.amplitude_unit != "pu" && o.amplitude_unit != "W") invalid(P + "/amplitude_unit", "expected 'pu' or 'W'");
    if (!(o.f_min_hz > 0 && o.f_max_hz > o.f_min_hz)) invalid(P, "need 0 < f_min_hz < f_max_hz");
    if (o.points < 2) invalid(P + "/points", "need at least 2 points");
    if (!(o.T > 0 && o.dt > 0 && o.dt <= o.T / 100.0 * (1 + 1e-12))) invalid(P, "need 0 < dt <= T/100");
    return o;
}

inline json to_json(const CommandOptions& o) {
    json ch = json::array();
    for (const auto& [i, out] : o.channels) ch.push_back({{"input", i}, {"output", out}});
    json ax = json::array();
    for (const auto& a : o.axes) ax.push_back({{"param", a.param}, {"values", a.values}});
    return {{"channels", ch}, {"f_min_hz", o.f_min_hz}, {"f_max_hz", o.f_max_hz}, {"points", o.points},
            {"input", o.input}, {"amplitude", o.amplitude}, {"amplitude_unit", o.amplitude_unit}, {"T", o.T},
            {"dt", o.dt}, {"outputs", o.outputs}, {"spectrum_f_min_hz", o.spectrum_f_min_hz}, {"axes", ax},
            {"inputs", o.inputs}, {"threads", o.threads}};
}

inline json to_json(const RunConfig& c) {
    return {{"command", command_name(c.command)},
            {"preset", c.preset},
            {"scenario", {{"type", c.scenario}, {"params", c.params}}},
            {"metadata", c.metadata},
            {"options", to_json(c.options)},
            {"catalog", c.catalog},
            {"out", c.out}};
}

/// True if building the model needs a realizable controller.
inline bool needs_realization(Command c) { return c != Command::Steady; }

inline bool has_improper_controller(const RunConfig& c) {
    const auto improper = [](const json& k) { return k.at("tau_kd").get<double>() == 0.0 && k.at("k_d").get<double>() != 0.0; };
    if (c.scenario == "islanded_pv") return improper(c.params.at("ctrl"));
    if (c.scenario == "lvdc_async" || c.scenario == "parallel_ac_dc")
        return improper(c.params.at("ctrl1")) || improper(c.params.at("ctrl2"));
    if (c.scenario == "system") {
        for (const auto& v : c.params.at("converters")) {
            const GfmCtrlParams k = v.contains("ctrl") ? cfg::ctrl_from(v["ctrl"], "/params/converters", {}) : GfmCtrlParams{};
            if (!k.proper()) return true;
        }
    }
    return false;
}

/// Build a RunConfig from an already parsed document plus command-line overrides.
/// A command given on the command line takes precedence over the file's.
inline RunConfig config_from_json(const json& j, const std::vector<std::pair<std::string, std::string>>& sets = {},
                                  std::optional<Command> command = std::nullopt) {
    using namespace cfg;
    check_keys(j, "", {"command", "preset", "scenario", "set", "metadata", "options", "catalog", "out"});
    RunConfig c;
    std::string cmd;
    read(j, "command", cmd, "");
    if (command) c.command = *command;
    else if (cmd.empty()) invalid("/command", "missing command");
    else c.command = parse_command(cmd);

    json params = json::object();
    read(j, "preset", c.preset, "");
    if (!c.preset.empty()) {
        const json pj = parse_json_file(preset_path(c.preset));
        check_keys(pj, "preset", {"preset", "description", "scenario", "params", "metadata"});
        if (!pj.contains("scenario") || !pj["scenario"].is_string()) invalid("preset/scenario", "preset must name a scenario type");
        c.scenario = pj["scenario"].get<std::string>();
        if (pj.contains("params")) params = pj["params"];
        if (pj.contains("metadata")) c.metadata = pj["metadata"];
    }
    if (j.contains("scenario")) {
        const json& s = j["scenario"];
        check_keys(s, "/scenario", {"type", "params"});
        std::string type;
        read(s, "type", type, "/scenario");
        if (!type.empty()) {
            if (!c.scenario.empty() && type != c.scenario) invalid("/scenario/type", "differs from the preset scenario '" + c.scenario + "'");
            c.scenario = type;
        }
        if (s.contains("params")) {
            if (!s["params"].is_object()) invalid("/scenario/params", "expected an object");
            params.merge_patch(s["params"]);
        }
    }
    if (c.scenario.empty()) invalid("/scenario", "need a preset or a scenario type");
    if (j.contains("metadata")) {
        if (!j["metadata"].is_object()) invalid("/metadata", "expected an object");
        c.metadata.merge_patch(j["metadata"]);
    }
    c.params = resolve_params(c.scenario, params);

    if (j.contains("set")) {
        if (!j["set"].is_object()) invalid("/set", "expected an object of parameter: value");
        for (auto it = j["set"].begin(); it != j["set"].end(); ++it) apply_override(c.params, it.key(), it.value());
    }
    for (const auto& [k, v] : sets) apply_override(c.params, k, parse_override_value(v));
    c.params = resolve_params(c.scenario, c.params);

    c.options = options_from(j.value("options", json::object()));
    for (const auto& a : c.options.axes)
        if (!c.params.contains(json::json_pointer(a.param)) || !c.params[json::json_pointer(a.param)].is_number())
            invalid("/options/axes", "'" + a.param + "' does not name a numeric scenario parameter");

    read(j, "catalog", c.catalog, "");
    if (c.catalog.empty()) c.catalog = default_catalog_path().string();
    read(j, "out", c.out, "");

    if (needs_realization(c.command) && has_improper_controller(c))
        fail(ErrorCode::ImproperController, "tau_kd = 0 gives an improper controller; '" + std::string(command_name(c.command)) +
                                                "' needs tau_kd > 0");
    if (c.scenario == "tf" && c.command == Command::Sweep) invalid("/command", "sweep needs a system scenario");
    return c;
}

inline RunConfig load_config(const std::filesystem::path& path, const std::vector<std::pair<std::string, std::string>>& sets = {},
                             std::optional<Command> command = std::nullopt) {
    return config_from_json(parse_json_file(path), sets, command);
}

inline void write_config(const RunConfig& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::ValidationError, "cannot write '" + path.string() + "'");
    json j = to_json(c);
    j.erase("preset");  // parameters are already resolved
    out << j.dump(2) << "\n";
}

// ---- scenario construction ---------------------------------------------------

/// Parameters are parsed against the scenario type; CableCatalog lookups happen here.
inline SystemConfig make_system(const std::string& scenario, const json& params, const CableCatalog& cat) {
    if (scenario == "islanded_pv") return scenario_islanded_pv(cfg::islanded_from(params), cat);
    if (scenario == "lvdc_async") return scenario_lvdc_async(cfg::lvdc_from(params), cat);
    if (scenario == "parallel_ac_dc") return scenario_parallel_ac_dc(cfg::lvdc_from(params, parallel_ac_dc_defaults()), cat);
    if (scenario == "system") return cfg::system_from(params);
    fail(ErrorCode::ValidationError, "scenario '" + scenario + "' is not a system");
}

inline StateSpace make_tf_model(const json& params) {
    const auto p = cfg::tf_from(params);
    return tf_to_ss(RationalTF(Polynomial(p.num), Polynomial(p.den)), p.input, p.output);
}

}  // namespace gfmnet
