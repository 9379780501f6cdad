#pragma once

#include <gfmnet/config.hpp>

#include <cstdio>
#include <iostream>

namespace gfmnet {

// ============================================================================
// CSV output
// ============================================================================

inline std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) fail(ErrorCode::ValidationError, "cannot write '" + path.string() + "'");
        row_strings(header);
    }
    void row(const std::vector<double>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << fmt9(v[i]);
        out_ << "\n";
    }
    void row_strings(const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

/// File-name-safe form of a channel name.
inline std::string slug(const std::string& s) {
    std::string o;
    for (char c : s) o += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
    return o;
}

/// Unit label of a model channel.
inline std::string channel_unit(const std::string& ch) {
    if (ch.rfind("theta.", 0) == 0) return "rad";
    return "pu";
}

// ============================================================================
// Run
// ============================================================================

struct RunContext {
    const RunConfig& cfg;
    std::filesystem::path out;
    json manifest;
    std::optional<CableCatalog> catalog;
    std::optional<SystemConfig> system;

    void add_output(const std::string& name) { manifest["outputs"].push_back(name); }
};

namespace detail {

inline double power_scale(const RunContext& ctx, const std::string& unit) {
    if (unit == "pu") return 1.0;
    if (!ctx.system) fail(ErrorCode::ValidationError, "amplitude_unit 'W' needs a system scenario");
    return 1.0 / ctx.system->base.S_base;
}

inline StateSpace realize(RunContext& ctx) {
    if (ctx.cfg.scenario == "tf") return make_tf_model(ctx.cfg.params);
    const ClosedLoopModel m = build(*ctx.system);
    ctx.manifest["assumption1"] = {{"verdict", verdict_name(m.assumption1.verdict)}, {"reason", m.assumption1.reason}};
    for (const auto& w : m.warnings) ctx.manifest["warnings"].push_back(w);
    ctx.manifest["conversions"] = m.conversions;
    return m.ss;
}

inline json stability_json(const StabilityVerdict& v) {
    return {{"stable", v.stable}, {"structural_poles", v.structural_count}, {"dominant_damping", v.dominant_damping},
            {"spectral_abscissa", v.poles.empty() ? json(nullptr) : json(v.spectral_abscissa)}};
}

inline std::vector<std::pair<std::string, std::string>> bode_channels(const RunContext& ctx, const StateSpace& ss) {
    if (!ctx.cfg.options.channels.empty()) return ctx.cfg.options.channels;
    std::vector<std::pair<std::string, std::string>> all;
    for (const auto& i : ss.input_names())
        for (const auto& o : ss.output_names()) all.emplace_back(i, o);
    return all;
}

inline void cmd_poles(RunContext& ctx) {
    const StateSpace ss = realize(ctx);
    CsvWriter csv(ctx.out / "poles.csv", {"re[1/s]", "im[rad/s]", "structural"});
    for (const auto& p : poles(ss)) csv.row({p.value.real(), p.value.imag(), p.structural ? 1.0 : 0.0});
    ctx.add_output("poles.csv");
    ctx.manifest["results"]["stability"] = stability_json(stability(ss));
}

inline void cmd_bode(RunContext& ctx) {
    const StateSpace ss = realize(ctx);
    const auto& o = ctx.cfg.options;
    for (const auto& [in, out] : bode_channels(ctx, ss)) {
        const BodeTable t = bode(ss, in, out, o.f_min_hz, o.f_max_hz, o.points);
        const std::string name = "bode_" + slug(out) + "__" + slug(in) + ".csv";
        CsvWriter csv(ctx.out / name, {"f_hz", "mag_db", "phase_deg"});
        for (const auto& r : t.rows) csv.row({r.f_hz, r.mag_db, r.phase_deg});
        ctx.add_output(name);
        json peak = nullptr;
        try {
            const Peak p = resonance_peak(t);
            peak = {{"f_peak_hz", p.f_hz}, {"mag_peak_db", p.mag_db}};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoInteriorPeak) throw;
        }
        ctx.manifest["results"]["peaks"].push_back({{"input", in}, {"output", out}, {"peak", peak}});
    }
}

inline TimeSeries run_step(RunContext& ctx, const StateSpace& ss) {
    const auto& o = ctx.cfg.options;
    const std::string input = o.input.empty() ? ss.input_names().front() : o.input;
    const double amp = o.amplitude * power_scale(ctx, o.amplitude_unit);
    TimeSeries ts = step_response(ss, input, o.T, o.dt, amp);
    ctx.manifest["results"]["step"] = {{"input", input}, {"amplitude_pu", amp}};
    for (const auto& w : ts.warnings) ctx.manifest["warnings"].push_back(w);
    return ts;
}

inline std::vector<std::string> selected_outputs(const RunContext& ctx, const TimeSeries& ts) {
    if (ctx.cfg.options.outputs.empty()) return ts.names;
    for (const auto& n : ctx.cfg.options.outputs) (void)ts.channel(n);
    return ctx.cfg.options.outputs;
}

inline void cmd_step(RunContext& ctx) {
    const StateSpace ss = realize(ctx);
    const TimeSeries ts = run_step(ctx, ss);
    const auto outs = selected_outputs(ctx, ts);
    std::vector<std::string> header{"t_s"};
    for (const auto& n : outs) header.push_back(n + "[" + channel_unit(n) + "]");
    CsvWriter csv(ctx.out / "step.csv", header);
    std::vector<const std::vector<double>*> cols;
    for (const auto& n : outs) cols.push_back(&ts.channel(n));
    for (std::size_t k = 0; k < ts.t.size(); ++k) {
        std::vector<double> row{ts.t[k]};
        for (const auto* c : cols) row.push_back((*c)[k]);
        csv.row(row);
    }
    ctx.add_output("step.csv");
    json fin = json::object();
    for (std::size_t i = 0; i < outs.size(); ++i) fin[outs[i]] = cols[i]->back();
    ctx.manifest["results"]["final_values"] = fin;
}

inline void cmd_spectrum(RunContext& ctx) {
    const StateSpace ss = realize(ctx);
    const TimeSeries ts = run_step(ctx, ss);
    const auto outs = selected_outputs(ctx, ts);
    std::vector<Spectrum> sp;
    std::vector<std::string> header{"f_hz"};
    for (const auto& n : outs) {
        sp.push_back(fft_magnitude(ts, n));
        header.push_back(n + "[" + channel_unit(n) + "]");
        const Peak p = spectrum_peak(sp.back(), ctx.cfg.options.spectrum_f_min_hz);
        ctx.manifest["results"]["spectrum_peaks"][n] = {{"f_peak_hz", p.f_hz}, {"mag_peak_db", p.mag_db}};
    }
    CsvWriter csv(ctx.out / "spectrum.csv", header);
    for (std::size_t k = 0; k < sp.front().freq_hz.size(); ++k) {
        std::vector<double> row{sp.front().freq_hz[k]};
        for (const auto& s : sp) row.push_back(s.magnitude[k]);
        csv.row(row);
    }
    ctx.add_output("spectrum.csv");
}

inline void cmd_steady(RunContext& ctx) {
    const auto& o = ctx.cfg.options;
    CsvWriter csv(ctx.out / "steady.csv", {"channel", "value", "unit"});
    if (ctx.cfg.scenario == "tf") {
        const StateSpace ss = make_tf_model(ctx.cfg.params);
        const Matrix G = dc_gain(ss);
        for (int i = 0; i < ss.num_outputs(); ++i) csv.row_strings({ss.output_names()[i], fmt9(G(i, 0) * o.amplitude), "pu"});
        ctx.add_output("steady.csv");
        return;
    }
    const double scale = power_scale(ctx, o.amplitude_unit);
    std::map<std::string, double> inputs;
    for (auto it = o.inputs.begin(); it != o.inputs.end(); ++it) {
        const std::string& ch = it.key();
        const bool power = ch.rfind("P_L.", 0) == 0;
        inputs[ch] = it->get<double>() * (power ? scale : 1.0);
    }
    if (inputs.empty()) {
        for (const auto& n : ctx.system->graph.ac_nodes())
            if (n.kind == NodeKind::LoadAC) {
                inputs["P_L." + n.name] = o.amplitude * scale;
                break;
            }
    }
    const SteadyState st = steady_state(*ctx.system, inputs);
    for (const auto& [k, v] : st.values) csv.row_strings({k, fmt9(v), channel_unit(k)});
    ctx.add_output("steady.csv");

    json r = {{"inputs_pu", inputs}, {"delta_omega", st.delta_omega}};
    if (std::isfinite(st.kappa_tg)) r["kappa_tg_inv"] = 1.0 / st.kappa_tg;
    if (std::isfinite(st.kappa_pv)) r["kappa_pv_inv"] = 1.0 / st.kappa_pv;

    // cross-check against the closed-loop gain when the model is realizable
    if (!has_improper_controller(ctx.cfg)) {
        const ClosedLoopModel m = build(*ctx.system);
        std::vector<std::string> ins;
        Vector u(static_cast<Eigen::Index>(inputs.size()));
        for (const auto& [k, v] : inputs) {
            u(static_cast<Eigen::Index>(ins.size())) = v;
            ins.push_back(k);
        }
        std::vector<std::string> outs;
        for (const auto& [k, v] : st.values) outs.push_back(k);
        if (!ins.empty()) {
            const Vector y = dc_gain(m.ss, ins, outs) * u;
            double diff = 0.0;
            for (std::size_t i = 0; i < outs.size(); ++i) diff = std::max(diff, std::abs(y(static_cast<Eigen::Index>(i)) - st.values.at(outs[i])));
            r["dc_gain_max_abs_diff"] = diff;
        }
    }
    ctx.manifest["results"]["steady"] = r;
}

inline void cmd_sweep(RunContext& ctx) {
    const auto& o = ctx.cfg.options;
    if (o.axes.empty()) fail(ErrorCode::ValidationError, "/options/axes: sweep needs at least one axis");
    std::vector<SweepAxis> axes;
    for (const auto& a : o.axes) axes.push_back({a.param, a.values});
    const RunConfig& cfg = ctx.cfg;
    const CableCatalog& cat = *ctx.catalog;
    const SweepBuilder builder = [&cfg, &cat](const std::map<std::string, double>& values) {
        json p = cfg.params;
        for (const auto& [k, v] : values) p[json::json_pointer(k)] = v;
        p = resolve_params(cfg.scenario, p);
        return make_system(cfg.scenario, p, cat);
    };
    std::vector<SweepChannel> channels;
    if (o.channels.empty()) {
        const ClosedLoopModel m = build(*ctx.system);
        for (const auto& i : m.ss.input_names())
            for (const auto& out : m.ss.output_names()) channels.push_back({i, out});
    } else {
        for (const auto& [i, out] : o.channels) channels.push_back({i, out});
    }
    const SweepResult res = sweep(builder, axes, channels, {o.f_min_hz, o.f_max_hz, o.points, o.threads});

    for (std::size_t c = 0; c < channels.size(); ++c) {
        const std::string name = "sweep_" + slug(channels[c].output) + "__" + slug(channels[c].input) + ".csv";
        std::vector<std::string> header;
        for (const auto& a : o.axes) header.push_back(a.param);
        header.insert(header.end(), {"stable", "f_peak_hz", "mag_peak_db"});
        CsvWriter csv(ctx.out / name, header);
        for (const auto& e : res.entries) {
            std::vector<std::string> row;
            for (double v : e.point) row.push_back(fmt9(v));
            row.push_back(e.ok ? (e.stable ? "1" : "0") : "nan");
            const auto& pk = e.peaks[c];
            row.push_back(pk ? fmt9(pk->f_hz) : "nan");
            row.push_back(pk ? fmt9(pk->mag_db) : "nan");
            csv.row_strings(row);
        }
        ctx.add_output(name);
    }
    json pts = json::array();
    for (const auto& e : res.entries) {
        json p = {{"point", e.point}, {"ok", e.ok}, {"stable", e.stable}};
        if (e.ok) p["dominant_damping"] = e.dominant_damping;
        if (!e.error.empty()) p["error"] = e.error;
        pts.push_back(p);
    }
    ctx.manifest["results"]["sweep"] = pts;
}

inline void cmd_check(RunContext& ctx) {
    CsvWriter csv(ctx.out / "check.csv", {"item", "value", "pass"});
    json r = json::object();
    bool all = true;
    const auto item = [&](const std::string& name, const std::string& value, bool pass) {
        csv.row_strings({name, value, pass ? "1" : "0"});
        all = all && pass;
    };

    if (ctx.cfg.scenario == "tf") {
        const auto v = stability(make_tf_model(ctx.cfg.params));
        item("stability", v.stable ? "stable" : "unstable", v.stable);
        r["stability"] = stability_json(v);
    } else {
        const auto a1 = check_assumption1(ctx.system->graph);
        item("assumption1", std::string(verdict_name(a1.verdict)), a1.verdict != A1Verdict::Fails);
        r["assumption1"] = {{"verdict", verdict_name(a1.verdict)}, {"reason", a1.reason}};

        // gain sets from the preset metadata, else the configured gains
        std::vector<json> sets;
        if (ctx.cfg.metadata.contains("check_gain_sets")) {
            for (const auto& s : ctx.cfg.metadata["check_gain_sets"]) sets.push_back(s);
        } else {
            sets.push_back(json::object());
        }
        for (const auto& s : sets) {
            json p = ctx.cfg.params;
            for (auto it = s.begin(); it != s.end(); ++it) apply_override(p, it.key(), it.value());
            p = resolve_params(ctx.cfg.scenario, p);
            const SystemConfig sys = make_system(ctx.cfg.scenario, p, *ctx.catalog);
            const auto v = stability(build(sys));
            std::string label = "stability";
            for (auto it = s.begin(); it != s.end(); ++it) label += " " + it.key() + "=" + fmt9(it->get<double>());
            item(label, v.stable ? "stable" : "unstable", v.stable);
            json e = stability_json(v);
            e["gains"] = s;
            r["stability"].push_back(e);
        }

        const auto& P = ctx.cfg.params;
        if (ctx.cfg.scenario == "islanded_pv") {
            const double k_p = P["ctrl"]["k_p"], k_d = P["ctrl"]["k_d"];
            const IslandedPvParams ip = cfg::islanded_from(P);
            const double k_pv = ip.k_pv_from_curve ? pv_linearize(ip.pv, ip.k_pv_base) : ip.k_pv;
            const double bound = bound_islanded_kd(k_p, implied_cdc_pu(k_pv), k_pv);
            item("islanded_kd_bound", fmt9(bound), k_d < bound);
            r["islanded_kd_bound"] = {{"k_d_max", bound}, {"implied_C_dc_pu", implied_cdc_pu(k_pv)}, {"k_pv", k_pv}};
        } else {
            RatioBounds b;
            if (ctx.cfg.metadata.contains("ratio_bounds")) {
                const json& m = ctx.cfg.metadata["ratio_bounds"];
                b.ratio_1 = m.value("ratio_1", b.ratio_1);
                b.ratio_2 = m.value("ratio_2", b.ratio_2);
                b.kd_max_1 = m.value("kd_max_1", b.kd_max_1);
                b.kd_max_2 = m.value("kd_max_2", b.kd_max_2);
                b.k_p_ref = m.value("k_p_ref", b.k_p_ref);
            }
            const auto c = check_ratio_bounds_async(P["ctrl1"]["k_p"], P["ctrl1"]["k_d"], P["ctrl2"]["k_p"], P["ctrl2"]["k_d"], b);
            item("ratio_bound_vsc1", fmt9(c.ratio_1), c.pass_1);
            item("ratio_bound_vsc2", fmt9(c.ratio_2), c.pass_2);
            r["ratio_bounds"] = {{"ratio_1", c.ratio_1}, {"ratio_2", c.ratio_2}, {"bound_1", c.bound_1}, {"bound_2", c.bound_2},
                                 {"pass_1", c.pass_1}, {"pass_2", c.pass_2}, {"note", c.note}};
        }
    }
    r["all_pass"] = all;
    ctx.add_output("check.csv");
    ctx.manifest["results"]["check"] = r;
}

inline void write_json(const std::filesystem::path& p, const json& j) {
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorCode::ValidationError, "cannot write '" + p.string() + "'");
    out << j.dump(2) << "\n";
}

}  // namespace detail

/// Execute a configured run; returns the process exit status (0 ok, 1 validation, 2 numeric).
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr) {
    const std::filesystem::path out = cfg.out;
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) {
        log << "error: cannot create output directory '" << out.string() << "': " << ec.message() << "\n";
        return 1;
    }
    std::filesystem::remove(out / "error.json", ec);

    RunContext ctx{cfg, out, json::object(), std::nullopt, std::nullopt};
    ctx.manifest["tool"] = {{"name", "gfmnet"}, {"version", kToolVersion}};
    ctx.manifest["command"] = command_name(cfg.command);
    ctx.manifest["config"] = to_json(cfg);
    ctx.manifest["outputs"] = json::array();
    ctx.manifest["warnings"] = json::array();
    ctx.manifest["results"] = json::object();

    try {
        if (cfg.scenario != "tf") {
            if (cfg.scenario != "system") {
                ctx.catalog = CableCatalog::load(cfg.catalog);
                ctx.manifest["catalog"] = {{"path", std::filesystem::path(cfg.catalog).filename().string()},
                                           {"version", ctx.catalog->version()}};
            }
            ctx.system = make_system(cfg.scenario, cfg.params, ctx.catalog ? *ctx.catalog : CableCatalog{});
            ctx.manifest["bases"] = cfg::to_json(ctx.system->base);
        }
        switch (cfg.command) {
            case Command::Poles: detail::cmd_poles(ctx); break;
            case Command::Bode: detail::cmd_bode(ctx); break;
            case Command::Step: detail::cmd_step(ctx); break;
            case Command::Steady: detail::cmd_steady(ctx); break;
            case Command::Sweep: detail::cmd_sweep(ctx); break;
            case Command::Spectrum: detail::cmd_spectrum(ctx); break;
            case Command::Check: detail::cmd_check(ctx); break;
        }
        ctx.manifest["status"] = "ok";
        detail::write_json(out / "manifest.json", ctx.manifest);
        return 0;
    } catch (const Error& e) {
        const int code = is_validation_error(e.code()) ? 1 : 2;
        const json err = {{"code", code_name(e.code())}, {"category", code == 1 ? "validation" : "numeric"},
                          {"message", e.detail()}, {"exit_status", code}};
        log << "error: " << code_name(e.code()) << ": " << e.detail() << "\n";
        ctx.manifest["status"] = "error";
        ctx.manifest["error"] = err;
        try {
            detail::write_json(out / "error.json", err);
            detail::write_json(out / "manifest.json", ctx.manifest);
        } catch (const Error&) {
        }
        return code;
    }
}

}  // namespace gfmnet
