#pragma once

#include <gfmnet/response.hpp>
#include <gfmnet/system.hpp>

#include <functional>
#include <future>
#include <optional>
#include <thread>

namespace gfmnet {

// ============================================================================
// Bode tables
// ============================================================================

struct BodeRow {
    double f_hz;
    double mag_db;
    double phase_deg;
};

struct BodeTable {
    std::string input, output;
    std::vector<BodeRow> rows;
};

inline constexpr double kDefaultBodeOmegaMin = 1e-2;  ///< rad/s
inline constexpr double kDefaultBodeOmegaMax = 1e4;   ///< rad/s
inline constexpr int kDefaultBodePoints = 400;

inline double to_db(double mag) { return 20.0 * std::log10(mag); }

/// Log-spaced Bode table over [f_min, f_max] Hz. Phase is unwrapped along the grid.
inline BodeTable bode(const StateSpace& ss, const std::string& input, const std::string& output,
                      double f_min, double f_max, int points = kDefaultBodePoints) {
    const StateSpace siso = ss.select({input}, {output});
    const auto f = logspace(f_min, f_max, points);
    std::vector<double> w(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) w[k] = 2.0 * std::numbers::pi * f[k];
    const auto fr = freq_response(siso, w);

    BodeTable t{input, output, {}};
    t.rows.reserve(f.size());
    double prev = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const cplx g = fr.values[k](0, 0);
        double ph = std::arg(g) * 180.0 / std::numbers::pi;
        if (k) ph -= 360.0 * std::round((ph - prev) / 360.0);
        prev = ph;
        t.rows.push_back({f[k], to_db(std::abs(g)), ph});
    }
    return t;
}

inline BodeTable bode(const StateSpace& ss, const std::string& input, const std::string& output) {
    const double hz = 0.5 / std::numbers::pi;
    return bode(ss, input, output, kDefaultBodeOmegaMin * hz, kDefaultBodeOmegaMax * hz, kDefaultBodePoints);
}

inline BodeTable bode(const ClosedLoopModel& m, const std::string& input, const std::string& output,
                      double f_min, double f_max, int points = kDefaultBodePoints) {
    return bode(m.ss, input, output, f_min, f_max, points);
}

inline BodeTable bode(const ClosedLoopModel& m, const std::string& input, const std::string& output) {
    return bode(m.ss, input, output);
}

/// |G(j 2 pi f)| for one channel pair.
inline double magnitude_at(const StateSpace& ss, const std::string& input, const std::string& output, double f_hz) {
    const StateSpace siso = ss.select({input}, {output});
    return std::abs(transfer_at(siso, cplx(0.0, 2.0 * std::numbers::pi * f_hz))(0, 0));
}

// ============================================================================
// Stability
// ============================================================================

struct StabilityVerdict {
    bool stable = true;
    std::vector<cplx> poles;       ///< non-structural, descending real part
    int structural_count = 0;
    double dominant_damping = 1.0;  ///< -Re/|lambda| of the rightmost non-structural pole
    double spectral_abscissa = -std::numeric_limits<double>::infinity();
};

inline StabilityVerdict stability(const StateSpace& ss) {
    StabilityVerdict v;
    for (const auto& p : poles(ss)) {
        if (p.structural) {
            ++v.structural_count;
            continue;
        }
        v.poles.push_back(p.value);
        if (!(p.value.real() < 0)) v.stable = false;
    }
    if (!v.poles.empty()) {
        const cplx d = v.poles.front();
        v.spectral_abscissa = d.real();
        v.dominant_damping = std::abs(d) > 0 ? -d.real() / std::abs(d) : 0.0;
    }
    return v;
}

inline StabilityVerdict stability(const ClosedLoopModel& m) { return stability(m.ss); }

// ============================================================================
// Analytic gain bounds
// ============================================================================

/// Islanded PV/VSC derivative-gain bound k_d < 4 C_dc k_p / k_pv.
inline double bound_islanded_kd(double k_p, double C_dc_pu, double k_pv) {
    require(k_p > 0 && C_dc_pu > 0 && k_pv >= 0, ErrorCode::InvalidArgument, "bound_islanded_kd needs positive k_p, C_dc and nonnegative k_pv");
    if (k_pv == 0.0) return std::numeric_limits<double>::infinity();
    return 4.0 * C_dc_pu * k_p / k_pv;
}

inline constexpr double kIslandedKdSlope = 9.9040;  ///< reported k_d_max / k_p

/// DC capacitance (p.u.) for which the bound reduces to the reported k_d < 9.9040 k_p. Not derived from the bases.
inline double implied_cdc_pu(double k_pv) { return kIslandedKdSlope * k_pv / 4.0; }

/// Reported ratio constants for the LVDC-async scenario. The absolute forms (k_d,i < kd_max_i at k_p_ref)
/// are rounded and not exactly ratio * k_p_ref; the check uses the tighter of the two.
struct RatioBounds {
    double ratio_1 = 0.2571;
    double ratio_2 = 0.5142;
    double kd_max_1 = 0.0064;
    double kd_max_2 = 0.0129;
    double k_p_ref = 0.025;

    [[nodiscard]] double effective_1() const { return std::min(ratio_1, kd_max_1 / k_p_ref); }
    [[nodiscard]] double effective_2() const { return std::min(ratio_2, kd_max_2 / k_p_ref); }
};

struct RatioCheck {
    double ratio_1 = 0, ratio_2 = 0;
    double bound_1 = 0, bound_2 = 0;
    bool pass_1 = false, pass_2 = false;
    std::string note;
};

inline RatioCheck check_ratio_bounds_async(double k_p1, double k_d1, double k_p2, double k_d2, const RatioBounds& b = {}) {
    require(k_p1 > 0 && k_p2 > 0 && k_d1 >= 0 && k_d2 >= 0, ErrorCode::InvalidArgument, "ratio check needs positive k_p and nonnegative k_d");
    RatioCheck r;
    r.ratio_1 = k_d1 / k_p1;
    r.ratio_2 = k_d2 / k_p2;
    r.bound_1 = b.effective_1();
    r.bound_2 = b.effective_2();
    // relative slack of a few ulps so that the decimal boundary value itself fails
    r.pass_1 = r.ratio_1 < r.bound_1 * (1 - 1e-12);
    r.pass_2 = r.ratio_2 < r.bound_2 * (1 - 1e-12);
    r.note = "sufficient condition only; it is conservative and larger derivative gains can be stable";
    return r;
}

// ============================================================================
// Resonance peaks
// ============================================================================

struct Peak {
    double f_hz;
    double mag_db;
};

/// Grid argmax of the magnitude refined by a parabola through three points in (log f, dB).
inline Peak resonance_peak(const BodeTable& t) {
    const auto& r = t.rows;
    if (r.size() < 3) fail(ErrorCode::NoInteriorPeak, "Bode table too short for a peak");
    std::size_t k = 0;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i].mag_db > r[k].mag_db) k = i;
    if (k == 0 || k + 1 == r.size())
        fail(ErrorCode::NoInteriorPeak, "no interior maximum of |" + t.output + "/" + t.input + "|");

    const double x0 = std::log10(r[k - 1].f_hz), x1 = std::log10(r[k].f_hz), x2 = std::log10(r[k + 1].f_hz);
    const double y0 = r[k - 1].mag_db, y1 = r[k].mag_db, y2 = r[k + 1].mag_db;
    const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
    const double a = (d12 - d01) / (x2 - x0);
    if (!(a < 0)) return {r[k].f_hz, y1};
    const double b = d01 - a * (x0 + x1);
    const double xv = std::clamp(-b / (2 * a), x0, x2);
    const double yv = y1 + b * (xv - x1) + a * (xv * xv - x1 * x1);
    return {std::pow(10.0, xv), yv};
}

// ============================================================================
// Sweeps
// ============================================================================

struct SweepChannel {
    std::string input, output;
};

struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

struct SweepEntry {
    std::vector<double> point;  ///< one value per axis
    bool ok = false;            ///< false if the model could not be built or analysed
    bool stable = false;
    double dominant_damping = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::optional<Peak>> peaks;  ///< per channel; empty when no interior peak
    std::string error;
};

struct SweepResult {
    std::vector<std::string> axes;
    std::vector<SweepChannel> channels;
    std::vector<SweepEntry> entries;  ///< row-major over the axes, first axis slowest
};

struct SweepOptions {
    double f_min = kDefaultBodeOmegaMin * 0.5 / std::numbers::pi;
    double f_max = kDefaultBodeOmegaMax * 0.5 / std::numbers::pi;
    int points = kDefaultBodePoints;
    unsigned threads = 0;  ///< 0 = hardware concurrency
};

using SweepBuilder = std::function<SystemConfig(const std::map<std::string, double>&)>;

namespace detail {

inline SweepEntry sweep_point(const SweepBuilder& builder, const std::vector<SweepAxis>& axes,
                              const std::vector<double>& point, const std::vector<SweepChannel>& channels,
                              const SweepOptions& opt) {
    SweepEntry e;
    e.point = point;
    try {
        std::map<std::string, double> values;
        for (std::size_t a = 0; a < axes.size(); ++a) values[axes[a].name] = point[a];
        const ClosedLoopModel m = build(builder(values));
        const auto v = stability(m);
        e.stable = v.stable;
        e.dominant_damping = v.dominant_damping;
        for (const auto& ch : channels) {
            const auto t = bode(m, ch.input, ch.output, opt.f_min, opt.f_max, opt.points);
            try {
                e.peaks.emplace_back(resonance_peak(t));
            } catch (const Error& err) {
                if (err.code() != ErrorCode::NoInteriorPeak) throw;
                e.peaks.emplace_back(std::nullopt);
            }
        }
        e.ok = true;
    } catch (const Error& err) {
        e.ok = false;
        e.peaks.assign(channels.size(), std::nullopt);
        e.error = std::string(code_name(err.code())) + ": " + err.detail();
    }
    return e;
}

}  // namespace detail

/// Cartesian sweep. Points are evaluated concurrently; failures are recorded per point.
inline SweepResult sweep(const SweepBuilder& builder, const std::vector<SweepAxis>& axes,
                         const std::vector<SweepChannel>& channels, const SweepOptions& opt = {}) {
    require(!axes.empty(), ErrorCode::InvalidArgument, "sweep needs at least one axis");
    for (const auto& a : axes) require(!a.values.empty(), ErrorCode::InvalidArgument, "sweep axis '" + a.name + "' is empty");

    std::vector<std::vector<double>> points{{}};
    for (const auto& a : axes) {
        std::vector<std::vector<double>> next;
        for (const auto& p : points)
            for (double v : a.values) {
                auto q = p;
                q.push_back(v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }

    SweepResult res;
    for (const auto& a : axes) res.axes.push_back(a.name);
    res.channels = channels;
    res.entries.resize(points.size());

    unsigned nt = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = std::min<unsigned>(nt, static_cast<unsigned>(points.size()));
    if (nt <= 1) {
        for (std::size_t i = 0; i < points.size(); ++i) res.entries[i] = detail::sweep_point(builder, axes, points[i], channels, opt);
        return res;
    }
    std::vector<std::future<void>> workers;
    for (unsigned w = 0; w < nt; ++w)
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < points.size(); i += nt)
                res.entries[i] = detail::sweep_point(builder, axes, points[i], channels, opt);
        }));
    for (auto& f : workers) f.get();
    return res;
}

// ============================================================================
// Spectra of step responses
// ============================================================================

/// Frequency of the largest spectral line above f_min (Hz).
inline Peak spectrum_peak(const Spectrum& s, double f_min = 0.0) {
    std::optional<std::size_t> best;
    for (std::size_t k = 1; k < s.freq_hz.size(); ++k)
        if (s.freq_hz[k] >= f_min && (!best || s.magnitude[k] > s.magnitude[*best])) best = k;
    if (!best) fail(ErrorCode::NoInteriorPeak, "spectrum has no line above the requested frequency");
    return {s.freq_hz[*best], to_db(s.magnitude[*best])};
}

}  // namespace gfmnet
