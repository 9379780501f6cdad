#pragma once

#include <gfmnet/rational_tf.hpp>

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace gfmnet {

enum class UnitSystem { SI, PerUnit };

// ============================================================================
// Parameter records
// ============================================================================

struct PerUnitBase {
    double S_base = 50e3;                          ///< VA
    double V_base_ac = 400.0;                      ///< V
    double V_base_dc = 800.0;                      ///< V
    double omega_base = 2.0 * std::numbers::pi * 50.0;  ///< rad/s

    void validate() const {
        require(S_base > 0 && V_base_ac > 0 && V_base_dc > 0 && omega_base > 0, ErrorCode::InvalidArgument,
                "per-unit base values must be positive");
    }
    friend bool operator==(const PerUnitBase&, const PerUnitBase&) = default;
};

struct SgParams {
    double S_n = 105e3;   ///< VA
    double P_max = 50e3;  ///< W
    double V_n = 400.0;   ///< V
    double n_r = 25.0;    ///< 1/s, mechanical
    double H = 0.1417;    ///< s
    double k_tg = 20.0;   ///< p.u.
    double k_omega = 0.5; ///< p.u.
    double T1 = 0.03;     ///< s
    double T2 = 0.1;      ///< s

    [[nodiscard]] double omega_r_star() const { return 2.0 * std::numbers::pi * n_r; }
    [[nodiscard]] double inertia_J() const { return 2.0 * H * S_n / (omega_r_star() * omega_r_star()); }

    void validate() const {
        require(S_n > 0 && P_max > 0 && V_n > 0 && n_r > 0 && H > 0, ErrorCode::InvalidArgument, "SG ratings and inertia must be positive");
        require(P_max <= S_n, ErrorCode::InvalidArgument, "P_max must not exceed S_n");
        require(k_tg >= 0 && k_omega >= 0 && T1 > 0 && T2 > 0, ErrorCode::InvalidArgument, "governor gains must be nonnegative, lags positive");
    }
    friend bool operator==(const SgParams&, const SgParams&) = default;
};

struct VscParams {
    double S_rated = 22e3;     ///< VA
    double V_rated = 800.0;    ///< V
    double C_dc = 3.1e-3;      ///< F
    double v_dc_star = 740.0;  ///< V
    double l_virtual = 2.3e-3; ///< H
    double r_virtual = 0.0;    ///< Ohm
    double v_dc_min = 650.0;   ///< V
    double v_dc_max = 850.0;   ///< V

    void validate() const {
        require(S_rated >= 0 && V_rated >= 0 && l_virtual >= 0 && r_virtual >= 0, ErrorCode::InvalidArgument, "VSC parameters must be nonnegative");
        require(C_dc > 0, ErrorCode::InvalidArgument, "C_dc must be positive");
        require(v_dc_star >= v_dc_min && v_dc_star <= v_dc_max, ErrorCode::InvalidArgument, "v_dc_star outside the DC voltage range");
    }
    friend bool operator==(const VscParams&, const VscParams&) = default;
};

struct PvParams {
    double V_mpp = 650.0;  ///< V
    double I_mpp = 28.0;   ///< A
    double V_oc = 812.5;   ///< V
    double I_sc = 31.1;    ///< A
    double V_op = 740.0;   ///< V

    void validate() const {
        require(0 < V_mpp && V_mpp < V_oc, ErrorCode::InvalidArgument, "need 0 < V_mpp < V_oc");
        require(0 < I_mpp && I_mpp < I_sc, ErrorCode::InvalidArgument, "need 0 < I_mpp < I_sc");
        require(V_mpp <= V_op && V_op < V_oc, ErrorCode::InvalidArgument, "need V_mpp <= V_op < V_oc");
    }
    friend bool operator==(const PvParams&, const PvParams&) = default;
};

struct GfmCtrlParams {
    double k_p = 0.025;  ///< p.u.
    double k_d = 0.01;   ///< p.u.
    double tau_kd = 0.01;  ///< s, 0 = ideal differentiator
    double omega_star = 2.0 * std::numbers::pi * 50.0;  ///< rad/s
    double v_dc_star = 1.0;  ///< p.u.

    [[nodiscard]] bool proper() const { return tau_kd > 0 || k_d == 0; }

    void validate() const {
        require(k_p > 0, ErrorCode::InvalidArgument, "k_p must be positive");
        require(k_d >= 0 && tau_kd >= 0, ErrorCode::InvalidArgument, "k_d and tau_kd must be nonnegative");
        require(omega_star > 0 && v_dc_star > 0, ErrorCode::InvalidArgument, "setpoints must be positive");
    }
    friend bool operator==(const GfmCtrlParams&, const GfmCtrlParams&) = default;
};

/// Droop-governor: -(k_omega + k_tg G1 G2) * scale.
struct GovernorParams {
    double k_tg = 20.0;
    double k_omega = 0.0;
    double T1 = 0.03;
    double T2 = 0.1;
    double scale = 1.0;
};

// ============================================================================
// Factories
// ============================================================================

/// Swing dynamics omega/P. SI: 1/(J omega_r* s). PerUnit: 1/(2H s) in the SG base.
inline RationalTF sm_tf(const SgParams& p, UnitSystem u = UnitSystem::SI) {
    p.validate();
    const double k = u == UnitSystem::SI ? p.inertia_J() * p.omega_r_star() : 2.0 * p.H;
    return {Polynomial::constant(1.0), Polynomial({0.0, k})};
}

/// Swing dynamics with power in p.u. of S_base: 1/(2H S_n/S_base s).
inline RationalTF sm_tf_pu(const SgParams& p, double S_base) {
    p.validate();
    require(S_base > 0, ErrorCode::InvalidArgument, "S_base must be positive");
    return {Polynomial::constant(1.0), Polynomial({0.0, 2.0 * p.H * p.S_n / S_base})};
}

/// DC-link energy balance v_dc/P. C_add is bus capacitance on the same DC node.
inline RationalTF vsc_dclink_tf(const VscParams& p, UnitSystem u = UnitSystem::SI,
                                const PerUnitBase& base = {}, double C_add = 0.0) {
    p.validate();
    require(C_add >= 0, ErrorCode::InvalidArgument, "C_add must be nonnegative");
    double k = (p.C_dc + C_add) * p.v_dc_star;
    if (u == UnitSystem::PerUnit) {
        base.validate();
        k *= base.V_base_dc / base.S_base;
    }
    return {Polynomial::constant(1.0), Polynomial({0.0, k})};
}

inline RationalTF governor_tf(const GovernorParams& g) {
    const Polynomial lags = Polynomial::linear(g.T1, 1.0) * Polynomial::linear(g.T2, 1.0);
    const RationalTF tg{Polynomial::constant(g.k_tg), lags};
    return (RationalTF::gain(g.k_omega) + tg).scaled(-g.scale);
}

/// Turbine/governor droop with the SG rating conversion S_n/P_max.
inline RationalTF turbine_governor_tf(const SgParams& p) {
    p.validate();
    return governor_tf({p.k_tg, p.k_omega, p.T1, p.T2, p.S_n / p.P_max});
}

/// PD droop k_p + k_d s/(tau_kd s + 1); improper k_p + k_d s when tau_kd = 0.
inline RationalTF gfm_ctrl_tf(const GfmCtrlParams& p) {
    p.validate();
    if (p.tau_kd == 0.0) return {Polynomial({p.k_p, p.k_d}), Polynomial::constant(1.0)};
    return {Polynomial({p.k_p, p.k_p * p.tau_kd + p.k_d}), Polynomial::linear(p.tau_kd, 1.0)};
}

// ============================================================================
// PV source
// ============================================================================

/// I(V) = I_sc (1 - C1 (exp(V/(C2 V_oc)) - 1)), C1 = 1/(exp(1/C2) - 1) so I(V_oc) = 0,
/// C2 chosen so that the power maximum sits at V_mpp.
class PvCurve {
public:
    explicit PvCurve(const PvParams& p) : p_(p) {
        p_.validate();
        auto dpdv = [this](double c2) {
            c2_ = c2;
            c1_ = 1.0 / std::expm1(1.0 / c2);
            return this->dpower(p_.V_mpp);
        };
        boost::uintmax_t iters = 200;
        const auto r = boost::math::tools::toms748_solve(
            dpdv, 0.01, 1.0, boost::math::tools::eps_tolerance<double>(50), iters);
        c2_ = 0.5 * (r.first + r.second);
        c1_ = 1.0 / std::expm1(1.0 / c2_);
    }

    [[nodiscard]] double c1() const noexcept { return c1_; }
    [[nodiscard]] double c2() const noexcept { return c2_; }
    [[nodiscard]] const PvParams& params() const noexcept { return p_; }

    [[nodiscard]] double current(double V) const {
        require(V >= 0 && V <= p_.V_oc * (1 + 1e-12), ErrorCode::OutOfRange, "PV voltage outside [0, V_oc]");
        return raw_current(V);
    }
    [[nodiscard]] double power(double V) const { return V * current(V); }

    /// Relative residual of the fitted current at the published MPP current.
    [[nodiscard]] double mpp_current_residual() const { return raw_current(p_.V_mpp) / p_.I_mpp - 1.0; }

private:
    [[nodiscard]] double raw_current(double V) const {
        return p_.I_sc * (1.0 - c1_ * std::expm1(V / (c2_ * p_.V_oc)));
    }
    [[nodiscard]] double dpower(double V) const {
        const double e = std::exp(V / (c2_ * p_.V_oc));
        return raw_current(V) - p_.I_sc * c1_ * V / (c2_ * p_.V_oc) * e;
    }

    PvParams p_;
    double c1_ = 0.0, c2_ = 0.0;
};

inline double pv_curve(const PvParams& p, double V) { return PvCurve(p).current(V); }

/// Power sensitivity k_pv = -(dP/dV at V_op) V_base_dc / S_base, central difference h = 0.1 V.
inline double pv_linearize(const PvParams& p, const PerUnitBase& base) {
    base.validate();
    const PvCurve curve(p);
    constexpr double h = 0.1;
    const double V = p.V_op;
    const double dpdv = (curve.power(std::min(V + h, p.V_oc)) - curve.power(V - h)) / (std::min(V + h, p.V_oc) - (V - h));
    if (!(dpdv < -1e-6 * p.I_mpp)) fail(ErrorCode::NotCurtailed, "dP/dV >= 0 at V_op, operating point is not curtailed");
    return -dpdv * base.V_base_dc / base.S_base;
}

/// Re-express a power/voltage sensitivity given in base `from` in base `to`.
inline double convert_k_pv(double k_pv, const PerUnitBase& from, const PerUnitBase& to) {
    return k_pv * (from.S_base / to.S_base) * (to.V_base_dc / from.V_base_dc);
}

}  // namespace gfmnet
