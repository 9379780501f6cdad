#pragma once

#include <gfmnet/state_space.hpp>

#include <json.hpp>

#include <fstream>
#include <functional>
#include <optional>
#include <numbers>
#include <numeric>

namespace gfmnet {

enum class NodeKind { SM, VSC, LoadAC, InfiniteBus, DcInterior };

inline std::string_view kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::SM: return "SM";
        case NodeKind::VSC: return "VSC";
        case NodeKind::LoadAC: return "LoadAC";
        case NodeKind::InfiniteBus: return "InfiniteBus";
        case NodeKind::DcInterior: return "DcInterior";
    }
    return "?";
}

inline NodeKind parse_kind(const std::string& s) {
    for (NodeKind k : {NodeKind::SM, NodeKind::VSC, NodeKind::LoadAC, NodeKind::InfiniteBus, NodeKind::DcInterior})
        if (kind_name(k) == s) return k;
    fail(ErrorCode::ValidationError, "unknown node kind '" + s + "'");
}

struct AcNode {
    std::string name;
    NodeKind kind = NodeKind::LoadAC;
    double V_star = 400.0;  ///< V, phase-to-phase
};

struct DcNode {
    std::string name;
    NodeKind kind = NodeKind::VSC;
    double v_star = 800.0;      ///< V
    double capacitance = 0.0;   ///< F, shunt capacitance at interior nodes
};

struct AcEdge {
    std::string from, to;
    double l = 0.0;  ///< H
    double r = 0.0;  ///< Ohm
    double l_virt_from = 0.0, l_virt_to = 0.0;
    double r_virt_from = 0.0, r_virt_to = 0.0;

    [[nodiscard]] double l_virtual() const { return l_virt_from + l_virt_to; }
    [[nodiscard]] double r_virtual() const { return r_virt_from + r_virt_to; }
    /// (l~ + l)/l
    [[nodiscard]] double k() const { return (l_virtual() + l) / l; }
    /// (r~ + r)/l, a rate in 1/s
    [[nodiscard]] double rho() const { return (r_virtual() + r) / l; }
    [[nodiscard]] AcEdge flipped() const {
        return {to, from, l, r, l_virt_to, l_virt_from, r_virt_to, r_virt_from};
    }
};

struct DcEdge {
    std::string from, to;
    double l = 0.0;  ///< H
    double r = 0.0;  ///< Ohm
    [[nodiscard]] DcEdge flipped() const { return {to, from, l, r}; }
};

// ============================================================================
// Edge transfer functions
// ============================================================================

/// Angle-difference to power: k V^2 w* / (l g(s)), g = s^2 + 2 rho s + rho^2 + (k w*)^2.
inline RationalTF ac_edge_tf(const AcEdge& e, double V_star, double omega_star) {
    require(e.l > 0, ErrorCode::InvalidArgument, "AC edge inductance must be positive");
    const double k = e.k(), rho = e.rho();
    const double w = k * V_star * V_star * omega_star / e.l;
    return {Polynomial::constant(w), Polynomial({rho * rho + k * k * omega_star * omega_star, 2.0 * rho, 1.0})};
}

/// Voltage difference to power: v*_n / (l s + r).
inline RationalTF dc_edge_tf(const DcEdge& e, double v_star_n) {
    require(e.l > 0, ErrorCode::InvalidArgument, "DC edge inductance must be positive");
    return {Polynomial::constant(v_star_n), Polynomial::linear(e.l, e.r)};
}

/// Node voltage to loss: (v*_n - v*_k) / (l s + r).
inline RationalTF dc_loss_tf(const DcEdge& e, double v_star_diff) {
    require(e.l > 0, ErrorCode::InvalidArgument, "DC edge inductance must be positive");
    return {Polynomial::constant(v_star_diff), Polynomial::linear(e.l, e.r)};
}

// ============================================================================
// HybridGraph
// ============================================================================

class HybridGraph {
public:
    HybridGraph() = default;
    HybridGraph(std::vector<AcNode> ac_nodes, std::vector<DcNode> dc_nodes, std::vector<AcEdge> ac_edges,
                std::vector<DcEdge> dc_edges, double omega_star = 2.0 * std::numbers::pi * 50.0)
        : dc_nodes_(std::move(dc_nodes)), ac_edges_(std::move(ac_edges)), dc_edges_(std::move(dc_edges)), omega_star_(omega_star) {
        // load nodes last, otherwise declaration order
        std::stable_partition(ac_nodes.begin(), ac_nodes.end(), [](const AcNode& n) { return n.kind != NodeKind::LoadAC; });
        ac_nodes_ = std::move(ac_nodes);
        validate();
    }

    [[nodiscard]] const std::vector<AcNode>& ac_nodes() const noexcept { return ac_nodes_; }
    [[nodiscard]] const std::vector<DcNode>& dc_nodes() const noexcept { return dc_nodes_; }
    [[nodiscard]] const std::vector<AcEdge>& ac_edges() const noexcept { return ac_edges_; }
    [[nodiscard]] const std::vector<DcEdge>& dc_edges() const noexcept { return dc_edges_; }
    [[nodiscard]] double omega_star() const noexcept { return omega_star_; }

    [[nodiscard]] int n_load() const {
        return static_cast<int>(std::count_if(ac_nodes_.begin(), ac_nodes_.end(), [](const AcNode& n) { return n.kind == NodeKind::LoadAC; }));
    }
    [[nodiscard]] int n_bar() const { return static_cast<int>(ac_nodes_.size()) - n_load(); }

    [[nodiscard]] int ac_index(const std::string& name) const { return find(ac_nodes_, name, "AC"); }
    [[nodiscard]] int dc_index(const std::string& name) const { return find(dc_nodes_, name, "DC"); }
    [[nodiscard]] bool has_ac(const std::string& name) const { return try_find(ac_nodes_, name) >= 0; }
    [[nodiscard]] bool has_dc(const std::string& name) const { return try_find(dc_nodes_, name) >= 0; }
    [[nodiscard]] const AcNode& ac_node(const std::string& name) const { return ac_nodes_[ac_index(name)]; }
    [[nodiscard]] const DcNode& dc_node(const std::string& name) const { return dc_nodes_[dc_index(name)]; }

    /// Squared voltage used for the edge linearization, V*_n V*_k.
    [[nodiscard]] double edge_voltage_sq(const AcEdge& e) const { return ac_node(e.from).V_star * ac_node(e.to).V_star; }

    /// Node-edge incidence (+1 at `from`, -1 at `to`), rows in node order.
    [[nodiscard]] Matrix ac_incidence() const {
        Matrix B = Matrix::Zero(ac_nodes_.size(), ac_edges_.size());
        for (std::size_t e = 0; e < ac_edges_.size(); ++e) {
            B(ac_index(ac_edges_[e].from), e) = 1.0;
            B(ac_index(ac_edges_[e].to), e) = -1.0;
        }
        return B;
    }
    [[nodiscard]] Matrix dc_incidence() const {
        Matrix B = Matrix::Zero(dc_nodes_.size(), dc_edges_.size());
        for (std::size_t e = 0; e < dc_edges_.size(); ++e) {
            B(dc_index(dc_edges_[e].from), e) = 1.0;
            B(dc_index(dc_edges_[e].to), e) = -1.0;
        }
        return B;
    }

    /// Connected components of the AC graph (edges only), as lists of node indices.
    [[nodiscard]] std::vector<std::vector<int>> ac_components() const {
        const int n = static_cast<int>(ac_nodes_.size());
        std::vector<int> parent(n);
        std::iota(parent.begin(), parent.end(), 0);
        auto root = [&](int i) {
            while (parent[i] != i) i = parent[i] = parent[parent[i]];
            return i;
        };
        for (const auto& e : ac_edges_) parent[root(ac_index(e.from))] = root(ac_index(e.to));
        std::map<int, std::vector<int>> groups;
        for (int i = 0; i < n; ++i) groups[root(i)].push_back(i);
        std::vector<std::vector<int>> out;
        for (auto& [r, g] : groups) out.push_back(std::move(g));
        std::sort(out.begin(), out.end());
        return out;
    }

    /// DC edge count incident to a DC node.
    [[nodiscard]] int dc_degree(const std::string& name) const {
        return static_cast<int>(std::count_if(dc_edges_.begin(), dc_edges_.end(),
                                              [&](const DcEdge& e) { return e.from == name || e.to == name; }));
    }

private:
    template <class N>
    static int try_find(const std::vector<N>& v, const std::string& name) {
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i].name == name) return static_cast<int>(i);
        return -1;
    }
    template <class N>
    static int find(const std::vector<N>& v, const std::string& name, const char* what) {
        const int i = try_find(v, name);
        if (i < 0) fail(ErrorCode::ValidationError, std::string("unknown ") + what + " node '" + name + "'");
        return i;
    }

    void validate() const {
        const auto bad = [](const std::string& m) { fail(ErrorCode::ValidationError, m); };
        require(omega_star_ > 0, ErrorCode::ValidationError, "omega_star must be positive");
        std::set<std::string> ac_names, dc_names;
        for (const auto& n : ac_nodes_) {
            if (!ac_names.insert(n.name).second) bad("duplicate AC node '" + n.name + "'");
            if (n.kind == NodeKind::DcInterior) bad("DcInterior node '" + n.name + "' listed as AC node");
            if (!(n.V_star > 0)) bad("AC node '" + n.name + "' needs V_star > 0");
        }
        for (const auto& n : dc_nodes_) {
            if (!dc_names.insert(n.name).second) bad("duplicate DC node '" + n.name + "'");
            if (n.kind != NodeKind::VSC && n.kind != NodeKind::DcInterior) bad("DC node '" + n.name + "' must be VSC or DcInterior");
            if (!(n.v_star > 0)) bad("DC node '" + n.name + "' needs v_star > 0");
            if (n.capacitance < 0) bad("DC node '" + n.name + "' has negative capacitance");
            if (n.kind == NodeKind::DcInterior && ac_names.count(n.name)) bad("DcInterior node '" + n.name + "' also listed as AC node");
        }
        for (const auto& n : ac_nodes_)
            if (n.kind == NodeKind::VSC && (!dc_names.count(n.name) || dc_node(n.name).kind != NodeKind::VSC))
                bad("VSC node '" + n.name + "' missing from the DC node set");
        for (const auto& n : dc_nodes_)
            if (n.kind == NodeKind::VSC && (!ac_names.count(n.name) || ac_node(n.name).kind != NodeKind::VSC))
                bad("DC VSC node '" + n.name + "' missing from the AC node set");

        for (const auto& e : ac_edges_) {
            if (!ac_names.count(e.from) || !ac_names.count(e.to)) bad("AC edge references unknown node " + e.from + "-" + e.to);
            if (e.from == e.to) bad("AC self-loop at '" + e.from + "'");
            if (!(e.l > 0)) bad("AC edge " + e.from + "-" + e.to + " needs l > 0");
            if (e.r < 0 || e.l_virt_from < 0 || e.l_virt_to < 0 || e.r_virt_from < 0 || e.r_virt_to < 0)
                bad("AC edge " + e.from + "-" + e.to + " has negative impedance");
            if (ac_node(e.from).kind != NodeKind::VSC && (e.l_virt_from != 0 || e.r_virt_from != 0))
                bad("virtual impedance at non-VSC endpoint '" + e.from + "'");
            if (ac_node(e.to).kind != NodeKind::VSC && (e.l_virt_to != 0 || e.r_virt_to != 0))
                bad("virtual impedance at non-VSC endpoint '" + e.to + "'");
        }
        for (const auto& e : dc_edges_) {
            if (!dc_names.count(e.from) || !dc_names.count(e.to)) bad("DC edge references unknown node " + e.from + "-" + e.to);
            if (e.from == e.to) bad("DC self-loop at '" + e.from + "'");
            if (!(e.l > 0)) bad("DC edge " + e.from + "-" + e.to + " needs l > 0");
            if (e.r < 0) bad("DC edge " + e.from + "-" + e.to + " has negative resistance");
        }

        // connectivity over the union of AC and DC nodes (VSC names are shared)
        std::vector<std::string> all(ac_names.begin(), ac_names.end());
        for (const auto& n : dc_names)
            if (!ac_names.count(n)) all.push_back(n);
        if (all.empty()) bad("empty network");
        std::map<std::string, std::string> parent;
        for (const auto& n : all) parent[n] = n;
        std::function<std::string(const std::string&)> root = [&](const std::string& x) -> std::string {
            return parent[x] == x ? x : parent[x] = root(parent[x]);
        };
        for (const auto& e : ac_edges_) parent[root(e.from)] = root(e.to);
        for (const auto& e : dc_edges_) parent[root(e.from)] = root(e.to);
        const std::string r0 = root(all.front());
        for (const auto& n : all)
            if (root(n) != r0) bad("network graph is not connected ('" + n + "' is isolated from '" + all.front() + "')");
    }

    std::vector<AcNode> ac_nodes_;
    std::vector<DcNode> dc_nodes_;
    std::vector<AcEdge> ac_edges_;
    std::vector<DcEdge> dc_edges_;
    double omega_star_ = 2.0 * std::numbers::pi * 50.0;
};

// ============================================================================
// Laplacians and Kron reduction
// ============================================================================

struct AcLaplacian {
    CMatrix L;
    int n_bar = 0;
    int n_load = 0;

    [[nodiscard]] CMatrix L_bb() const { return L.topLeftCorner(n_bar, n_bar); }
    [[nodiscard]] CMatrix L_bl() const { return L.topRightCorner(n_bar, n_load); }
    [[nodiscard]] CMatrix L_lb() const { return L.bottomLeftCorner(n_load, n_bar); }
    [[nodiscard]] CMatrix L_ll() const { return L.bottomRightCorner(n_load, n_load); }
};

namespace detail {

inline cplx edge_eval_checked(const RationalTF& tf, cplx s, const std::string& what) {
    const cplx d = tf.den()(s);
    double scale = 0.0;
    cplx sp(1.0);
    for (double c : tf.den().coeffs()) {
        scale += std::abs(c) * std::abs(sp);
        sp *= s;
    }
    if (std::abs(d) <= 1e-14 * scale) {
        std::ostringstream os;
        os << what << " has a pole at s = " << s;
        fail(ErrorCode::EdgePole, os.str());
    }
    return tf.num()(s) / d;
}

}  // namespace detail

/// Weighted AC Laplacian in W/rad divided by S_base (pass 1 for SI).
inline AcLaplacian assemble_ac_laplacian(const HybridGraph& g, cplx s, double S_base = 1.0) {
    const int n = static_cast<int>(g.ac_nodes().size());
    AcLaplacian out{CMatrix::Zero(n, n), g.n_bar(), g.n_load()};
    for (const auto& e : g.ac_edges()) {
        const cplx w = detail::edge_eval_checked(ac_edge_tf(e, std::sqrt(g.edge_voltage_sq(e)), g.omega_star()), s,
                                                 "AC edge " + e.from + "-" + e.to) / S_base;
        const int a = g.ac_index(e.from), b = g.ac_index(e.to);
        out.L(a, a) += w;
        out.L(b, b) += w;
        out.L(a, b) -= w;
        out.L(b, a) -= w;
    }
    return out;
}

struct DcLaplacian {
    CMatrix L;      ///< row n: sum_k v*_n (v_n - v_k)/g_nk
    CVector loss;   ///< diagonal: sum_k (v*_n - v*_k)/g_nk
};

/// DC Laplacian and loss diagonal, W/V divided by S_base (pass 1 for SI).
inline DcLaplacian assemble_dc_laplacian(const HybridGraph& g, cplx s, double S_base = 1.0) {
    const int n = static_cast<int>(g.dc_nodes().size());
    DcLaplacian out{CMatrix::Zero(n, n), CVector::Zero(n)};
    for (const auto& e : g.dc_edges()) {
        const int a = g.dc_index(e.from), b = g.dc_index(e.to);
        const double va = g.dc_nodes()[a].v_star, vb = g.dc_nodes()[b].v_star;
        const std::string what = "DC edge " + e.from + "-" + e.to;
        const cplx ya = detail::edge_eval_checked(dc_edge_tf(e, va), s, what) / S_base;
        const cplx yb = detail::edge_eval_checked(dc_edge_tf(e, vb), s, what) / S_base;
        out.L(a, a) += ya;
        out.L(a, b) -= ya;
        out.L(b, b) += yb;
        out.L(b, a) -= yb;
        if (va != vb) {
            out.loss(a) += tf_eval(dc_loss_tf(e, va - vb), s) / S_base;
            out.loss(b) += tf_eval(dc_loss_tf(e, vb - va), s) / S_base;
        }
    }
    return out;
}

struct KronResult {
    CMatrix G_bar;  ///< n_bar x n_bar, angle to injected power
    CMatrix G_L;    ///< n_bar x n_load, consumed load power to injected power
};

/// Schur complement onto conversion nodes. G_L maps load consumption P_L to p_bar.
inline KronResult kron_reduce(const AcLaplacian& lap) {
    if (lap.n_load == 0) return {lap.L_bb(), CMatrix::Zero(lap.n_bar, 0)};
    const CMatrix Lll = lap.L_ll();
    // relative to the whole Laplacian, a 1x1 block is otherwise always well conditioned
    Eigen::JacobiSVD<CMatrix> svd(Lll);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    const double cond = smin > 0 ? std::max(lap.L.cwiseAbs().maxCoeff(), svd.singularValues()(0)) / smin : INFINITY;
    if (!(cond <= 1e12)) fail(ErrorCode::SingularLL, "L_L is singular (condition number " + std::to_string(cond) + ")");
    Eigen::PartialPivLU<CMatrix> lu(Lll);
    const CMatrix Y = lu.solve(lap.L_lb());                       // L_L^-1 L_Lb
    const CMatrix Z = lap.L_bl() * lu.inverse();                // L_bL L_L^-1
    return {lap.L_bb() - lap.L_bl() * Y, -Z};
}

// ============================================================================
// Load-node determinant condition (det L_L has no roots on the imaginary axis)
// ============================================================================

enum class A1Verdict { Holds, Fails, HoldsTrivially };

inline std::string_view verdict_name(A1Verdict v) {
    switch (v) {
        case A1Verdict::Holds: return "holds";
        case A1Verdict::Fails: return "fails";
        case A1Verdict::HoldsTrivially: return "holds_trivially";
    }
    return "?";
}

struct Assumption1Result {
    A1Verdict verdict = A1Verdict::Holds;
    std::vector<cplx> roots;  ///< zeros of det L_L(s) times the product of incident edge denominators
    std::string reason;
};

namespace detail {

/// Orthonormal basis of the null space of a full-row-rank matrix; throws on rank deficiency.
inline Matrix null_basis(const Matrix& B, const std::string& what) {
    const auto r = B.rows(), c = B.cols();
    if (r == 0) return Matrix::Identity(c, c);
    Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * sv(0)) ++rank;
    if (rank < r) fail(ErrorCode::DegenerateDeterminant, what + ": a load component has no path to a conversion node");
    return svd.matrixV().rightCols(c - r);
}

}  // namespace detail

inline Assumption1Result check_assumption1(const HybridGraph& g) {
    Assumption1Result res;
    const int nb = g.n_bar(), nl = g.n_load();
    if (nl == 0) {
        res.verdict = A1Verdict::HoldsTrivially;
        res.reason = "no load nodes";
        return res;
    }
    const Matrix B = g.ac_incidence();
    std::vector<int> incident;
    for (int e = 0; e < static_cast<int>(g.ac_edges().size()); ++e)
        if (B.col(e).tail(nl).cwiseAbs().sum() > 0) incident.push_back(e);

    const int E = static_cast<int>(incident.size());
    Matrix BL(nl, E);
    Vector winv(E), a1(E), a0(E);
    for (int j = 0; j < E; ++j) {
        const auto& e = g.ac_edges()[incident[j]];
        BL.col(j) = B.col(incident[j]).tail(nl);
        const RationalTF tf = ac_edge_tf(e, std::sqrt(g.edge_voltage_sq(e)), g.omega_star());
        winv(j) = 1.0 / tf.num().coeff(0);
        a1(j) = tf.den().coeff(1);
        a0(j) = tf.den().coeff(0);
    }
    const Matrix N = detail::null_basis(BL, "check_assumption1");
    const int m = static_cast<int>(N.cols());
    if (m > 0) {
        const Matrix M = N.transpose() * winv.asDiagonal() * N;
        const Matrix C1 = N.transpose() * (winv.cwiseProduct(a1)).asDiagonal() * N;
        const Matrix K = N.transpose() * (winv.cwiseProduct(a0)).asDiagonal() * N;
        Eigen::LLT<Matrix> llt(M);
        Matrix comp = Matrix::Zero(2 * m, 2 * m);
        comp.topRightCorner(m, m) = Matrix::Identity(m, m);
        comp.bottomLeftCorner(m, m) = -llt.solve(K);
        comp.bottomRightCorner(m, m) = -llt.solve(C1);
        Eigen::EigenSolver<Matrix> es(comp, false);
        for (int i = 0; i < 2 * m; ++i) res.roots.push_back(es.eigenvalues()(i));
    }
    std::sort(res.roots.begin(), res.roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
    });

    // i) identical edge dynamics within each AC component that contains loads
    bool uniform = true;
    for (const auto& comp : g.ac_components()) {
        std::set<int> nodes(comp.begin(), comp.end());
        if (std::none_of(comp.begin(), comp.end(), [&](int i) { return i >= nb; })) continue;
        std::optional<std::pair<double, double>> ref;
        for (const auto& e : g.ac_edges()) {
            if (!nodes.count(g.ac_index(e.from))) continue;
            const std::pair<double, double> key{e.rho(), e.k() * g.omega_star()};
            if (!ref) ref = key;
            else if (std::abs(key.first - ref->first) > 1e-12 * (std::abs(ref->first) + 1.0) ||
                     std::abs(key.second - ref->second) > 1e-12 * std::abs(ref->second))
                uniform = false;
        }
    }
    // ii) every load sees only conversion nodes, through at most two damped edges
    bool single_interior = true;
    for (int l = nb; l < nb + nl; ++l) {
        int degree = 0;
        for (const auto& e : g.ac_edges()) {
            const int a = g.ac_index(e.from), b = g.ac_index(e.to);
            if (a != l && b != l) continue;
            ++degree;
            if ((a >= nb && b >= nb) || !(e.rho() > 0)) single_interior = false;
        }
        if (degree > 2) single_interior = false;
    }

    const bool all_stable = std::all_of(res.roots.begin(), res.roots.end(), [](cplx r) { return r.real() < 0; });
    if (uniform) {
        res.verdict = A1Verdict::HoldsTrivially;
        res.reason = "identical line dynamics within each AC area";
    } else if (single_interior) {
        res.verdict = A1Verdict::HoldsTrivially;
        res.reason = "a single interior node between conversion nodes";
    } else {
        res.verdict = all_stable ? A1Verdict::Holds : A1Verdict::Fails;
        res.reason = all_stable ? "all roots in the open left half-plane" : "root with nonnegative real part";
    }
    return res;
}

// ============================================================================
// Realizations
// ============================================================================

/// State-space of the AC network with load nodes eliminated structurally.
/// Inputs: theta.<node> (rad) for conversion nodes, then P_L.<load> (p.u. consumption).
/// Outputs: P_ac.<node> (p.u. injection into the network) for conversion nodes.
inline StateSpace ac_network_ss(const HybridGraph& g, double S_base) {
    const int nb = g.n_bar(), nl = g.n_load();
    const int E = static_cast<int>(g.ac_edges().size());
    std::vector<std::string> ins, outs;
    for (int i = 0; i < nb; ++i) ins.push_back("theta." + g.ac_nodes()[i].name);
    for (int i = nb; i < nb + nl; ++i) ins.push_back("P_L." + g.ac_nodes()[i].name);
    for (int i = 0; i < nb; ++i) outs.push_back("P_ac." + g.ac_nodes()[i].name);

    const Matrix B = g.ac_incidence();
    const Matrix Bb = B.topRows(nb), BL = B.bottomRows(nl);
    Vector winv(E), a1(E), a0(E);
    for (int e = 0; e < E; ++e) {
        const auto& ed = g.ac_edges()[e];
        const RationalTF tf = ac_edge_tf(ed, std::sqrt(g.edge_voltage_sq(ed)), g.omega_star());
        winv(e) = S_base / tf.num().coeff(0);
        a1(e) = tf.den().coeff(1);
        a0(e) = tf.den().coeff(0);
    }

    // p = R u + N z with B_L p = u = -P_L
    const Matrix N = detail::null_basis(BL, "ac_network_ss");
    const int m = static_cast<int>(N.cols());
    Matrix R(E, nl);
    if (nl > 0) R = BL.transpose() * (BL * BL.transpose()).inverse();

    const Matrix NW = N.transpose() * winv.asDiagonal();
    const Matrix M = NW * N;
    const Matrix C1 = NW * a1.asDiagonal() * N;
    const Matrix K = NW * a0.asDiagonal() * N;
    const Matrix F2 = -NW * R;
    const Matrix F1 = -NW * a1.asDiagonal() * R;
    const Matrix F0 = -NW * a0.asDiagonal() * R;
    const Matrix Gt = N.transpose() * Bb.transpose();

    Eigen::LLT<Matrix> llt(M);
    const Matrix MiF2 = llt.solve(F2);
    const Matrix F1p = F1 - C1 * MiF2;
    const Matrix F0p = F0 - K * MiF2;
    const Matrix MiF1p = llt.solve(F1p);
    const Matrix MiK = llt.solve(K), MiC1 = llt.solve(C1), MiGt = llt.solve(Gt);
    const Matrix MiF0p = llt.solve(F0p);

    // x1 = z - M^-1 F2 u, x2 = (x1' - M^-1 F1' u) / Omega
    const double Om = E > 0 ? std::sqrt(a0.maxCoeff()) : 1.0;
    const int n = 2 * m, nin = nb + nl;
    Matrix A = Matrix::Zero(n, n), Bs = Matrix::Zero(n, nin), C = Matrix::Zero(nb, n), D = Matrix::Zero(nb, nin);
    A.topRightCorner(m, m) = Om * Matrix::Identity(m, m);
    A.bottomLeftCorner(m, m) = -MiK / Om;
    A.bottomRightCorner(m, m) = -MiC1;
    // columns for u = -P_L
    const Matrix Bu_top = MiF1p;
    const Matrix Bu_bot = (MiF0p - MiC1 * MiF1p) / Om;
    Bs.block(m, 0, m, nb) = MiGt / Om;
    Bs.block(0, nb, m, nl) = -Bu_top;
    Bs.block(m, nb, m, nl) = -Bu_bot;
    C.leftCols(m) = Bb * N;
    if (nl > 0) D.rightCols(nl) = -Bb * (R + N * MiF2);
    return {A, Bs, C, D, ins, outs};
}

/// State-space of the DC network. Inputs v_dc.<node> (p.u. of V_base_dc), outputs P_dc.<node>
/// (p.u. of S_base, power leaving the node into the DC network), all DC nodes in order.
inline StateSpace dc_network_ss(const HybridGraph& g, double S_base, double V_base_dc) {
    const int nd = static_cast<int>(g.dc_nodes().size());
    std::vector<std::string> ins, outs;
    for (const auto& n : g.dc_nodes()) {
        ins.push_back("v_dc." + n.name);
        outs.push_back("P_dc." + n.name);
    }
    int n = 0;
    for (const auto& e : g.dc_edges()) n += g.dc_node(e.from).v_star == g.dc_node(e.to).v_star ? 1 : 2;
    Matrix A = Matrix::Zero(n, n), B = Matrix::Zero(n, nd), C = Matrix::Zero(nd, n), D = Matrix::Zero(nd, nd);
    int x = 0;
    for (const auto& e : g.dc_edges()) {
        const int a = g.dc_index(e.from), b = g.dc_index(e.to);
        const double va = g.dc_nodes()[a].v_star, vb = g.dc_nodes()[b].v_star;
        if (va == vb) {
            // l i' = -r i + V_b (v_a - v_b)
            A(x, x) = -e.r / e.l;
            B(x, a) = V_base_dc / e.l;
            B(x, b) = -V_base_dc / e.l;
            C(a, x) = va / S_base;
            C(b, x) = -vb / S_base;
            x += 1;
        } else {
            // lambda_a, lambda_b filter each node voltage; i = lambda_a - lambda_b
            A(x, x) = A(x + 1, x + 1) = -e.r / e.l;
            B(x, a) = V_base_dc / e.l;
            B(x + 1, b) = V_base_dc / e.l;
            C(a, x) = (va + (va - vb)) / S_base;
            C(a, x + 1) = -va / S_base;
            C(b, x + 1) = (vb + (vb - va)) / S_base;
            C(b, x) = -vb / S_base;
            x += 2;
        }
    }
    return {A, B, C, D, ins, outs};
}

// ============================================================================
// Cable catalog
// ============================================================================

struct CableType {
    double r_ohm_per_km = 0.0;
    double x_ohm_per_km = 0.0;  ///< at the catalog frequency
    std::string source;
};

struct Segment {
    double r = 0.0;  ///< Ohm
    double l = 0.0;  ///< H
};

class CableCatalog {
public:
    CableCatalog() = default;

    static CableCatalog from_json(const nlohmann::json& j) {
        CableCatalog c;
        try {
            c.version_ = j.at("version").get<std::string>();
            c.f_hz_ = j.value("frequency_hz", 50.0);
            for (const auto& [name, v] : j.at("cables").items()) {
                CableType t{v.at("r_ohm_per_km").get<double>(), v.at("x_ohm_per_km").get<double>(), v.value("source", "")};
                require(t.r_ohm_per_km >= 0 && t.x_ohm_per_km > 0, ErrorCode::ValidationError, "cable '" + name + "' needs R >= 0, X > 0");
                c.cables_[name] = t;
            }
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, std::string("cable catalog: ") + e.what());
        }
        return c;
    }

    static CableCatalog load(const std::string& path) {
        std::ifstream in(path);
        if (!in) fail(ErrorCode::ParseError, "cannot open cable catalog '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::ParseError, "cable catalog '" + path + "': " + e.what());
        }
        return from_json(j);
    }

    [[nodiscard]] const std::string& version() const noexcept { return version_; }
    [[nodiscard]] double frequency_hz() const noexcept { return f_hz_; }
    [[nodiscard]] const std::map<std::string, CableType>& cables() const noexcept { return cables_; }

    [[nodiscard]] const CableType& at(const std::string& name) const {
        auto it = cables_.find(name);
        if (it == cables_.end()) fail(ErrorCode::ValidationError, "cable '" + name + "' not in catalog");
        return it->second;
    }

    /// Per-phase series impedance of a three-phase segment.
    [[nodiscard]] Segment ac_segment(const std::string& name, double length_m) const {
        const auto& c = at(name);
        return {c.r_ohm_per_km * length_m / 1000.0, c.x_ohm_per_km * length_m / 1000.0 / (2.0 * std::numbers::pi * f_hz_)};
    }

    /// Loop impedance of a two-conductor DC segment (go and return).
    [[nodiscard]] Segment dc_segment(const std::string& name, double length_m) const {
        Segment s = ac_segment(name, length_m);
        return {2.0 * s.r, 2.0 * s.l};
    }

private:
    std::string version_;
    double f_hz_ = 50.0;
    std::map<std::string, CableType> cables_;
};

}  // namespace gfmnet
