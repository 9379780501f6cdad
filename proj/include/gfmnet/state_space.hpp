#pragma once

#include <gfmnet/rational_tf.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gfmnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// ============================================================================
// StateSpace
// ============================================================================

class StateSpace {
public:
    StateSpace() = default;
    StateSpace(Matrix A, Matrix B, Matrix C, Matrix D,
               std::vector<std::string> inputs, std::vector<std::string> outputs)
        : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), D_(std::move(D)),
          inputs_(std::move(inputs)), outputs_(std::move(outputs)) {
        validate();
    }

    [[nodiscard]] const Matrix& A() const noexcept { return A_; }
    [[nodiscard]] const Matrix& B() const noexcept { return B_; }
    [[nodiscard]] const Matrix& C() const noexcept { return C_; }
    [[nodiscard]] const Matrix& D() const noexcept { return D_; }
    [[nodiscard]] const std::vector<std::string>& input_names() const noexcept { return inputs_; }
    [[nodiscard]] const std::vector<std::string>& output_names() const noexcept { return outputs_; }

    [[nodiscard]] int num_states() const noexcept { return static_cast<int>(A_.rows()); }
    [[nodiscard]] int num_inputs() const noexcept { return static_cast<int>(inputs_.size()); }
    [[nodiscard]] int num_outputs() const noexcept { return static_cast<int>(outputs_.size()); }

    [[nodiscard]] bool has_input(const std::string& n) const { return index_of(inputs_, n) >= 0; }
    [[nodiscard]] bool has_output(const std::string& n) const { return index_of(outputs_, n) >= 0; }

    [[nodiscard]] int input_index(const std::string& n) const {
        const int i = index_of(inputs_, n);
        if (i < 0) fail(ErrorCode::ChannelNotFound, "no input channel '" + n + "'");
        return i;
    }
    [[nodiscard]] int output_index(const std::string& n) const {
        const int i = index_of(outputs_, n);
        if (i < 0) fail(ErrorCode::ChannelNotFound, "no output channel '" + n + "'");
        return i;
    }

    /// Subsystem restricted to the given channels (order as given).
    [[nodiscard]] StateSpace select(const std::vector<std::string>& ins, const std::vector<std::string>& outs) const {
        Matrix B(num_states(), ins.size()), C(outs.size(), num_states()), D(outs.size(), ins.size());
        for (std::size_t j = 0; j < ins.size(); ++j) B.col(j) = B_.col(input_index(ins[j]));
        for (std::size_t i = 0; i < outs.size(); ++i) {
            const int oi = output_index(outs[i]);
            C.row(i) = C_.row(oi);
            for (std::size_t j = 0; j < ins.size(); ++j) D(i, j) = D_(oi, input_index(ins[j]));
        }
        return {A_, B, C, D, ins, outs};
    }

    /// Same system in coordinates x = T z.
    [[nodiscard]] StateSpace similarity(const Matrix& T) const {
        Eigen::PartialPivLU<Matrix> lu(T);
        return {lu.solve(A_ * T), lu.solve(B_), C_ * T, D_, inputs_, outputs_};
    }

    [[nodiscard]] StateSpace renamed(std::vector<std::string> ins, std::vector<std::string> outs) const {
        return {A_, B_, C_, D_, std::move(ins), std::move(outs)};
    }

private:
    static int index_of(const std::vector<std::string>& v, const std::string& n) {
        auto it = std::find(v.begin(), v.end(), n);
        return it == v.end() ? -1 : static_cast<int>(it - v.begin());
    }

    void validate() const {
        const auto n = A_.rows();
        require(A_.cols() == n, ErrorCode::InvalidArgument, "A must be square");
        require(B_.rows() == n && C_.cols() == n, ErrorCode::InvalidArgument, "B/C state dimension mismatch");
        require(D_.rows() == C_.rows() && D_.cols() == B_.cols(), ErrorCode::InvalidArgument, "D dimension mismatch");
        require(static_cast<Eigen::Index>(inputs_.size()) == B_.cols(), ErrorCode::InvalidArgument, "input name count mismatch");
        require(static_cast<Eigen::Index>(outputs_.size()) == C_.rows(), ErrorCode::InvalidArgument, "output name count mismatch");
        require(A_.allFinite() && B_.allFinite() && C_.allFinite() && D_.allFinite(), ErrorCode::InvalidArgument, "non-finite state-space entry");
        require(std::set<std::string>(inputs_.begin(), inputs_.end()).size() == inputs_.size(), ErrorCode::InvalidArgument, "duplicate input name");
        require(std::set<std::string>(outputs_.begin(), outputs_.end()).size() == outputs_.size(), ErrorCode::InvalidArgument, "duplicate output name");
    }

    Matrix A_, B_, C_, D_;
    std::vector<std::string> inputs_, outputs_;
};

/// Static gain block.
inline StateSpace static_gain(double k, const std::string& in, const std::string& out) {
    return {Matrix(0, 0), Matrix(0, 1), Matrix(1, 0), Matrix::Constant(1, 1, k), {in}, {out}};
}

/// Controllable canonical realization of a proper scalar TF.
inline StateSpace tf_to_ss(const RationalTF& tf, const std::string& in = "u", const std::string& out = "y") {
    if (!tf.is_proper()) fail(ErrorCode::ImproperTF, "deg num > deg den, use tau_kd > 0 for a realizable differentiator");
    if (tf.is_zero()) return static_gain(0.0, in, out);
    const int n = tf.den().degree();
    const double lead = tf.den().leading();
    if (n == 0) return static_gain(tf.num().coeff(0) / lead, in, out);

    std::vector<double> a(n), b(n + 1);
    for (int k = 0; k < n; ++k) a[k] = tf.den().coeff(k) / lead;
    for (int k = 0; k <= n; ++k) b[k] = tf.num().coeff(k) / lead;
    const double d = b[n];

    Matrix A = Matrix::Zero(n, n), B = Matrix::Zero(n, 1), C(1, n), D(1, 1);
    for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
    for (int k = 0; k < n; ++k) {
        A(n - 1, k) = -a[k];
        C(0, k) = b[k] - d * a[k];
    }
    B(n - 1, 0) = 1.0;
    D(0, 0) = d;
    return {A, B, C, D, {in}, {out}};
}

// ============================================================================
// compose
// ============================================================================

/// Signal `from` (block output, or declared external input) feeds block input `to` with `gain`.
/// Several connections into the same input are summed.
struct Connection {
    std::string from;
    std::string to;
    double gain = 1.0;
};

inline StateSpace compose(const std::vector<StateSpace>& blocks,
                          const std::vector<Connection>& connections,
                          const std::vector<std::string>& external_inputs,
                          const std::vector<std::string>& external_outputs) {
    int n = 0, m = 0, p = 0;
    for (const auto& b : blocks) {
        n += b.num_states();
        m += b.num_inputs();
        p += b.num_outputs();
    }
    Matrix A = Matrix::Zero(n, n), B = Matrix::Zero(n, m), C = Matrix::Zero(p, n), D = Matrix::Zero(p, m);
    std::map<std::string, int> in_idx, out_idx, ext_idx;
    {
        int xs = 0, us = 0, ys = 0;
        for (const auto& b : blocks) {
            const int bn = b.num_states(), bm = b.num_inputs(), bp = b.num_outputs();
            A.block(xs, xs, bn, bn) = b.A();
            B.block(xs, us, bn, bm) = b.B();
            C.block(ys, xs, bp, bn) = b.C();
            D.block(ys, us, bp, bm) = b.D();
            for (int j = 0; j < bm; ++j)
                require(in_idx.emplace(b.input_names()[j], us + j).second, ErrorCode::InvalidArgument,
                        "block input name '" + b.input_names()[j] + "' used twice");
            for (int i = 0; i < bp; ++i)
                require(out_idx.emplace(b.output_names()[i], ys + i).second, ErrorCode::InvalidArgument,
                        "block output name '" + b.output_names()[i] + "' used twice");
            xs += bn;
            us += bm;
            ys += bp;
        }
    }
    for (std::size_t w = 0; w < external_inputs.size(); ++w) {
        require(!out_idx.count(external_inputs[w]), ErrorCode::InvalidArgument,
                "external input '" + external_inputs[w] + "' shadows a block output");
        require(ext_idx.emplace(external_inputs[w], static_cast<int>(w)).second, ErrorCode::InvalidArgument,
                "external input '" + external_inputs[w] + "' declared twice");
    }
    const int nw = static_cast<int>(external_inputs.size());

    Matrix K = Matrix::Zero(m, p), E = Matrix::Zero(m, nw);
    for (const auto& c : connections) {
        auto ti = in_idx.find(c.to);
        if (ti == in_idx.end()) fail(ErrorCode::ChannelNotFound, "connection target '" + c.to + "' is not a block input");
        if (auto fo = out_idx.find(c.from); fo != out_idx.end()) {
            K(ti->second, fo->second) += c.gain;
        } else if (auto fw = ext_idx.find(c.from); fw != ext_idx.end()) {
            E(ti->second, fw->second) += c.gain;
        } else {
            fail(ErrorCode::ChannelNotFound, "connection source '" + c.from + "' is neither a block output nor an external input");
        }
    }

    // y = C x + D u, u = K y + E w  =>  (I - D K) y = C x + D E w
    const Matrix loop = Matrix::Identity(p, p) - D * K;
    if (p > 0) {
        Eigen::JacobiSVD<Matrix> svd(loop);
        const auto& sv = svd.singularValues();
        const double cond = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
        if (!(cond < 1e12)) fail(ErrorCode::AlgebraicLoop, "I - D_loop condition number " + std::to_string(cond));
    }
    Eigen::PartialPivLU<Matrix> lu(loop);
    const Matrix FC = p > 0 ? Matrix(lu.solve(C)) : Matrix(0, n);
    const Matrix FDE = p > 0 ? Matrix(lu.solve(D * E)) : Matrix(0, nw);

    Matrix Acl = A + B * K * FC;
    Matrix Bcl = B * (K * FDE + E);

    Matrix Ccl(external_outputs.size(), n), Dcl(external_outputs.size(), nw);
    for (std::size_t i = 0; i < external_outputs.size(); ++i) {
        auto fo = out_idx.find(external_outputs[i]);
        if (fo == out_idx.end()) fail(ErrorCode::ChannelNotFound, "external output '" + external_outputs[i] + "' is not a block output");
        Ccl.row(i) = FC.row(fo->second);
        Dcl.row(i) = FDE.row(fo->second);
    }
    return {Acl, Bcl, Ccl, Dcl, external_inputs, external_outputs};
}

/// Serial connection: output `out_a` of a feeds input `in_b` of b.
inline StateSpace series(const StateSpace& a, const StateSpace& b) {
    require(a.num_inputs() == 1 && a.num_outputs() == 1 && b.num_inputs() == 1 && b.num_outputs() == 1,
            ErrorCode::InvalidArgument, "series() expects SISO blocks");
    const StateSpace ra = a.renamed({"#a.in"}, {"#a.out"});
    const StateSpace rb = b.renamed({"#b.in"}, {"#b.out"});
    StateSpace s = compose({ra, rb}, {{"u", "#a.in", 1.0}, {"#a.out", "#b.in", 1.0}}, {"u"}, {"#b.out"});
    return s.renamed({a.input_names()[0]}, {b.output_names()[0]});
}

// ============================================================================
// Balancing, poles, DC gain
// ============================================================================

/// Diagonal similarity scaling d with A_bal = diag(d)^-1 A diag(d) (power-of-two radix).
inline Vector balance_scaling(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    Vector d = Vector::Ones(n);
    Matrix M = A;
    constexpr double radix = 2.0, sqrdx = 4.0;
    for (int iter = 0; iter < 200; ++iter) {
        bool done = true;
        for (int i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(M(j, i));
                r += std::abs(M(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0, g = r / radix;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                d(i) *= f;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
        if (done) break;
    }
    return d;
}

/// Balanced copy of ss (exact similarity, scaling by powers of two).
inline StateSpace balanced(const StateSpace& ss) {
    if (ss.num_states() == 0) return ss;
    const Vector d = balance_scaling(ss.A());
    const Vector di = d.cwiseInverse();
    return {di.asDiagonal() * ss.A() * d.asDiagonal(), di.asDiagonal() * ss.B(), ss.C() * d.asDiagonal(), ss.D(),
            ss.input_names(), ss.output_names()};
}

struct Pole {
    cplx value;
    bool structural = false;
};

/// Structural tolerance relative to the balanced A norm.
inline constexpr double kStructuralTol = 1e-7;

namespace detail {

inline int nullity(const Matrix& A, double tol) {
    if (A.rows() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(A);
    int k = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) <= tol) ++k;
    return k;
}

}  // namespace detail

/// Eigenvalues of A. Near-zero eigenvalues are structural when the zero eigenvalue is
/// semisimple (geometric multiplicity equals the size of the near-zero cluster).
inline std::vector<Pole> poles(const StateSpace& ss) {
    const int n = ss.num_states();
    if (n == 0) return {};
    require(ss.A().allFinite(), ErrorCode::InvalidArgument, "non-finite A");
    const Matrix Ab = balanced(ss).A();
    Eigen::EigenSolver<Matrix> es(Ab, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue iteration did not converge");
    const double tol = kStructuralTol * Ab.norm();
    std::vector<Pole> out(n);
    int cluster = 0;
    for (int i = 0; i < n; ++i) {
        out[i].value = es.eigenvalues()(i);
        if (std::abs(out[i].value) <= tol) ++cluster;
    }
    if (cluster > 0 && detail::nullity(Ab, tol) >= cluster)
        for (auto& p : out) p.structural = std::abs(p.value) <= tol;
    std::sort(out.begin(), out.end(), [](const Pole& a, const Pole& b) {
        if (a.value.real() != b.value.real()) return a.value.real() > b.value.real();
        return a.value.imag() > b.value.imag();
    });
    return out;
}

namespace detail {

/// G(0) of x' = Ax + Bu, y = Cx + Du after projecting onto span(Q) (Q orthonormal, invariant complement).
inline Matrix projected_gain(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& D,
                             const Matrix& Qright, const Matrix& Qleft) {
    const Matrix Ar = Qleft.transpose() * A * Qright;
    Eigen::FullPivLU<Matrix> lu(Ar);
    require(lu.isInvertible(), ErrorCode::NoDcGain, "reduced state matrix is singular");
    return D - C * Qright * lu.solve(Qleft.transpose() * B);
}

}  // namespace detail

/// DC gain on the requested channels, deflating structural zero modes first.
inline Matrix dc_gain(const StateSpace& ss, const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    const StateSpace sb = balanced(ss.select(inputs, outputs));
    const int n = sb.num_states();
    const Matrix& A = sb.A();
    if (n == 0) return sb.D();

    const double anorm = A.norm();
    const double tol = kStructuralTol * std::max(anorm, 1e-300);
    Eigen::EigenSolver<Matrix> es(A, false);
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (std::abs(es.eigenvalues()(i)) <= tol) ++k;
    if (k == 0) {
        Eigen::PartialPivLU<Matrix> lu(A);
        return sb.D() - sb.C() * lu.solve(sb.B());
    }

    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    int nul = 0;
    for (int i = 0; i < n; ++i)
        if (svd.singularValues()(i) <= tol) ++nul;
    const Matrix V0 = svd.matrixV().rightCols(k), Vq = svd.matrixV().leftCols(n - k);
    const Matrix U0 = svd.matrixU().rightCols(k), Uq = svd.matrixU().leftCols(n - k);

    const int p = sb.num_outputs(), m = sb.num_inputs();
    const Matrix CV = sb.C() * V0;
    const Matrix UB = U0.transpose() * sb.B();
    constexpr double ctol = 1e-8;
    std::vector<bool> unobservable(p), uncontrollable(m);
    for (int i = 0; i < p; ++i) unobservable[i] = CV.row(i).norm() <= ctol * (sb.C().row(i).norm() + 1e-300);
    for (int j = 0; j < m; ++j) uncontrollable[j] = UB.col(j).norm() <= ctol * (sb.B().col(j).norm() + 1e-300);

    std::vector<std::string> bad;
    if (nul < k) {
        bad.push_back("zero eigenvalue is not semisimple");
    } else {
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < m; ++j)
                if (!unobservable[i] && !uncontrollable[j]) bad.push_back(sb.input_names()[j] + "->" + sb.output_names()[i]);
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << "integrating behavior on";
        for (const auto& b : bad) os << ' ' << b;
        fail(ErrorCode::NoDcGain, os.str());
    }

    Matrix G(p, m);
    const bool all_rows = std::all_of(unobservable.begin(), unobservable.end(), [](bool b) { return b; });
    const bool all_cols = std::all_of(uncontrollable.begin(), uncontrollable.end(), [](bool b) { return b; });
    if (all_rows) return detail::projected_gain(A, sb.B(), sb.C(), sb.D(), Vq, Vq);
    if (all_cols) return detail::projected_gain(A, sb.B(), sb.C(), sb.D(), Uq, Uq);
    const Matrix Gr = detail::projected_gain(A, sb.B(), sb.C(), sb.D(), Vq, Vq);
    const Matrix Gl = detail::projected_gain(A, sb.B(), sb.C(), sb.D(), Uq, Uq);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < m; ++j) G(i, j) = unobservable[i] ? Gr(i, j) : Gl(i, j);
    return G;
}

inline Matrix dc_gain(const StateSpace& ss) { return dc_gain(ss, ss.input_names(), ss.output_names()); }

inline double dc_gain(const StateSpace& ss, const std::string& input, const std::string& output) {
    return dc_gain(ss, std::vector<std::string>{input}, std::vector<std::string>{output})(0, 0);
}

}  // namespace gfmnet
