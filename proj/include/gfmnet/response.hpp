#pragma once

#include <gfmnet/state_space.hpp>

#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

#include <numbers>

namespace gfmnet {

/// n log-spaced points in [lo, hi].
inline std::vector<double> logspace(double lo, double hi, int n) {
    require(lo > 0 && hi > lo && n >= 2, ErrorCode::InvalidArgument, "logspace needs 0 < lo < hi and n >= 2");
    std::vector<double> v(n);
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < n; ++i) v[i] = std::pow(10.0, a + (b - a) * i / (n - 1));
    v.front() = lo;
    v.back() = hi;
    return v;
}

// ============================================================================
// Frequency response
// ============================================================================

struct FrequencyResponse {
    std::vector<double> omega;  ///< rad/s
    std::vector<CMatrix> values;
    std::vector<std::string> input_names, output_names;

    [[nodiscard]] cplx at(std::size_t k, int out, int in) const { return values[k](out, in); }
};

namespace detail {

inline void check_grid(const std::vector<double>& grid) {
    require(!grid.empty(), ErrorCode::InvalidArgument, "empty frequency grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        require(grid[i] > 0 && std::isfinite(grid[i]), ErrorCode::InvalidArgument, "frequency grid must be positive");
        if (i) require(grid[i] > grid[i - 1], ErrorCode::InvalidArgument, "frequency grid must be strictly increasing");
    }
}

/// C (sI - A)^-1 B + D for an already balanced system.
inline CMatrix eval_balanced(const StateSpace& sb, cplx s) {
    const int n = sb.num_states();
    if (n == 0) return sb.D().cast<cplx>();
    CMatrix M = -sb.A().cast<cplx>();
    M.diagonal().array() += s;
    Eigen::PartialPivLU<CMatrix> lu(M);
    const double rc = lu.rcond();
    if (!(rc > 1e-14)) {
        std::ostringstream os;
        os << "sI - A is singular at s = " << s.real() << (s.imag() < 0 ? "" : "+") << s.imag() << "j (rcond " << rc << ")";
        fail(ErrorCode::SingularAtFrequency, os.str());
    }
    return sb.C().cast<cplx>() * lu.solve(sb.B().cast<cplx>()) + sb.D().cast<cplx>();
}

}  // namespace detail

/// Transfer matrix at an arbitrary complex s.
inline CMatrix transfer_at(const StateSpace& ss, cplx s) { return detail::eval_balanced(balanced(ss), s); }

inline FrequencyResponse freq_response(const StateSpace& ss, const std::vector<double>& omega_grid) {
    detail::check_grid(omega_grid);
    const StateSpace sb = balanced(ss);
    FrequencyResponse fr{omega_grid, {}, ss.input_names(), ss.output_names()};
    fr.values.reserve(omega_grid.size());
    for (double w : omega_grid) fr.values.push_back(detail::eval_balanced(sb, cplx(0.0, w)));
    return fr;
}

// ============================================================================
// Time response
// ============================================================================

struct TimeSeries {
    double dt = 0.0;
    std::vector<double> t;
    std::vector<std::string> names;
    std::vector<std::vector<double>> channels;
    std::vector<std::string> warnings;

    [[nodiscard]] const std::vector<double>& channel(const std::string& n) const {
        auto it = std::find(names.begin(), names.end(), n);
        if (it == names.end()) fail(ErrorCode::ChannelNotFound, "no time-series channel '" + n + "'");
        return channels[it - names.begin()];
    }
};

/// Exact zero-order-hold discretization (Phi, Gamma) over step dt.
inline std::pair<Matrix, Matrix> zoh(const Matrix& A, const Matrix& B, double dt) {
    const auto n = A.rows(), m = B.cols();
    Matrix M = Matrix::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = A * dt;
    M.topRightCorner(n, m) = B * dt;
    const Matrix E = M.exp();
    return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

/// Response of all outputs to a step of `amplitude` on `input` applied at t = 0, zero initial state.
inline TimeSeries step_response(const StateSpace& ss, const std::string& input, double T, double dt, double amplitude = 1.0) {
    require(dt > 0 && T > 0 && dt <= T / 100.0 * (1 + 1e-12), ErrorCode::InvalidArgument, "step_response needs dt <= T/100");
    const int j = ss.input_index(input);
    const StateSpace sb = balanced(ss);
    const int n = sb.num_states(), p = sb.num_outputs();
    const auto N = static_cast<std::size_t>(std::floor(T / dt + 1e-9)) + 1;

    TimeSeries ts;
    ts.dt = dt;
    ts.names = ss.output_names();
    ts.t.resize(N);
    ts.channels.assign(p, std::vector<double>(N));

    for (const auto& pl : poles(ss))
        if (!pl.structural && pl.value.real() > 0) {
            std::ostringstream os;
            os << "UnstableWarning: non-structural pole " << pl.value.real() << (pl.value.imag() < 0 ? "" : "+") << pl.value.imag() << "j";
            ts.warnings.push_back(os.str());
            break;
        }

    const Vector bj = sb.B().col(j) * amplitude;
    const Vector dj = sb.D().col(j) * amplitude;
    Matrix Phi(n, n), Gam(n, 1);
    if (n > 0) std::tie(Phi, Gam) = zoh(sb.A(), bj, dt);
    Vector x = Vector::Zero(n);
    for (std::size_t k = 0; k < N; ++k) {
        ts.t[k] = static_cast<double>(k) * dt;
        const Vector y = sb.C() * x + dj;
        for (int i = 0; i < p; ++i) ts.channels[i][k] = y(i);
        if (n > 0) x = Phi * x + Gam.col(0);
    }
    return ts;
}

// ============================================================================
// Spectrum
// ============================================================================

struct Spectrum {
    std::vector<double> freq_hz;
    std::vector<double> magnitude;
};

/// Single-sided amplitude spectrum after mean removal (a sine of amplitude A on a bin peaks at A).
inline Spectrum fft_magnitude(const std::vector<double>& x, double dt) {
    const std::size_t N = x.size();
    if (N < 16) fail(ErrorCode::TooShort, "need at least 16 samples, got " + std::to_string(N));
    require(dt > 0, ErrorCode::InvalidArgument, "dt must be positive");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(N);
    std::vector<double> y(N);
    for (std::size_t i = 0; i < N; ++i) y[i] = x[i] - mean;

    Eigen::FFT<double> fft;
    std::vector<cplx> X;
    fft.fwd(X, y);

    Spectrum s;
    const std::size_t K = N / 2 + 1;
    s.freq_hz.resize(K);
    s.magnitude.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const bool edge = (k == 0) || (N % 2 == 0 && k == N / 2);
        s.freq_hz[k] = static_cast<double>(k) / (static_cast<double>(N) * dt);
        s.magnitude[k] = std::abs(X[k]) * (edge ? 1.0 : 2.0) / static_cast<double>(N);
    }
    return s;
}

inline Spectrum fft_magnitude(const TimeSeries& ts, const std::string& channel) { return fft_magnitude(ts.channel(channel), ts.dt); }

}  // namespace gfmnet
