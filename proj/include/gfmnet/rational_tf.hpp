#pragma once

#include <gfmnet/polynomial.hpp>

#include <string>

namespace gfmnet {

/// Scalar transfer function num(s)/den(s). No pole/zero cancellation is performed.
class RationalTF {
public:
    RationalTF() : num_(Polynomial::constant(0.0)), den_(Polynomial::constant(1.0)) {}
    RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        require(!den_.is_zero(), ErrorCode::InvalidArgument, "denominator is identically zero");
    }

    static RationalTF gain(double k) { return {Polynomial::constant(k), Polynomial::constant(1.0)}; }
    /// k/s
    static RationalTF integrator(double k = 1.0) { return {Polynomial::constant(k), Polynomial({0.0, 1.0})}; }
    /// 1/(tau s + 1)
    static RationalTF lag(double tau) { return {Polynomial::constant(1.0), Polynomial::linear(tau, 1.0)}; }

    [[nodiscard]] const Polynomial& num() const noexcept { return num_; }
    [[nodiscard]] const Polynomial& den() const noexcept { return den_; }

    [[nodiscard]] bool is_zero() const noexcept { return num_.is_zero(); }
    [[nodiscard]] bool is_proper() const noexcept { return is_zero() || num_.degree() <= den_.degree(); }
    [[nodiscard]] bool is_strictly_proper() const noexcept { return is_zero() || num_.degree() < den_.degree(); }

    /// Limit as s -> infinity.
    [[nodiscard]] double high_frequency_gain() const {
        require(is_proper(), ErrorCode::ImproperTF, "improper transfer function has no finite high-frequency limit");
        if (is_strictly_proper()) return 0.0;
        return num_.leading() / den_.leading();
    }

    [[nodiscard]] RationalTF scaled(double k) const { return {k * num_, den_}; }

    friend RationalTF operator*(const RationalTF& a, const RationalTF& b) {
        return {a.num_ * b.num_, a.den_ * b.den_};
    }
    friend RationalTF operator+(const RationalTF& a, const RationalTF& b) {
        if (a.den_ == b.den_) return {a.num_ + b.num_, a.den_};
        return {a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_};
    }
    friend RationalTF operator-(const RationalTF& a) { return {-a.num_, a.den_}; }
    friend RationalTF operator-(const RationalTF& a, const RationalTF& b) { return a + (-b); }
    friend RationalTF operator*(double k, const RationalTF& a) { return a.scaled(k); }

private:
    Polynomial num_;
    Polynomial den_;
};

inline cplx tf_eval(const RationalTF& tf, cplx s) {
    const cplx d = tf.den()(s);
    if (std::abs(d) < 1e-300) fail(ErrorCode::PoleHit, "denominator vanishes at s = " + std::to_string(s.real()) + "+" + std::to_string(s.imag()) + "j");
    return tf.num()(s) / d;
}

inline double tf_eval(const RationalTF& tf, double s) { return tf_eval(tf, cplx(s, 0.0)).real(); }

}  // namespace gfmnet
