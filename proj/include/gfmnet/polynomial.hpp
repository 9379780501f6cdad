#pragma once

#include <gfmnet/errors.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <vector>

namespace gfmnet {

using cplx = std::complex<double>;

/// Real polynomial in s, coefficients in ascending degree.
class Polynomial {
public:
    Polynomial() : c_{0.0} {}
    Polynomial(std::initializer_list<double> c) : Polynomial(std::vector<double>(c)) {}
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) {
        require(!c_.empty(), ErrorCode::InvalidArgument, "polynomial with no coefficients");
        for (double v : c_)
            require(std::isfinite(v), ErrorCode::InvalidArgument, "non-finite polynomial coefficient");
        trim();
    }

    static Polynomial constant(double k) { return Polynomial({k}); }
    /// a*s + b
    static Polynomial linear(double a, double b) { return Polynomial({b, a}); }

    [[nodiscard]] const std::vector<double>& coeffs() const noexcept { return c_; }
    [[nodiscard]] int degree() const noexcept { return static_cast<int>(c_.size()) - 1; }
    [[nodiscard]] double leading() const noexcept { return c_.back(); }
    [[nodiscard]] double coeff(int k) const noexcept {
        return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : 0.0;
    }
    [[nodiscard]] bool is_zero() const noexcept { return c_.size() == 1 && c_[0] == 0.0; }

    template <class T>
    [[nodiscard]] T operator()(const T& s) const {
        T acc(c_.back());
        for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k) acc = acc * s + T(c_[k]);
        return acc;
    }

    [[nodiscard]] Polynomial derivative() const {
        if (c_.size() == 1) return Polynomial();
        std::vector<double> d(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(d));
    }

    /// Roots via companion-matrix eigenvalues.
    [[nodiscard]] std::vector<cplx> roots() const {
        const int n = degree();
        if (n <= 0) return {};
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) comp(i, n - 1) = -c_[i] / c_[n];
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
        require(es.info() == Eigen::Success, ErrorCode::InvalidArgument, "root finding did not converge");
        std::vector<cplx> r(n);
        for (int i = 0; i < n; ++i) r[i] = es.eigenvalues()(i);
        return r;
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < r.size(); ++k) r[k] = a.coeff(int(k)) + b.coeff(int(k));
        return Polynomial(std::move(r));
    }
    friend Polynomial operator-(const Polynomial& a) {
        std::vector<double> r(a.c_);
        for (double& v : r) v = -v;
        return Polynomial(std::move(r));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-b); }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator*(double k, const Polynomial& a) { return Polynomial::constant(k) * a; }
    friend Polynomial operator*(const Polynomial& a, double k) { return k * a; }

    friend bool operator==(const Polynomial&, const Polynomial&) = default;

private:
    void trim() {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

}  // namespace gfmnet
