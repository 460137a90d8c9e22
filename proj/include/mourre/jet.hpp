#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace mourre {

// Truncated Taylor series c[0] + c[1] t + ... + c[order] t^order.
class Jet {
public:
    static constexpr int kMax = 12;

    Jet() = default;
    Jet(double value, int order) : n_(order) {
        if (order < 0 || order > kMax) throw std::out_of_range("jet order");
        c_[0] = value;
    }
    static Jet variable(double x0, int order) {
        Jet j(x0, order);
        if (order >= 1) j.c_[1] = 1.0;
        return j;
    }
    static Jet constant(double v, int order) { return Jet(v, order); }

    int order() const { return n_; }
    double operator[](int k) const { return c_[k]; }
    double& operator[](int k) { return c_[k]; }
    double value() const { return c_[0]; }
    // k-th derivative at the expansion point
    double derivative(int k) const {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) f *= i;
        return c_[k] * f;
    }

    Jet operator-() const {
        Jet r(*this);
        for (int k = 0; k <= n_; ++k) r.c_[k] = -c_[k];
        return r;
    }
    Jet& operator+=(const Jet& o) {
        for (int k = 0; k <= n_; ++k) c_[k] += o.c_[k];
        return *this;
    }
    Jet& operator-=(const Jet& o) {
        for (int k = 0; k <= n_; ++k) c_[k] -= o.c_[k];
        return *this;
    }
    Jet& operator*=(double s) {
        for (int k = 0; k <= n_; ++k) c_[k] *= s;
        return *this;
    }
    Jet& operator+=(double s) {
        c_[0] += s;
        return *this;
    }

    friend Jet operator+(Jet a, const Jet& b) { return a += b; }
    friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
    friend Jet operator+(Jet a, double s) { return a += s; }
    friend Jet operator+(double s, Jet a) { return a += s; }
    friend Jet operator-(Jet a, double s) { return a += -s; }
    friend Jet operator-(double s, const Jet& a) { return (-a) + s; }
    friend Jet operator*(Jet a, double s) { return a *= s; }
    friend Jet operator*(double s, Jet a) { return a *= s; }
    friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }

    friend Jet operator*(const Jet& a, const Jet& b) {
        Jet r(0.0, a.n_);
        for (int k = 0; k <= a.n_; ++k) {
            double s = 0.0;
            for (int i = 0; i <= k; ++i) s += a.c_[i] * b.c_[k - i];
            r.c_[k] = s;
        }
        return r;
    }
    friend Jet operator/(const Jet& a, const Jet& b) { return a * recip(b); }
    friend Jet operator/(double s, const Jet& b) { return recip(b) * s; }

    friend Jet recip(const Jet& a) {
        Jet r(1.0 / a.c_[0], a.n_);
        for (int k = 1; k <= a.n_; ++k) {
            double s = 0.0;
            for (int i = 1; i <= k; ++i) s += a.c_[i] * r.c_[k - i];
            r.c_[k] = -s / a.c_[0];
        }
        return r;
    }
    friend Jet exp(const Jet& a) {
        Jet r(std::exp(a.c_[0]), a.n_);
        for (int k = 1; k <= a.n_; ++k) {
            double s = 0.0;
            for (int i = 1; i <= k; ++i) s += i * a.c_[i] * r.c_[k - i];
            r.c_[k] = s / k;
        }
        return r;
    }
    friend Jet log(const Jet& a) {
        Jet r(std::log(a.c_[0]), a.n_);
        for (int k = 1; k <= a.n_; ++k) {
            double s = 0.0;
            for (int i = 1; i < k; ++i) s += i * r.c_[i] * a.c_[k - i];
            r.c_[k] = (a.c_[k] - s / k) / a.c_[0];
        }
        return r;
    }
    friend Jet sqrt(const Jet& a) {
        Jet r(std::sqrt(a.c_[0]), a.n_);
        for (int k = 1; k <= a.n_; ++k) {
            double s = 0.0;
            for (int i = 1; i < k; ++i) s += r.c_[i] * r.c_[k - i];
            r.c_[k] = (a.c_[k] - s) / (2.0 * r.c_[0]);
        }
        return r;
    }
    friend Jet pow(const Jet& a, double p) { return exp(log(a) * p); }

    // f(x0 + d) for a jet d with d[0] = 0, where f holds the Taylor coefficients of f at x0.
    friend Jet compose(const Jet& f, const Jet& x) {
        Jet d(x);
        d.c_[0] = 0.0;
        Jet r(f.c_[f.n_], x.n_);
        for (int k = f.n_ - 1; k >= 0; --k) r = r * d + f.c_[k];
        return r;
    }

private:
    std::array<double, kMax + 1> c_{};
    int n_ = 0;
};

}  // namespace mourre
