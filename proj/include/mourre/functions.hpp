#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mourre/gauss.hpp"
#include "mourre/jet.hpp"
#include "mourre/linalg.hpp"

namespace mourre {

namespace mollifier {

// exp(-s/t) for t > 0, zero otherwise.
inline Jet psi(const Jet& t, double s = 1.0) {
    if (t.value() <= 1e-3 * s) return Jet(0.0, t.order());
    return exp(recip(t) * (-s));
}

// Smooth step: 0 for t <= 0, 1 for t >= 1.
inline Jet step(const Jet& t) {
    if (t.value() <= 1e-3) return Jet(0.0, t.order());
    if (t.value() >= 1.0 - 1e-3) return Jet(1.0, t.order());
    Jet a = psi(t), b = psi(1.0 - t);
    return a / (a + b);
}

inline double step(double t) { return step(Jet(t, 0)).value(); }

// sqrt(1 - step(t)), smooth because the flat factor is taken as exp(-1/(2t)).
inline Jet sqrt_step_complement(const Jet& t) {
    if (t.value() <= 1e-3) return Jet(1.0, t.order());
    if (t.value() >= 1.0 - 1e-3) return Jet(0.0, t.order());
    return psi(1.0 - t, 0.5) / sqrt(psi(t) + psi(1.0 - t));
}

// Integral of step over [0, s].
inline double step_integral(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 0.5 + (s - 1.0);
    return integrate_gl([](double u) { return step(u); }, 0.0, s, 8, 20);
}

inline Jet abs_jet(const Jet& x) { return x.value() < 0 ? -x : x; }

// Plateau: 1 on [-1, 1], 0 outside [-3, 3].
inline Jet plateau(const Jet& s) { return 1.0 - step((abs_jet(s) - 1.0) * 0.5); }

inline Jet sqrt_plateau(const Jet& s) { return sqrt_step_complement((abs_jet(s) - 1.0) * 0.5); }

// Cutoff chi(u): 1 for |u| <= 1/2, 0 for |u| >= 1.
inline Jet cutoff(const Jet& u) { return 1.0 - step(abs_jet(u) * 2.0 - 1.0); }

}  // namespace mollifier

// Taylor coefficients of g at t0, where g(t) = int_0^t plateau.
inline Jet g_taylor(double t0, int order) {
    double a = std::abs(t0);
    if (a <= 1.0) return Jet::variable(t0, order);
    double sign = t0 < 0 ? -1.0 : 1.0;
    if (a >= 3.0) return Jet(2.0 * sign, order);
    double s = 0.5 * (a - 1.0);
    Jet r(sign * (1.0 + 2.0 * (s - mollifier::step_integral(s))), order);
    if (order >= 1) {
        Jet phi = mollifier::plateau(Jet::variable(t0, order - 1));
        for (int k = 1; k <= order; ++k) r[k] = phi[k - 1] / k;
    }
    return r;
}

inline Jet g_fn(const Jet& t) { return compose(g_taylor(t.value(), t.order()), t); }
inline double g_fn(double t) { return g_taylor(t, 0).value(); }

inline Jet rho_fn(const Jet& t) {
    if (std::abs(t.value()) <= 1.0) return Jet(1.0, t.order());
    return g_fn(t) / t;
}

// p = sqrt(t g'(t) / g(t)) = sqrt(plateau / rho)
inline Jet p_fn(const Jet& t) {
    double a = std::abs(t.value());
    if (a <= 1.0) return Jet(1.0, t.order());
    if (a >= 3.0 - 2e-3) return Jet(0.0, t.order());
    return mollifier::sqrt_plateau(t) / sqrt(rho_fn(t));
}

inline Jet h_nu_fn(const Jet& x, double nu) { return x / (1.0 + x * x * nu); }
inline double h_nu_fn(double x, double nu) { return x / (1.0 + nu * x * x); }

// A real function with Taylor-jet access, support and decay data used by the quadrature.
struct SmoothFunction {
    std::string name;
    std::function<Jet(const Jet&)> apply;
    double lo = -kInf;  // support
    double hi = kInf;
    double decay = 0.0;            // f^(k) = O(<x>^(decay - k))
    std::vector<double> features;  // breakpoints for panel placement
    double sup_norm = 1.0;

    double operator()(double x) const { return apply(Jet(x, 0)).value(); }
    Jet taylor(double x, int order) const { return apply(Jet::variable(x, order)); }
    bool compact() const { return std::isfinite(lo) && std::isfinite(hi); }
};

inline SmoothFunction make_f_ana(double lambda) {
    SmoothFunction f;
    f.name = "f_ana";
    f.apply = [lambda](const Jet& x) {
        Jet d = x - lambda;
        return recip(1.0 + d * d);
    };
    f.decay = -2.0;
    f.features = {lambda};
    return f;
}

// Smooth bump with support [lo, hi] and plateau [lo + w/4, hi - w/4].
inline SmoothFunction make_bump(double lo, double hi, double height = 1.0) {
    SmoothFunction f;
    f.name = "bump";
    double q = 0.25 * (hi - lo);
    f.apply = [lo, hi, q, height](const Jet& x) {
        if (x.value() <= lo || x.value() >= hi) return Jet(0.0, x.order());
        return mollifier::step((x - lo) / q) * mollifier::step((hi - x) / q) * height;
    };
    f.lo = lo;
    f.hi = hi;
    f.features = {lo, lo + q, hi - q, hi};
    f.sup_norm = std::abs(height);
    return f;
}

// f_loc around lambda inside I: width w = 2 min(lambda - lo, hi - lambda).
inline SmoothFunction make_f_loc(double lambda, double I_lo, double I_hi) {
    double w = 2.0 * std::min(lambda - I_lo, I_hi - lambda);
    if (!(w > 0)) throw DimensionMismatch("f_loc: lambda not interior to I");
    auto f = make_bump(lambda - 0.5 * w, lambda + 0.5 * w);
    f.name = "f_loc";
    return f;
}

inline SmoothFunction make_zero_function() {
    SmoothFunction f;
    f.name = "zero";
    f.apply = [](const Jet& x) { return Jet(0.0, x.order()); };
    f.lo = -1.0;
    f.hi = 1.0;
    f.sup_norm = 0.0;
    return f;
}

inline SmoothFunction make_rho(double scale = 1.0) {
    SmoothFunction f;
    f.name = "rho";
    f.apply = [scale](const Jet& t) { return rho_fn(t / scale); };
    f.decay = -1.0;
    f.features = {-3 * scale, -scale, scale, 3 * scale};
    return f;
}

// Regularizer bundle: g, g_n, rho, gamma, p, p_n, h_nu, h_n and the shift lambda.
struct RegularizerFamily {
    int n = 1;
    double nu = 1.0;
    double lambda = 0.0;

    static double g(double t) { return g_fn(t); }
    static double g_prime(double t) { return g_taylor(t, 1)[1]; }
    static double rho(double t) { return rho_fn(Jet(t, 0)).value(); }
    static double gamma(double t) { return rho(t); }
    static double p(double t) { return p_fn(Jet(t, 0)).value(); }

    double g_n(double t) const { return n * g(t / n); }
    double g_n_prime(double t) const { return g_prime(t / n); }
    double p_n(double t) const { return p(t / n); }
    double h_nu(double x) const { return h_nu_fn(x, nu); }
    double h_n(double t) const { return n * h_nu(t / n); }
    // h_n(x - lambda), the regularized energy localizer
    double h(double x) const { return h_n(x - lambda); }
    double nu_effective() const { return nu / (double(n) * n); }

    Jet h_jet(const Jet& x) const { return h_nu_fn(x - lambda, nu_effective()); }
    SmoothFunction h_function() const {
        SmoothFunction f;
        f.name = "h";
        double l = lambda, ne = nu_effective();
        f.apply = [l, ne](const Jet& x) { return h_nu_fn(x - l, ne); };
        f.decay = -1.0;
        f.features = {l};
        f.sup_norm = 0.5 / std::sqrt(ne);
        return f;
    }
};

}  // namespace mourre
