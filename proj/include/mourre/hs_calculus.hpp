#pragma once

#include <algorithm>
#include <vector>

#include "mourre/commutator.hpp"
#include "mourre/functions.hpp"
#include "mourre/operator.hpp"

namespace mourre {

struct QuadratureSpec {
    int nodes_x = 16;
    int nodes_y = 16;
    int y_refinement_levels = 10;
    int subdivisions = 16;        // panels per cutoff band and per feature gap
    double panel_width = 0.125;   // core x-panels
    double tail_extent = 1099511627776.0;  // 2^40, for non-compact support

    void validate() const {
        if (nodes_x < 8 || nodes_y < 8) throw DimensionMismatch("quadrature needs >= 8 nodes per panel");
        if (subdivisions < 1 || !(panel_width > 0)) throw DimensionMismatch("quadrature panel layout");
        if (y_refinement_levels < 2) throw DimensionMismatch("quadrature needs >= 2 refinement levels");
    }
    QuadratureSpec refined(int levels) const {
        QuadratureSpec q = *this;
        q.y_refinement_levels = levels;
        return q;
    }
    // Refinement ladder: level r halves every panel r times relative to level 0.
    static QuadratureSpec at_level(int r) {
        QuadratureSpec q;
        q.y_refinement_levels = 6 + r;
        q.subdivisions = 1 << r;
        q.panel_width = 0.5 / (1 << r);
        return q;
    }
};

inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

class AlmostAnalyticExtension {
public:
    AlmostAnalyticExtension() = default;
    AlmostAnalyticExtension(SmoothFunction f, int N) : f_(std::move(f)), N_(N) {}

    const SmoothFunction& base() const { return f_; }
    int order() const { return N_; }
    double C_N() const { return C_N_; }
    void set_C_N(double c) { C_N_ = c; }

    // Derivatives f^(r)(x), r = 0..N+1.
    std::vector<double> derivatives(double x) const {
        std::vector<double> d(N_ + 2, 0.0);
        if (x < f_.lo || x > f_.hi) return d;
        Jet j = f_.taylor(x, N_ + 1);
        for (int r = 0; r <= N_ + 1; ++r) d[r] = j.derivative(r);
        return d;
    }

    cplx value(cplx z) const {
        double x = z.real(), y = z.imag();
        double u = y / japanese(x);
        double chi = mollifier::cutoff(Jet(u, 0)).value();
        if (chi == 0.0) return 0.0;
        auto d = derivatives(x);
        cplx s = 0.0, iy_r = 1.0;
        for (int r = 0; r <= N_; ++r) {
            s += d[r] * iy_r / factorial(r);
            iy_r *= cplx(0.0, y);
        }
        return chi * s;
    }

    cplx dbar(cplx z) const { return dbar_from(z.real(), z.imag(), derivatives(z.real())); }

    // d/dzbar of chi(y/<x>) * sum_r f^(r)(x) (iy)^r / r!
    cplx dbar_from(double x, double y, const std::vector<double>& d) const {
        double jx = japanese(x);
        double u = y / jx;
        Jet c = mollifier::cutoff(Jet::variable(u, 1));
        return dbar_core(x, y, jx, c[0], c[1], d);
    }

    cplx dbar_core(double x, double y, double jx, double chi, double dchi, const std::vector<double>& d) const {
        if (chi == 0.0 && dchi == 0.0) return 0.0;
        cplx iy(0.0, y), p = 1.0, s = 0.0;
        for (int r = 0; r < N_; ++r) {
            s += d[r] * p / factorial(r);
            p *= iy;
        }
        // p = (iy)^N here
        s += d[N_] * p / factorial(N_);
        cplx dS = 0.5 * d[N_ + 1] * p / factorial(N_);
        cplx dchi_bar = 0.5 * dchi * cplx(-y * x / (jx * jx * jx), 1.0 / jx);
        return dchi_bar * s + chi * dS;
    }

private:
    SmoothFunction f_;
    int N_ = 3;
    double C_N_ = 0.0;
};

// Sampled check of the derivative bounds and measurement of C_N.
inline AlmostAnalyticExtension build_extension(const SmoothFunction& f, int N = 3) {
    if (N < 1 || N > 9) throw DimensionMismatch("extension order out of range");
    AlmostAnalyticExtension ext(f, N);
    double a = f.compact() ? f.lo : -60.0, b = f.compact() ? f.hi : 60.0;
    for (double c : f.features) {
        a = std::min(a, c - 10.0 * !f.compact());
        b = std::max(b, c + 10.0 * !f.compact());
    }
    const int samples = 1201;
    double m = f.decay;
    for (int i = 0; i < samples; ++i) {
        double x = a + (b - a) * i / (samples - 1);
        Jet j = f.taylor(x, N + 2);
        for (int k = 0; k <= N + 2; ++k) {
            double v = std::pow(japanese(x), k - m) * std::abs(j.derivative(k));
            if (!std::isfinite(v) || v > 1e12)
                throw UnboundedDerivative(f.name + ": derivative " + std::to_string(k) + " at x=" + std::to_string(x));
        }
    }
    double CN = 0.0;
    const int gx = 241, gy = 40;
    for (int i = 0; i < gx; ++i) {
        double x = a + (b - a) * i / (gx - 1);
        auto d = ext.derivatives(x);
        double jx = japanese(x);
        for (int l = 1; l <= gy; ++l) {
            double y = jx * l / gy;
            cplx z(x, y);
            double bound = std::pow(std::abs(japanese(std::abs(z))), m - N - 1) * std::pow(y, N);
            CN = std::max(CN, std::abs(ext.dbar_from(x, y, d)) / bound);
        }
    }
    ext.set_C_N(CN);
    return ext;
}

namespace detail {

inline void add_unique_sorted(std::vector<double>& pts) {
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts)
        if (out.empty() || p - out.back() > 1e-13 * std::max(1.0, std::abs(p))) out.push_back(p);
    pts.swap(out);
}

// x-breakpoints: support or spectral core, features, dyadic grading toward each center, geometric tails.
inline std::vector<double> x_breakpoints(const SmoothFunction& f, const std::vector<double>& centers,
                                         const QuadratureSpec& q, double hull_lo, double hull_hi) {
    double a, b;
    bool tails = !f.compact();
    if (!tails) {
        a = f.lo;
        b = f.hi;
    } else {
        a = hull_lo;
        b = hull_hi;
        for (double c : f.features) {
            a = std::min(a, c);
            b = std::max(b, c);
        }
        for (double c : centers) {
            a = std::min(a, c);
            b = std::max(b, c);
        }
        a -= 1.0;
        b += 1.0;
    }
    std::vector<double> pts;
    int nb = std::max(1, static_cast<int>(std::ceil((b - a) / q.panel_width)));
    for (int i = 0; i <= nb; ++i) pts.push_back(a + (b - a) * i / nb);
    // each gap between consecutive features gets at least `levels` panels
    std::vector<double> feats{a, b};
    for (double c : f.features)
        if (c > a && c < b) feats.push_back(c);
    add_unique_sorted(feats);
    for (size_t i = 0; i + 1 < feats.size(); ++i) {
        int m = q.subdivisions;
        for (int j = 0; j <= m; ++j) pts.push_back(feats[i] + (feats[i + 1] - feats[i]) * j / m);
    }
    for (double c : centers) {
        double s = 0.5 * japanese(c);
        for (int j = 0; j <= q.y_refinement_levels + 1; ++j) {
            double d = s * std::ldexp(1.0, -j);
            for (double p : {c - d, c + d})
                if (p > a && p < b) pts.push_back(p);
        }
        if (c > a && c < b) pts.push_back(c);
    }
    if (tails) {
        double w = std::max(1.0, q.panel_width);
        for (double d = w; d <= q.tail_extent; d *= 2.0) {
            pts.push_back(b + d);
            pts.push_back(a - d);
        }
    }
    add_unique_sorted(pts);
    return pts;
}

// Dyadic toward u = 0; the cutoff band [1/2, 1] is split into `levels` equal panels.
inline std::vector<double> u_breakpoints(const QuadratureSpec& q) {
    std::vector<double> pts{0.0};
    for (int j = q.y_refinement_levels; j >= 2; --j) pts.push_back(std::ldexp(1.0, -j));
    const int band = q.subdivisions;
    for (int i = 0; i <= band; ++i) pts.push_back(0.5 + 0.5 * i / band);
    return pts;
}

struct UNode {
    double u, w, chi, dchi;
};

inline std::vector<UNode> u_nodes(const QuadratureSpec& q) {
    const auto& g = gauss_legendre(q.nodes_y);
    auto bp = u_breakpoints(q);
    std::vector<UNode> out;
    for (size_t p = 0; p + 1 < bp.size(); ++p) {
        double lo = bp[p], hi = bp[p + 1], h = hi - lo;
        for (int i = 0; i < q.nodes_y; ++i) {
            double u = lo + 0.5 * h * (g.x[i] + 1.0);
            Jet c = mollifier::cutoff(Jet::variable(u, 1));
            out.push_back({u, 0.5 * h * g.w[i], c[0], c[1]});
        }
    }
    return out;
}

struct XNode {
    double x, w;
};

inline std::vector<XNode> x_nodes(const std::vector<double>& bp, int n) {
    const auto& g = gauss_legendre(n);
    std::vector<XNode> out;
    for (size_t p = 0; p + 1 < bp.size(); ++p) {
        double lo = bp[p], hi = bp[p + 1], h = hi - lo;
        for (int i = 0; i < n; ++i) out.push_back({lo + 0.5 * h * (g.x[i] + 1.0), 0.5 * h * g.w[i]});
    }
    return out;
}

}  // namespace detail

// Upper-half-plane integral  int_{y>0} dbar f~(z) kernel(z) dx dy  on panels graded toward `centers`.
template <class Kernel>
cplx integrate_upper(const AlmostAnalyticExtension& ext, Kernel&& kernel, const std::vector<double>& centers,
                     const QuadratureSpec& q, double hull_lo, double hull_hi) {
    q.validate();
    auto bp = detail::x_breakpoints(ext.base(), centers, q, hull_lo, hull_hi);
    auto xs = detail::x_nodes(bp, q.nodes_x);
    auto us = detail::u_nodes(q);
    cplx total = 0.0;
    for (const auto& xn : xs) {
        auto d = ext.derivatives(xn.x);
        bool zero = true;
        for (double v : d) zero = zero && v == 0.0;
        if (zero) continue;
        double jx = japanese(xn.x);
        cplx acc = 0.0;
        for (const auto& un : us) {
            double y = un.u * jx;
            cplx db = ext.dbar_core(xn.x, y, jx, un.chi, un.dchi, d);
            if (db == 0.0) continue;
            acc += un.w * db * kernel(cplx(xn.x, y));
        }
        total += xn.w * jx * acc;
    }
    return total;
}

// Scalar Helffer-Sjostrand value: -(1/pi) int dbar f~(z) / (z - t) dx dy.
inline double hs_scalar(const AlmostAnalyticExtension& ext, double t, const QuadratureSpec& q) {
    cplx up = integrate_upper(ext, [t](cplx z) { return 1.0 / (z - t); }, {t}, q, t, t);
    return -2.0 / kPi * up.real();
}

struct HsResult {
    HermitianOperator value;
    double error_estimate = 0.0;  // max change against one coarser level
};

// f(L) through the quadrature, resolvents applied in the eigenbasis of L.
inline HsResult hs_evaluate_with_estimate(const AlmostAnalyticExtension& ext, const HermitianOperator& L,
                                          const QuadratureSpec& q = {}) {
    const auto& w = L.eigenvalues();
    RVec s(w.size()), sc(w.size());
    double est = 0.0;
    QuadratureSpec coarse = q.refined(std::max(2, q.y_refinement_levels - 1));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        s(i) = hs_scalar(ext, w(i), q);
        sc(i) = hs_scalar(ext, w(i), coarse);
        est = std::max(est, std::abs(s(i) - sc(i)));
    }
    double scale = std::max(ext.base().sup_norm, 1e-300);
    if (!std::isfinite(est) || est > 1e-2 * scale)
        throw QuadratureDiverged("refinement changes the result by " + std::to_string(est));
    const Mat& V = L.eigenvectors();
    Mat m = V * s.cast<cplx>().asDiagonal() * V.adjoint();
    return {HermitianOperator(hermitize(m), 1e-8), est};
}

inline HermitianOperator hs_evaluate(const AlmostAnalyticExtension& ext, const HermitianOperator& L,
                                     const QuadratureSpec& q = {}) {
    const auto& w = L.eigenvalues();
    RVec s(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) s(i) = hs_scalar(ext, w(i), q);
    if (!s.allFinite()) throw QuadratureDiverged("non-finite quadrature value");
    const Mat& V = L.eigenvectors();
    return HermitianOperator(hermitize(Mat(V * s.cast<cplx>().asDiagonal() * V.adjoint())), 1e-8);
}

// Same integral with a dense solve of (z - L) at every node; used as an independent route at small dim.
inline HermitianOperator hs_evaluate_direct(const AlmostAnalyticExtension& ext, const HermitianOperator& L,
                                            const QuadratureSpec& q = {}) {
    q.validate();
    const auto& w = L.eigenvalues();
    std::vector<double> centers(w.data(), w.data() + w.size());
    auto bp = detail::x_breakpoints(ext.base(), centers, q, w(0), w(w.size() - 1));
    auto xs = detail::x_nodes(bp, q.nodes_x);
    auto us = detail::u_nodes(q);
    const Eigen::Index n = L.dim();
    Mat acc = Mat::Zero(n, n);
    Mat Id = Mat::Identity(n, n);
    for (const auto& xn : xs) {
        auto d = ext.derivatives(xn.x);
        double jx = japanese(xn.x);
        for (const auto& un : us) {
            double y = un.u * jx;
            cplx db = ext.dbar_core(xn.x, y, jx, un.chi, un.dchi, d);
            if (db == 0.0) continue;
            Mat zL = cplx(xn.x, y) * Id - L.matrix();
            acc += (xn.w * jx * un.w * db) * zL.partialPivLu().inverse();
        }
    }
    Mat m = -(1.0 / kPi) * (acc + acc.adjoint());
    return HermitianOperator(hermitize(m), 1e-8);
}

struct RefinementRow {
    int level;
    double oracle_error;
};

// Oracle error along the QuadratureSpec::at_level ladder.
inline std::vector<RefinementRow> hs_refinement_study(const AlmostAnalyticExtension& ext, const HermitianOperator& L,
                                                      const std::vector<int>& levels) {
    auto oracle = spectral_function(L, [&](double x) { return ext.base()(x); });
    std::vector<RefinementRow> rows;
    for (int l : levels) {
        auto r = hs_evaluate(ext, L, QuadratureSpec::at_level(l));
        rows.push_back({l, op_norm(Mat(r.matrix() - oracle.matrix()))});
    }
    return rows;
}

// ---- regularizer commutator expansion ----

struct TaylorRemainder {
    Mat main;       // r_n'(A) ad_A(B)
    Mat remainder;  // [B, r_n(A)] - main
    double integral_mismatch = -1.0;  // ||remainder - integral representation||, if requested
};

inline Mat integral_remainder(const Mat& B, const HermitianOperator& A, int n, const QuadratureSpec& q, int N = 5) {
    auto ext = build_extension(make_rho(), N);
    const auto& a = A.eigenvalues();
    const Mat& V = A.eigenvectors();
    auto seq = iterated_commutator(B, A, 2);
    Mat X = V.adjoint() * seq[2] * V;
    const Eigen::Index d = A.dim();
    Mat T(d, d);
    double lo = a(0) / n, hi = a(d - 1) / n;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            double bi = a(i) / n, bj = a(j) / n;
            auto kern = [bi, bj](cplx z) { return z / ((z - bi) * (z - bi) * (z - bj)); };
            cplx up = integrate_upper(ext, kern, {bi, bj}, q, lo, hi);
            T(i, j) = -2.0 / kPi * up.real() / n;
        }
    return V * X.cwiseProduct(T) * V.adjoint();
}

inline TaylorRemainder taylor_remainder(const Mat& B, const HermitianOperator& A, const RegularizerFamily& fam,
                                        bool cross_check = false, const QuadratureSpec& q = {}) {
    const int n = fam.n;
    Mat rn = spectral_apply(A, [&](double t) { return cplx(fam.g_n(t)); });
    Mat rnp = spectral_apply(A, [&](double t) { return cplx(fam.g_n_prime(t)); });
    Mat main = rnp * ad(B, A.matrix());
    Mat rem = (B * rn - rn * B) - main;
    TaylorRemainder out{main, rem};
    if (cross_check) out.integral_mismatch = op_norm(Mat(rem - integral_remainder(B, A, n, q)));
    return out;
}

struct RemainderConstants {
    double beta;   // (1/pi) int |dbar rho~| |z| / |y|^3
    double alpha;  // (1/pi) int |dbar rho~| |z| (|z|/|y| + 1) / |y|^2
};

inline RemainderConstants remainder_constants(int N = 3, const QuadratureSpec& q = {}) {
    auto ext = build_extension(make_rho(), N);
    auto bp = detail::x_breakpoints(ext.base(), {}, q, -3.0, 3.0);
    auto xs = detail::x_nodes(bp, q.nodes_x);
    auto us = detail::u_nodes(q);
    double b = 0.0, a = 0.0;
    for (const auto& xn : xs) {
        auto d = ext.derivatives(xn.x);
        double jx = japanese(xn.x);
        for (const auto& un : us) {
            double y = un.u * jx;
            double db = std::abs(ext.dbar_core(xn.x, y, jx, un.chi, un.dchi, d));
            if (db == 0.0) continue;
            double r = std::hypot(xn.x, y), w = xn.w * jx * un.w * db;
            b += w * r / (y * y * y);
            a += w * r * (r / y + 1.0) / (y * y);
        }
    }
    return {2.0 * b / kPi, 2.0 * a / kPi};
}

struct DecayRow {
    int n;
    double difference;
};

// ||(ad^k_{g_n(A)}(B) - ad^k_A(B)) probe|| over a doubling schedule of n.
inline std::vector<DecayRow> strong_convergence_check(const Mat& B, const HermitianOperator& A, int k,
                                                      const std::vector<Vec>& probes, int n_max) {
    auto exact = iterated_commutator(B, A, k)[k];
    std::vector<DecayRow> rows;
    for (int n = 1; n <= n_max; n *= 2) {
        RegularizerFamily fam;
        fam.n = n;
        HermitianOperator gA = spectral_function(A, [&](double t) { return fam.g_n(t); });
        auto approx = iterated_commutator(B, gA, k)[k];
        double worst = 0.0;
        for (const auto& p : probes) worst = std::max(worst, ((approx - exact) * p).norm());
        rows.push_back({n, worst});
    }
    return rows;
}

}  // namespace mourre
