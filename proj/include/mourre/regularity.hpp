#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mourre/commutator.hpp"
#include "mourre/mourre.hpp"

namespace mourre {

// Nearest eigenpair; among degenerate candidates the lowest index, phase so that the first
// nonzero entry is real positive.
inline std::pair<double, Vec> eigenpair(const HermitianOperator& H, double target) {
    const auto& w = H.eigenvalues();
    double scale = std::max(H.norm(), 1.0);
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (std::abs(w(i) - target) <= 1e-8 * scale && (best < 0 || std::abs(w(i) - target) < std::abs(w(best) - target) - 1e-8 * scale))
            best = i;
    if (best < 0) throw NoEigenvalueNear("no eigenvalue within 1e-8 |H| of " + std::to_string(target));
    Vec psi = H.eigenvectors().col(best);
    psi /= psi.norm();
    for (Eigen::Index i = 0; i < psi.size(); ++i)
        if (std::abs(psi(i)) > 1e-12) {
            psi *= std::conj(psi(i)) / std::abs(psi(i));
            break;
        }
    return {w(best), psi};
}

// Eigenvalue closest to target, optionally restricted to a window; exact ties go to the lower one.
inline double nearest_eigenvalue(const HermitianOperator& H, double target, std::optional<RealInterval> within = {}) {
    const auto& w = H.eigenvalues();
    const double tie = 1e-12 * std::max(H.norm(), 1.0);
    double best = kInf, out = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (within && !within->contains(w(i))) continue;
        if (std::abs(w(i) - target) < best - tie) {
            best = std::abs(w(i) - target);
            out = w(i);
        }
    }
    if (!std::isfinite(best)) throw NoEigenvalueNear("no eigenvalue of H in the window");
    return out;
}

inline std::vector<double> norm_sequence(const HermitianOperator& A, const Vec& psi, int k_max) {
    std::vector<double> out;
    Vec v = psi;
    out.push_back(v.norm());
    for (int k = 1; k <= k_max; ++k) {
        v = A.matrix() * v;
        out.push_back(v.norm());
    }
    return out;
}

// q_k = min_{1<=j<=k} (j!/norms[j])^{1/j}
inline std::vector<double> q_fit_partial(const std::vector<double>& norms) {
    std::vector<double> q(norms.size(), kInf);
    double cur = kInf;
    for (size_t k = 1; k < norms.size(); ++k) {
        if (norms[k] > 0) cur = std::min(cur, std::pow(factorial(static_cast<int>(k)) / norms[k], 1.0 / k));
        q[k] = cur;
    }
    return q;
}

struct ExplicitBound {
    int k = 0;
    double lhs = 0.0;  // ||A^k psi||^2
    double terms[4] = {0, 0, 0, 0};
    double rhs = 0.0;
    double margin = 0.0;
    bool holds() const { return margin >= -1e-8 * rhs; }
};

// Same bound with ||A^k psi|| replaced by c^k ||A^k psi||; negative control for the margin check.
inline ExplicitBound inflated(ExplicitBound b, double c) {
    b.lhs *= std::pow(c, 2 * b.k);
    b.margin = b.rhs - b.lhs;
    return b;
}

// Commutator and power caches shared across k.
class BoundEvaluator {
public:
    BoundEvaluator(const HermitianOperator& H, const HermitianOperator& A, const MourreCertificate& cert, const Vec& psi)
        : H_(H), A_(A), cert_(cert), psi_(psi) {
        if (cert.f_kind != FKind::loc) throw CertificateInvalid("explicit bound needs an f_loc certificate");
        auto fl = cert.f_loc();
        if (!(cert.lambda >= fl.lo && cert.lambda <= fl.hi)) throw CertificateInvalid("lambda outside supp f_loc");
        h_ = iterated_commutator(h_matrix(cert.h, H), A, 0);
        f_ = iterated_commutator(spectral_apply(H, [&](double x) { return cplx(fl(x)); }), A, 0);
        Ak_.push_back(psi);
        PL_ = spectral_apply(A, [L = cert.proj_threshold_Lambda](double x) {
            return cplx(std::abs(x) <= L + 1e-12 ? 1.0 : 0.0);
        });
        K_ = cert.K.dim() ? cert.K.matrix() : Mat::Zero(H.dim(), H.dim());
    }

    ExplicitBound evaluate(int k) {
        if (k < 1) throw InsufficientCommutatorOrder("k must be >= 1");
        ensure(k);
        const double C0 = cert_.C0, C1 = cert_.C1;
        const double w = (1.0 + 2.0 * k) * C0;
        ExplicitBound b;
        b.k = k;
        b.lhs = Ak_[k].squaredNorm();
        b.terms[0] = 27.0 * (K_ * (PL_ * Ak_[k])).squaredNorm() / (C0 * C0);
        Vec s = Vec::Zero(psi_.size());
        for (int l = 1; l <= k; ++l) s += binom(k, l) * (f_[l] * Ak_[k - l]);
        b.terms[1] = 6.0 * C1 / C0 * s.squaredNorm();
        b.terms[2] = 96.0 / (w * w) * ((h_[k + 1] * psi_).squaredNorm() + double(k) * k * (h_[2] * Ak_[k - 1]).squaredNorm());
        double sum = 0.0;
        for (int j = 2; j <= k - 1; ++j) {
            Vec hk = Ak_[k - 1];
            sum += binom(k + 1, j + 1) * (std::abs(Ak_[k + 1 - j].dot(h_[j + 1] * hk)) +
                                          std::abs(Ak_[k - j].dot(h_[j + 2] * hk)));
        }
        b.terms[3] = 12.0 / w * sum;
        b.rhs = b.terms[0] + b.terms[1] + b.terms[2] + b.terms[3];
        b.margin = b.rhs - b.lhs;
        return b;
    }

private:
    void ensure(int k) {
        extend(h_, k + 1);
        extend(f_, k);
        while (static_cast<int>(Ak_.size()) <= k + 1) Ak_.push_back(A_.matrix() * Ak_.back());
    }
    const HermitianOperator& H_;
    const HermitianOperator& A_;
    const MourreCertificate& cert_;
    Vec psi_;
    CommutatorSequence h_, f_;
    std::vector<Vec> Ak_;
    Mat PL_, K_;
};

inline ExplicitBound explicit_bound_check(const HermitianOperator& H, const HermitianOperator& A,
                                          const MourreCertificate* cert, const Vec& psi, double lambda, int k) {
    if (!cert) throw CertificateMissing("explicit bound needs a Mourre certificate");
    if (std::abs(lambda - cert->lambda) > 1e-8 * std::max(1.0, std::abs(lambda)))
        throw CertificateInvalid("certificate issued for a different eigenvalue");
    BoundEvaluator ev(H, A, *cert, psi);
    return ev.evaluate(k);
}

struct CondadTable {
    double v_fit = kInf;
    std::vector<double> norms;  // norms[k] = ||ad^k(H)(i-H)^{-1}||, k = 1..k_max (norms[0] unused)
};

inline CondadTable condad_check(const HermitianOperator& H, const HermitianOperator& A, int k_max,
                                bool both_signs = false) {
    auto seq = iterated_commutator(H.matrix(), A, k_max);
    Mat Rp = resolvent(H, I_unit);
    Mat Rm = both_signs ? resolvent(H, -I_unit) : Mat();
    CondadTable t;
    t.norms.assign(static_cast<size_t>(k_max) + 1, 0.0);
    for (int k = 1; k <= k_max; ++k) {
        double n = op_norm(Mat(seq[k] * Rp));
        if (both_signs) n = std::max(n, op_norm(Mat(seq[k] * Rm)));
        t.norms[k] = n;
        if (n > 0) t.v_fit = std::min(t.v_fit, std::pow(factorial(k) / n, 1.0 / k));
    }
    return t;
}

inline double growth_fit(const std::vector<double>& norms) {
    double w = kInf;
    for (size_t k = 1; k < norms.size(); ++k)
        if (norms[k] > 0) w = std::min(w, std::pow(factorial(static_cast<int>(k)) / norms[k], 1.0 / k));
    return w;
}

struct Condad2 {
    double v = kInf;           // condad fit of H - lambda
    double v_scaled = kInf;    // condad fit of (H - lambda)/s, both z = +-i
    double scale = 1.0;        // s with h(x) = x/(1+x^2/s^2)
    double w_measured = kInf;  // fit of max(||ad^k h||, ||ad^k f_ana||)
    double w = kInf;           // min(w_measured, v/2)
    std::vector<double> h_norms, f_norms, J_norms, composition_bound, stated_bound;
    double route_residual = 0.0;  // ad^k h directly vs through the resolvent composition sum
    bool bound_holds = true;      // J_norms <= composition_bound * 1.01
    bool stated_bound_holds = true;
};

inline Condad2 condad2_from_condad(const HermitianOperator& H, const HermitianOperator& A,
                                   const RegularizerFamily& fam, int k_max) {
    const double lambda = fam.lambda;
    const Eigen::Index n = H.dim();
    HermitianOperator Hs = H.shifted(lambda);
    Condad2 c;
    c.scale = 1.0 / std::sqrt(fam.nu_effective());
    const double s = c.scale;
    c.v = condad_check(Hs, A, k_max).v_fit;
    HermitianOperator X(Hs.matrix() / s, 1e-10);
    auto tab = condad_check(X, A, k_max, true);
    c.v_scaled = tab.v_fit;

    Mat hH = spectral_apply(Hs, [&](double x) { return cplx(fam.h_n(x)); });
    Mat fH = spectral_apply(Hs, [](double x) { return cplx(1.0 / (1.0 + x * x)); });
    auto hs = iterated_commutator(hH, A, k_max);
    auto fs = iterated_commutator(fH, A, k_max);
    auto xs = iterated_commutator(X.matrix(), A, k_max);
    // sum over compositions through T_k = sum_{a=1}^k ad^a(X) J T_{k-a} / a!, ad^k J = k! J T_k
    struct Route {
        Mat J;
        CommutatorSequence direct;
        std::vector<Mat> T;
    };
    std::vector<Route> routes;
    for (cplx z : {I_unit, -I_unit}) {
        Route r{resolvent(X, z), {}, {Mat::Identity(n, n)}};
        r.direct = iterated_commutator(r.J, A, k_max);
        routes.push_back(std::move(r));
    }
    c.h_norms.assign(k_max + 1, 0.0);
    c.f_norms.assign(k_max + 1, 0.0);
    c.J_norms.assign(k_max + 1, 0.0);
    c.composition_bound.assign(k_max + 1, 0.0);
    c.stated_bound.assign(k_max + 1, 0.0);
    std::vector<double> mx(k_max + 1, 0.0);
    for (int k = 1; k <= k_max; ++k) {
        c.h_norms[k] = op_norm(hs[k]);
        c.f_norms[k] = op_norm(fs[k]);
        mx[k] = std::max(c.h_norms[k], c.f_norms[k]);
        Mat route = Mat::Zero(n, n);
        for (auto& r : routes) {
            Mat Tk = Mat::Zero(n, n);
            for (int a = 1; a <= k; ++a) Tk += (xs[a] * (r.J * r.T[k - a])) / factorial(a);
            r.T.push_back(Tk);
            route += factorial(k) * (r.J * Tk);
            c.J_norms[k] = std::max(c.J_norms[k], op_norm(r.direct[k]));
        }
        double vk = std::isfinite(c.v_scaled) ? std::pow(c.v_scaled, -k) : 0.0;
        c.composition_bound[k] = factorial(k) * vk * static_cast<double>(1LL << (k - 1));
        c.stated_bound[k] = factorial(k) * vk * static_cast<double>(stated_composition_count(k));
        double tol = 1e-12 * std::max(1.0, c.J_norms[k]);
        if (c.J_norms[k] > c.composition_bound[k] * 1.01 + tol) c.bound_holds = false;
        if (c.J_norms[k] > c.stated_bound[k] * 1.01 + tol) c.stated_bound_holds = false;
        // h = -(s/2)(J(i) + J(-i)), so ad^k h = -(s/2)(ad^k J(i) + ad^k J(-i))
        route *= -0.5 * s;
        double d = op_norm(hs[k]);
        double r = op_norm(Mat(route - hs[k]));
        c.route_residual = std::max(c.route_residual, d > 1e-300 ? r / d : r);
    }
    c.w_measured = growth_fit(mx);
    c.w = std::min(c.w_measured, 0.5 * c.v);
    return c;
}

struct AnalyticCheck {
    double q_fit = kInf;
    double theta = 0.0;
    int K = 0;
    double taylor_residual = 0.0;
    double tail_bound = 0.0;
    bool valid() const { return taylor_residual <= 2.0 * tail_bound + 1e-13; }
};

inline AnalyticCheck analytic_radius(const HermitianOperator& A, const Vec& psi, const std::vector<double>& norms) {
    const int K = static_cast<int>(norms.size()) - 1;
    if (K < 6) throw InsufficientCommutatorOrder("analytic_radius needs k_max >= 6");
    AnalyticCheck a;
    a.K = K;
    a.q_fit = q_fit_partial(norms).back();
    if (!std::isfinite(a.q_fit)) return a;  // A psi = 0: exact, zero residual
    a.theta = 0.5 * a.q_fit;
    Vec term = psi, sum = psi;
    for (int j = 1; j <= K; ++j) {
        term = (I_unit * a.theta / double(j)) * (A.matrix() * term);
        sum += term;
    }
    Vec exact = unitary_group(A, a.theta) * psi;
    a.taylor_residual = (sum - exact).norm();
    // sum_{j>K} (theta/q)^j with theta/q = 1/2
    a.tail_bound = std::pow(0.5, K);
    return a;
}

struct RegularityReport {
    double lambda = 0.0;
    double shift = 0.0;  // H was shifted by lambda internally for the growth fits
    Vec psi;
    int k_max = 0;
    std::vector<double> norms;
    std::vector<ExplicitBound> bounds;  // k = 1..min(k_max, bound_k_max) when a certificate exists
    std::vector<double> bound_margins;
    std::vector<double> q_partial;
    double q_fit = kInf;
    double radius_estimate = kInf;
    std::optional<double> condad_v;
    std::optional<double> condad2_w;
    std::optional<Condad2> condad2;
    std::optional<AnalyticCheck> analytic;
};

struct RegularityOptions {
    int k_max = 12;
    int bound_k_max = 6;
    int condad_k_max = 5;
    bool growth = true;
};

inline RegularityReport regularity_report(const HermitianOperator& H, const HermitianOperator& A, double lambda,
                                          const Vec& psi, const MourreCertificate* cert, RegularityOptions opt = {}) {
    RegularityReport r;
    r.lambda = lambda;
    r.shift = lambda;
    r.psi = psi;
    r.k_max = opt.k_max;
    r.norms = norm_sequence(A, psi, opt.k_max);
    r.q_partial = q_fit_partial(r.norms);
    r.q_fit = r.q_partial.back();
    r.radius_estimate = r.q_fit;
    if (cert) {
        BoundEvaluator ev(H, A, *cert, psi);
        for (int k = 1; k <= std::min(opt.k_max, opt.bound_k_max); ++k) {
            r.bounds.push_back(ev.evaluate(k));
            r.bound_margins.push_back(r.bounds.back().margin);
        }
    }
    if (opt.growth) {
        RegularizerFamily fam = cert ? cert->h : default_regularizer(H, lambda, RealInterval(lambda - 1, lambda + 1));
        fam.lambda = lambda;
        auto c2 = condad2_from_condad(H, A, fam, opt.condad_k_max);
        if (std::isfinite(c2.v)) r.condad_v = c2.v;
        if (std::isfinite(c2.w)) r.condad2_w = c2.w;
        r.condad2 = c2;
    }
    if (opt.k_max >= 6) r.analytic = analytic_radius(A, psi, r.norms);
    return r;
}

}  // namespace mourre
