#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mourre/commutator.hpp"
#include "mourre/functions.hpp"
#include "mourre/operator.hpp"

namespace mourre {

inline constexpr double kFormTol = 1e-10;

// i ad_A(H) = i(HA - AH), the matrix behind i[H, A].
inline Mat i_ad(const Mat& H, const Mat& A) { return I_unit * ad(H, A); }

struct StandardMourreInput {
    HermitianOperator H, A;
    RealInterval I;
    double C0_tilde = 0.0;
    HermitianOperator K_tilde;
};

struct FormCheck {
    double margin;  // smallest eigenvalue of the defect
    double scale;   // max(1, ||defect||)
    bool valid() const { return margin >= -kFormTol * scale; }
};

inline FormCheck form_check(const Mat& defect) {
    Mat d = hermitize(defect);
    Eigen::SelfAdjointEigenSolver<Mat> es(d, Eigen::EigenvaluesOnly);
    const auto& w = es.eigenvalues();
    double nrm = std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
    return {w(0), std::max(1.0, nrm)};
}

inline Mat standard_defect(const StandardMourreInput& in) {
    Mat P = spectral_projection(in.H, in.I).matrix();
    Mat B = i_ad(in.H.matrix(), in.A.matrix());
    Mat K = in.K_tilde.dim() ? in.K_tilde.matrix() : Mat::Zero(P.rows(), P.cols());
    return P * B * P - in.C0_tilde * P + K;
}

inline FormCheck verify_standard(const StandardMourreInput& in) { return form_check(standard_defect(in)); }

struct BestC0 {
    double C0_tilde = 0.0;
    HermitianOperator K_tilde;
    int rank_P = 0;
    int rank_K = 0;
    bool vacuous = false;    // 1_I(H) = 0
    bool saturated = false;  // rank 1_I(H) <= budget, any constant works; capped
    double margin = 0.0;
    double K_norm = 0.0;
    std::vector<double> restricted_spectrum;  // eigenvalues of 1_I i ad_A(H) 1_I on ran 1_I
};

namespace detail {

struct Restricted {
    Mat W;     // basis of ran 1_I(H)
    Mat U;     // eigenvectors of W* B W
    RVec mu;   // ascending
};

inline Restricted restrict_commutator(const HermitianOperator& H, const HermitianOperator& A, RealInterval I) {
    Restricted r;
    r.W = spectral_subspace(H, I);
    if (r.W.cols() == 0) return r;
    Mat B = i_ad(H.matrix(), A.matrix());
    Mat Br = hermitize(Mat(r.W.adjoint() * B * r.W));
    Eigen::SelfAdjointEigenSolver<Mat> es(Br);
    r.U = es.eigenvectors();
    r.mu = es.eigenvalues();
    return r;
}

// Negative part of W(B_r - C)W*, compressed to the `budget` most negative directions.
inline Mat negative_part(const Restricted& r, double C, int budget, int* rank = nullptr) {
    Mat K = Mat::Zero(r.W.rows(), r.W.rows());
    int used = 0;
    for (Eigen::Index i = 0; i < r.mu.size() && used < budget; ++i) {
        double d = r.mu(i) - C;
        if (d >= 0) break;
        Vec v = r.W * r.U.col(i);
        K += (-d) * v * v.adjoint();
        ++used;
    }
    if (rank) *rank = used;
    return K;
}

inline double restricted_margin(const Restricted& r, double C, int budget) {
    // defect eigenvalues: mu_i - C off the compressed directions, 0 on them and on ran(1 - 1_I)
    double m = r.W.rows() > r.W.cols() ? 0.0 : kInf;
    int used = 0;
    for (Eigen::Index i = 0; i < r.mu.size(); ++i) {
        double d = r.mu(i) - C;
        if (d < 0 && used < budget) {
            ++used;
            m = std::min(m, 0.0);
            continue;
        }
        m = std::min(m, d);
    }
    return m;
}

}  // namespace detail

// Largest C~0 with a defect margin >= 0 when K~ absorbs at most `budget` negative directions.
inline BestC0 best_C0(const HermitianOperator& H, const HermitianOperator& A, RealInterval I, int budget) {
    if (!(I.hi > I.lo)) throw DimensionMismatch("best_C0 needs a non-degenerate interval");
    BestC0 out;
    auto r = detail::restrict_commutator(H, A, I);
    out.rank_P = static_cast<int>(r.W.cols());
    const Eigen::Index n = H.dim();
    if (out.rank_P == 0) {
        out.vacuous = true;
        out.C0_tilde = kInf;
        out.K_tilde = HermitianOperator(Mat::Zero(n, n));
        return out;
    }
    out.restricted_spectrum.assign(r.mu.data(), r.mu.data() + r.mu.size());
    double scale = std::max(1.0, std::max(std::abs(r.mu(0)), std::abs(r.mu(r.mu.size() - 1))));
    double cap = 2.0 * std::max(op_norm(i_ad(H.matrix(), A.matrix())), 1e-300);
    if (out.rank_P <= budget) {
        out.saturated = true;
        out.C0_tilde = cap;
    } else {
        auto ok = [&](double C) { return detail::restricted_margin(r, C, budget) >= -1e-12 * scale; };
        double lo = 0.0, hi = cap;
        if (!ok(0.0) || !ok(1e-8 * scale)) throw NoPositivity("no positive constant at rank budget " + std::to_string(budget));
        for (int it = 0; it < 50 && hi - lo > 1e-8 * scale; ++it) {
            double mid = 0.5 * (lo + hi);
            (ok(mid) ? lo : hi) = mid;
        }
        out.C0_tilde = lo;
    }
    Mat K = detail::negative_part(r, out.C0_tilde, budget, &out.rank_K);
    out.K_tilde = HermitianOperator(hermitize(K), 1e-10);
    out.K_norm = op_norm(K);
    StandardMourreInput in{H, A, I, out.C0_tilde, out.K_tilde};
    out.margin = verify_standard(in).margin;
    return out;
}

// nu = 1/(4 s^2), s the largest |x - lambda| over eigenvalues in supp f_loc; keeps h' > 0 there.
inline RegularizerFamily default_regularizer(const HermitianOperator& H, double lambda, RealInterval I) {
    auto fl = make_f_loc(lambda, I.lo, I.hi);
    const auto& w = H.eigenvalues();
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (w(i) >= fl.lo && w(i) <= fl.hi) s = std::max(s, std::abs(w(i) - lambda));
    if (s <= 0.0) s = 0.5 * (fl.hi - fl.lo);
    RegularizerFamily fam;
    fam.nu = 1.0 / (4.0 * s * s);
    fam.lambda = lambda;
    return fam;
}

enum class FKind { loc, ana };

inline const char* to_string(FKind k) { return k == FKind::loc ? "f_loc" : "f_ana"; }

struct StageRecord {
    std::string stage;
    std::string constant_name;
    double value;
    std::optional<double> margin;
};

struct MourreCertificate {
    double lambda = 0.0;
    RealInterval interval_I;
    double C0 = 0.0;
    double C1 = 0.0;
    double C1_loc = 0.0;  // before any f_ana rescaling
    HermitianOperator K;
    FKind f_kind = FKind::loc;
    RegularizerFamily h;  // h.n = n0, h.lambda = lambda
    double proj_threshold_Lambda = 0.0;
    double margin = 0.0;
    double C0_tilde = 0.0;
    double delta = 0.0;
    double ad_h_norm = 0.0;
    double f_ratio = 1.0;
    std::vector<StageRecord> stages;

    SmoothFunction f_loc() const { return make_f_loc(lambda, interval_I.lo, interval_I.hi); }
    SmoothFunction f() const { return f_kind == FKind::loc ? f_loc() : make_f_ana(lambda); }
};

inline Mat h_matrix(const RegularizerFamily& h, const HermitianOperator& H) {
    return spectral_apply(H, [&](double x) { return cplx(h.h(x)); });
}

inline Mat smooth_defect(const MourreCertificate& c, const HermitianOperator& H, const HermitianOperator& A) {
    const Eigen::Index n = H.dim();
    Mat hH = h_matrix(c.h, H);
    auto f = c.f();
    Mat fp = spectral_apply(H, [&](double x) { return cplx(1.0 - f(x)); });
    Mat K = c.K.dim() ? c.K.matrix() : Mat::Zero(n, n);
    return i_ad(hH, A.matrix()) - c.C0 * Mat::Identity(n, n) + c.C1 * fp * fp + K;
}

inline FormCheck verify_smooth(const MourreCertificate& c, const HermitianOperator& H, const HermitianOperator& A) {
    return form_check(smooth_defect(c, H, A));
}

// sup_x f_loc,perp(x) / f_ana,perp(x) on a grid over the hull and the f_loc support.
inline double f_ratio_sup(double lambda, RealInterval I, double hull_lo, double hull_hi, int points = 10000) {
    auto fl = make_f_loc(lambda, I.lo, I.hi);
    auto fa = make_f_ana(lambda);
    double best = 0.0;
    auto probe = [&](double x) {
        double den = 1.0 - fa(x);
        if (den <= 1e-300) return;
        best = std::max(best, (1.0 - fl(x)) / den);
    };
    double a = std::min(hull_lo, fl.lo), b = std::max(hull_hi, fl.hi);
    for (int i = 0; i < points; ++i) probe(a + (b - a) * i / (points - 1));
    for (int i = 0; i < points; ++i) probe(fl.lo + (fl.hi - fl.lo) * i / (points - 1));
    for (double x : {fl.lo, fl.hi, hull_lo, hull_hi}) probe(x);
    // outside the grid the ratio tends to 1 from below or above; include the limit
    return std::max(best, 1.0);
}

struct TaylorBound {
    double measured;  // ||(1 - h_n') 1_supp(f)(H)||
    double bound;     // sup|t| sup|h''| / n over supp f - lambda
};

inline TaylorBound taylor_bound_check(const RegularizerFamily& h, const HermitianOperator& H, const SmoothFunction& f) {
    double measured = 0.0;
    const auto& w = H.eigenvalues();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < f.lo || w(i) > f.hi) continue;
        double hp = h_nu_fn(Jet::variable((w(i) - h.lambda) / h.n, 1), h.nu)[1];
        measured = std::max(measured, std::abs(1.0 - hp));
    }
    double tmax = std::max(std::abs(f.lo - h.lambda), std::abs(f.hi - h.lambda));
    double h2 = 0.0;
    const int pts = 4001;
    for (int i = 0; i < pts; ++i) {
        double s = (f.lo - h.lambda) + (f.hi - f.lo) * i / (pts - 1);
        h2 = std::max(h2, std::abs(h_nu_fn(Jet::variable(s, 2), h.nu).derivative(2)));
    }
    return {measured, tmax * h2 / h.n};
}

// Smallest Lambda in {0} u {|a_i|} with 2 ||1_{|A|>Lambda} K||^2 <= C0^2 / 81.
// Smallest Lambda in {0, |a_i|} with 2||1_{|A|>Lambda} K||^2 <= C0^2/81. The norm is monotone in Lambda,
// so the candidates are bisected in the eigenbasis of A.
inline double choose_projection_threshold(const HermitianOperator& A, const Mat& K, double C0, double* achieved = nullptr) {
    std::vector<double> cand{0.0};
    const auto& a = A.eigenvalues();
    for (Eigen::Index i = 0; i < a.size(); ++i) cand.push_back(std::abs(a(i)));
    std::sort(cand.begin(), cand.end());
    Mat Kt = A.eigenvectors().adjoint() * K;
    auto value = [&](double L) {
        std::vector<Eigen::Index> rows;
        for (Eigen::Index i = 0; i < a.size(); ++i)
            if (std::abs(a(i)) > L + 1e-12) rows.push_back(i);
        if (rows.empty()) return 0.0;
        Mat sub(static_cast<Eigen::Index>(rows.size()), Kt.cols());
        for (size_t r = 0; r < rows.size(); ++r) sub.row(static_cast<Eigen::Index>(r)) = Kt.row(rows[r]);
        return 2.0 * std::pow(op_norm(sub), 2);
    };
    const double target = C0 * C0 / 81.0;
    size_t lo = 0, hi = cand.size() - 1;
    if (value(cand[lo]) <= target) hi = lo;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        (value(cand[mid]) <= target ? hi : lo) = mid;
    }
    if (achieved) *achieved = value(cand[hi]);
    return cand[hi];
}

struct LocalizeOptions {
    int max_log2_n0 = 20;
    bool require_valid = true;
};

// Standard estimate -> smooth estimate with the explicit constants, every stage checked.
inline MourreCertificate localize(const StandardMourreInput& in, RegularizerFamily fam, FKind f_kind,
                                  LocalizeOptions opt = {}) {
    const HermitianOperator& H = in.H;
    const HermitianOperator& A = in.A;
    const Eigen::Index n = H.dim();
    const double lambda = fam.lambda;
    const double Ct = in.C0_tilde;
    if (!(Ct > 0) || !std::isfinite(Ct)) throw CertificateInvalid("standard constant must be positive and finite");
    auto st = verify_standard(in);
    if (!st.valid()) throw CertificateInvalid("standard estimate margin " + std::to_string(st.margin));

    MourreCertificate c;
    c.lambda = lambda;
    c.interval_I = in.I;
    c.f_kind = f_kind;
    c.C0_tilde = Ct;
    c.stages.push_back({"standard", "C0_tilde", Ct, st.margin});

    auto fl = make_f_loc(lambda, in.I.lo, in.I.hi);
    Mat F = spectral_apply(H, [&](double x) { return cplx(fl(x)); });
    Mat Fp = Mat::Identity(n, n) - F;
    Mat B = i_ad(H.matrix(), A.matrix());
    Mat K = F * in.K_tilde.matrix() * F;
    Mat Id = Mat::Identity(n, n);

    // (i) Peter-Paul with epsilon = 1/4
    auto pp = form_check(F * B * F - (0.75 * Ct * Id - 3.0 * Ct * Fp * Fp - K));
    c.stages.push_back({"peterpaul1", "three_quarter_C0_tilde", 0.75 * Ct, pp.margin});

    // (ii) scale search
    int n0 = std::max(1, static_cast<int>(std::ceil(H.spectral_radius())));
    double err2 = kInf;
    Mat hH, adh;
    int tries = 0;
    for (;; n0 *= 2, ++tries) {
        if (n0 > (1 << opt.max_log2_n0)) throw ScaleSearchFailed("no n0 <= 2^" + std::to_string(opt.max_log2_n0));
        fam.n = n0;
        hH = h_matrix(fam, H);
        adh = ad(hH, A.matrix());
        err2 = op_norm(Mat(F * (B - I_unit * adh) * F));
        if (err2 <= Ct / 4.0) break;
    }
    c.h = fam;
    c.stages.push_back({"scale_search", "n0", static_cast<double>(n0), std::nullopt});
    c.stages.push_back({"mourre2", "f_iad_H_minus_h_f_norm", err2, Ct / 4.0 - err2});
    auto tb = taylor_bound_check(fam, H, fl);
    c.stages.push_back({"taylor", "one_minus_hprime", tb.measured, tb.bound - tb.measured});

    // h' > 0 on supp f_loc
    double hp_min = kInf;
    for (int i = 0; i <= 2000; ++i) {
        double x = fl.lo + (fl.hi - fl.lo) * i / 2000.0;
        hp_min = std::min(hp_min, h_nu_fn(Jet::variable(x - lambda, 1), fam.nu_effective())[1]);
    }
    c.stages.push_back({"h_monotone", "min_hprime_on_supp", hp_min, hp_min});

    Mat iadh = I_unit * adh;
    // i ad h = f X f - f_perp X f_perp + 2 Re(f_perp X) exactly, so the cross term enters with +
    Mat cross = Fp * iadh + (Fp * iadh).adjoint();
    Mat m3_rhs = 0.5 * Ct * Id - 3.0 * Ct * Fp * Fp - K - Fp * iadh * Fp;
    auto m3 = form_check(iadh - (m3_rhs + cross));
    c.stages.push_back({"mourre3", "half_C0_tilde", 0.5 * Ct, m3.margin});
    c.stages.push_back({"mourre3_minus_cross_info", "half_C0_tilde", 0.5 * Ct, form_check(iadh - (m3_rhs - cross)).margin});

    // (iii) delta, (iv) constants
    c.ad_h_norm = op_norm(adh);
    c.delta = c.ad_h_norm > 0 ? Ct / (4.0 * c.ad_h_norm * c.ad_h_norm) : kInf;
    c.stages.push_back({"delta", "delta", c.delta, Ct / 4.0 - c.delta * c.ad_h_norm * c.ad_h_norm});
    c.C0 = Ct / 4.0;
    c.C1 = 3.0 * Ct + (std::isfinite(c.delta) ? 1.0 / c.delta : 0.0) + c.ad_h_norm;
    c.C1_loc = c.C1;
    c.K = HermitianOperator(hermitize(K), 1e-10);
    auto m4 = form_check(iadh - (c.C0 * Id - c.C1 * Fp * Fp - K));
    c.stages.push_back({"mourre4", "C0", c.C0, m4.margin});
    c.stages.push_back({"mourre4", "C1", c.C1, m4.margin});
    c.stages.push_back({"mourre4", "ad_h_norm", c.ad_h_norm, std::nullopt});

    // (v) analytic localizer
    if (f_kind == FKind::ana) {
        const auto& w = H.eigenvalues();
        c.f_ratio = f_ratio_sup(lambda, in.I, w(0), w(w.size() - 1));
        c.C1 *= c.f_ratio;
        c.stages.push_back({"f_ana", "sup_ratio", c.f_ratio, std::nullopt});
        c.stages.push_back({"f_ana", "C1", c.C1, std::nullopt});
    }

    // (vi) projection threshold and final check
    double achieved = 0.0;
    c.proj_threshold_Lambda = choose_projection_threshold(A, K, c.C0, &achieved);
    c.stages.push_back({"projection", "Lambda", c.proj_threshold_Lambda, c.C0 * c.C0 / 81.0 - achieved});

    auto fin = verify_smooth(c, H, A);
    c.margin = fin.margin;
    c.stages.push_back({"smooth", "margin", fin.margin, fin.margin});
    if (opt.require_valid && !fin.valid())
        throw CertificateInvalid("smooth estimate margin " + std::to_string(fin.margin));
    return c;
}

}  // namespace mourre
