#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mourre/commutator.hpp"
#include "mourre/jet.hpp"
#include "mourre/mourre.hpp"
#include "mourre/operator.hpp"

namespace mourre {

struct SpinBosonParams {
    double eps = 0.75;        // atom gap, H_at = eps sigma_3
    double mass = 1.0;
    double uv_cutoff = 1.0;   // Lambda in v
    double k_max = 4.0;
    int M = 24;               // radial grid points k_j = j k_max / M
    int n_max = 2;
    Mat G = 0.1 * pauli(1);
};

// Occupation-number basis of the truncated Fock space, states sorted by boson number.
class FockBasis {
public:
    FockBasis(int modes, int n_max) : modes_(modes), n_max_(n_max) {
        std::vector<int> occ(modes, 0);
        for (int n = 0; n <= n_max; ++n) fill(occ, 0, n);
        for (size_t i = 0; i < states_.size(); ++i) index_[states_[i]] = static_cast<int>(i);
    }
    int size() const { return static_cast<int>(states_.size()); }
    int modes() const { return modes_; }
    int n_max() const { return n_max_; }
    const std::vector<int>& state(int i) const { return states_[i]; }
    int number(int i) const {
        int s = 0;
        for (int x : states_[i]) s += x;
        return s;
    }
    int find(const std::vector<int>& occ) const {
        auto it = index_.find(occ);
        return it == index_.end() ? -1 : it->second;
    }

    static long long dimension(int modes, int n_max) {
        long long d = 0;
        for (int n = 0; n <= n_max; ++n) d += static_cast<long long>(binom(modes + n - 1, n));
        return d;
    }

private:
    // occupation tuples of total n with nonzero entries only from position `from` on
    void fill(std::vector<int>& occ, int from, int n) {
        if (n == 0) {
            states_.push_back(occ);
            return;
        }
        for (int j = from; j < modes_; ++j) {
            ++occ[j];
            fill(occ, j, n - 1);
            --occ[j];
        }
    }
    int modes_, n_max_;
    std::vector<std::vector<int>> states_;
    std::map<std::vector<int>, int> index_;
};

namespace sb {

inline double omega(double k, double m) { return std::sqrt(k * k + m * m); }
inline double v_fn(double k, double m, double L) { return std::exp(-k * k / (L * L)) / std::sqrt(omega(k, m)); }

// z -> omega(e^{-z} k) and z -> v(e^{-z} k) e^{-3z/2}, principal branches.
inline cplx omega_c(cplx z, double k, double m) { return std::sqrt(k * k * std::exp(-2.0 * z) + m * m); }
inline cplx vflow_c(cplx z, double k, double m, double L) {
    cplx q = k * k * std::exp(-2.0 * z);
    return std::exp(-q / (L * L)) * std::exp(-0.25 * std::log(q + m * m)) * std::exp(-1.5 * z);
}

inline Jet omega_jet(double k, double m, int order) {
    Jet e = exp(Jet::variable(0.0, order) * -2.0);
    return sqrt(e * (k * k) + m * m);
}
inline Jet vflow_jet(double k, double m, double L, int order) {
    Jet t = Jet::variable(0.0, order);
    Jet q = exp(t * -2.0) * (k * k);
    return exp(q * (-1.0 / (L * L))) * pow(q + m * m, -0.25) * exp(t * -1.5);
}

// l-th derivative at 0 by the trapezoid rule on |z| = r.
template <class F>
double cauchy_derivative(F&& f, int l, double r = kPi / 4, int nodes = 256) {
    cplx s = 0.0;
    for (int j = 0; j < nodes; ++j) {
        double ph = 2.0 * kPi * j / nodes;
        s += f(r * std::exp(I_unit * ph)) * std::exp(-I_unit * (l * ph));
    }
    return (s / double(nodes)).real() * factorial(l) * std::pow(r, -l);
}

}  // namespace sb

struct SpinBosonTruncation {
    SpinBosonParams params;
    double h = 0.0;          // grid spacing
    RVec k, omega, v;        // v in the radial representation phi(k) = sqrt(4 pi h) k psi(k)
    Mat alpha;               // Hermitized discrete dilation generator on the grid
    int fock_dim = 0;
    HermitianOperator H, A, H_f_full, number;
    Mat H_f;                 // dGamma(omega) on Fock space

    Eigen::Index dim() const { return H.dim(); }
    std::vector<double> thresholds() const {
        std::vector<double> t;
        for (int n = 1; n <= params.n_max; ++n)
            for (double s : {-1.0, 1.0}) t.push_back(s * params.eps + n * params.mass);
        std::sort(t.begin(), t.end());
        return t;
    }

    // helpers bound to the stored basis
    std::shared_ptr<FockBasis> basis;
    Mat dGamma(const Mat& o) const;
    Mat creation(const Vec& u) const;
    Mat Phi(const Vec& u) const;
    Vec grid_vector(const std::function<double(double)>& psi_radial) const {
        Vec out(params.M);
        for (int j = 0; j < params.M; ++j) out(j) = psi_radial(k(j)) * k(j) * std::sqrt(4.0 * kPi * h);
        return out;
    }
};

inline Mat SpinBosonTruncation::dGamma(const Mat& o) const {
    const FockBasis& b = *basis;
    const int F = b.size(), M = b.modes();
    Mat out = Mat::Zero(F, F);
    for (int s = 0; s < F; ++s) {
        const auto& occ = b.state(s);
        for (int j = 0; j < M; ++j) {
            if (occ[j] == 0) continue;
            for (int i = 0; i < M; ++i) {
                if (o(i, j) == 0.0) continue;
                auto t = occ;
                double amp = std::sqrt(double(t[j]));
                --t[j];
                ++t[i];
                amp *= std::sqrt(double(t[i]));
                out(b.find(t), s) += o(i, j) * amp;
            }
        }
    }
    return out;
}

inline Mat SpinBosonTruncation::creation(const Vec& u) const {
    const FockBasis& b = *basis;
    const int F = b.size(), M = b.modes();
    Mat out = Mat::Zero(F, F);
    for (int s = 0; s < F; ++s) {
        if (b.number(s) >= b.n_max()) continue;
        for (int j = 0; j < M; ++j) {
            auto t = b.state(s);
            ++t[j];
            out(b.find(t), s) += u(j) * std::sqrt(double(t[j]));
        }
    }
    return out;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// (G (x) a^dagger(u) + G* (x) a(u)) / sqrt 2
inline Mat SpinBosonTruncation::Phi(const Vec& u) const {
    Mat c = creation(u);
    return (kron(params.G, c) + kron(params.G.adjoint(), c.adjoint())) / std::sqrt(2.0);
}

inline Mat discrete_dilation(const RVec& k, double h) {
    const int M = static_cast<int>(k.size());
    Mat D = Mat::Zero(M, M);
    for (int j = 0; j + 1 < M; ++j) {
        D(j, j + 1) = 1.0 / (2.0 * h);
        D(j + 1, j) = -1.0 / (2.0 * h);
    }
    // i (k d/dk + 3/2) on psi, conjugated to the phi = k psi representation
    Mat af = I_unit * (k.cast<cplx>().asDiagonal() * D + 1.5 * Mat::Identity(M, M));
    Mat S = k.cast<cplx>().asDiagonal();
    Mat Si = k.cwiseInverse().cast<cplx>().asDiagonal();
    Mat ap = S * af * Si;
    return hermitize(ap);
}

inline SpinBosonTruncation build_spinboson(const SpinBosonParams& p) {
    if (!(p.mass > 0)) throw DimensionMismatch("spin-boson mass must be positive");
    if (p.n_max < 1) throw DimensionMismatch("n_max must be >= 1");
    if (p.M < 1) throw DimensionMismatch("grid needs points");
    if (p.G.rows() != 2 || p.G.cols() != 2) throw DimensionMismatch("G must be 2x2");
    long long F = FockBasis::dimension(p.M, p.n_max);
    if (2 * F > 5000) throw DimensionOverflow("Hilbert dimension " + std::to_string(2 * F) + " > 5000");
    SpinBosonTruncation m;
    m.params = p;
    m.h = p.k_max / p.M;
    m.k.resize(p.M);
    m.omega.resize(p.M);
    m.v.resize(p.M);
    for (int j = 0; j < p.M; ++j) {
        m.k(j) = (j + 1) * m.h;
        m.omega(j) = sb::omega(m.k(j), p.mass);
        m.v(j) = sb::v_fn(m.k(j), p.mass, p.uv_cutoff) * m.k(j) * std::sqrt(4.0 * kPi * m.h);
    }
    m.alpha = discrete_dilation(m.k, m.h);
    m.basis = std::make_shared<FockBasis>(p.M, p.n_max);
    m.fock_dim = m.basis->size();
    const int Fi = m.fock_dim;
    m.H_f = m.dGamma(m.omega.cast<cplx>().asDiagonal());
    Mat I2 = Mat::Identity(2, 2), IF = Mat::Identity(Fi, Fi);
    Mat H = p.eps * kron(pauli(3), IF) + kron(I2, m.H_f) + m.Phi(m.v.cast<cplx>());
    m.H = HermitianOperator(H, 1e-10);
    m.A = HermitianOperator(kron(I2, m.dGamma(m.alpha)), 1e-10);
    m.H_f_full = HermitianOperator(kron(I2, m.H_f), 1e-10);
    m.number = HermitianOperator(kron(I2, m.dGamma(Mat::Identity(p.M, p.M))), 1e-10);
    return m;
}

// ---- one-particle tables ----

struct OneParticleTable {
    int ell;
    RVec omega_ad;     // d^l/dz^l omega(e^{-z}k) at 0, jet route
    RVec omega_cauchy;
    RVec v_ad;         // d^l/dz^l v(e^{-z}k) e^{-3z/2} at 0, jet route
    RVec v_cauchy;
    double disagreement;  // max |jet - cauchy| relative to the Cauchy scale l! r^-l max|F|
};

inline std::vector<OneParticleTable> oneparticle_commutators(const SpinBosonTruncation& m, int ell_max,
                                                             double tol = 1e-8) {
    if (ell_max > 8) throw DimensionMismatch("ell_max <= 8");
    const auto& p = m.params;
    const double r = kPi / 4;
    std::vector<OneParticleTable> out;
    for (int l = 0; l <= ell_max; ++l) {
        OneParticleTable t{l, RVec(p.M), RVec(p.M), RVec(p.M), RVec(p.M), 0.0};
        for (int j = 0; j < p.M; ++j) {
            double kk = m.k(j);
            t.omega_ad(j) = sb::omega_jet(kk, p.mass, std::max(l, 1)).derivative(l);
            t.v_ad(j) = sb::vflow_jet(kk, p.mass, p.uv_cutoff, std::max(l, 1)).derivative(l);
            auto fo = [&](cplx z) { return sb::omega_c(z, kk, p.mass); };
            auto fv = [&](cplx z) { return sb::vflow_c(z, kk, p.mass, p.uv_cutoff); };
            t.omega_cauchy(j) = sb::cauchy_derivative(fo, l);
            t.v_cauchy(j) = sb::cauchy_derivative(fv, l);
            double mo = 0.0, mv = 0.0;
            for (int q = 0; q < 64; ++q) {
                cplx z = r * std::exp(I_unit * (2.0 * kPi * q / 64));
                mo = std::max(mo, std::abs(fo(z)));
                mv = std::max(mv, std::abs(fv(z)));
            }
            double so = factorial(l) * std::pow(r, -l) * mo, sv = factorial(l) * std::pow(r, -l) * mv;
            t.disagreement = std::max({t.disagreement, std::abs(t.omega_ad(j) - t.omega_cauchy(j)) / so,
                                       std::abs(t.v_ad(j) - t.v_cauchy(j)) / sv});
        }
        if (t.disagreement > tol)
            throw QuadratureDisagreement("ell=" + std::to_string(l) + " disagreement " + std::to_string(t.disagreement));
        out.push_back(t);
    }
    return out;
}

struct BoundRow {
    int ell;
    std::string quantity;
    double grid_max;
    double paper_bound;
    double ratio() const { return paper_bound > 0 ? grid_max / paper_bound : (grid_max > 0 ? kInf : 0.0); }
};

// Every inequality of the Spin-Boson example evaluated on the grid.
inline std::vector<BoundRow> spinboson_bounds(const SpinBosonTruncation& m, int ell_max = 8) {
    const auto& p = m.params;
    const double r = kPi / 4;
    auto tables = oneparticle_commutators(m, ell_max);
    std::vector<BoundRow> rows;

    // |omega(e^{-z}k)| between m/sqrt2 and e^{pi/4} omega(k) on |z| = pi/4
    double upper = 0.0, lower = kInf;
    for (int j = 0; j < p.M; ++j)
        for (int q = 0; q < 256; ++q) {
            cplx z = r * std::exp(I_unit * (2.0 * kPi * q / 256));
            double a = std::abs(sb::omega_c(z, m.k(j), p.mass));
            upper = std::max(upper, a / (std::exp(r) * m.omega(j)));
            lower = std::min(lower, a);
        }
    rows.push_back({0, "omega_flow_upper", upper, 1.0});
    rows.push_back({0, "omega_flow_lower", p.mass / std::sqrt(2.0), lower});

    // (H_f + 1)^{-1/2} on the atom (x) Fock space
    Mat Rhalf = spectral_apply(m.H_f_full, [](double x) { return cplx(1.0 / std::sqrt(x + 1.0)); });
    Mat Rone = spectral_apply(m.H_f_full, [](double x) { return cplx(1.0 / (x + 1.0)); });
    double c_fit = kInf;
    std::vector<double> ad_over_omega(ell_max + 1);
    for (const auto& t : tables) {
        const int l = t.ell;
        double cauchy_l = factorial(l) * std::pow(r, -l);
        double om = 0.0, vv = 0.0;
        for (int j = 0; j < p.M; ++j) {
            om = std::max(om, std::abs(t.omega_ad(j)) / m.omega(j));
            double damp = std::exp(-std::exp(-kPi / 2) * m.k(j) * m.k(j) / (p.uv_cutoff * p.uv_cutoff));
            vv = std::max(vv, std::abs(t.v_ad(j)) / damp);
        }
        rows.push_back({l, "omega_derivative", om, cauchy_l * std::exp(r)});
        rows.push_back({l, "v_derivative", vv, std::pow(p.mass / std::sqrt(2.0), -0.5) * std::exp(3 * kPi / 8) * cauchy_l});

        // Phi((i alpha)^l v)(H_f+1)^{-1/2} against ||omega^{-1/2} (i alpha)^l v||
        Vec u(p.M);
        for (int j = 0; j < p.M; ++j) u(j) = t.v_ad(j) * m.k(j) * std::sqrt(4.0 * kPi * m.h);
        double lhs = op_norm(Mat(m.Phi(u) * Rhalf));
        double rhs = std::sqrt((u.cwiseAbs2().array() / m.omega.array()).sum());
        rows.push_back({l, "phi_estimate", lhs, rhs});

        // dGamma(i^l ad^l(omega))(H_f+1)^{-1} against ||i^l ad^l(omega) omega^{-1}||_inf
        RVec T = t.omega_ad * ((l % 2) ? -1.0 : 1.0);
        Mat dG = kron(Mat::Identity(2, 2), m.dGamma(T.cast<cplx>().asDiagonal()));
        rows.push_back({l, "dgamma_estimate", op_norm(Mat(dG * Rone)), om});
        ad_over_omega[l] = om;
        if (l >= 1 && om > 0) c_fit = std::min(c_fit, std::pow(factorial(l) / om, 1.0 / l));
    }
    for (int l = 1; l <= ell_max; ++l)
        rows.push_back({l, "ad_omega_fit", ad_over_omega[l], factorial(l) * std::pow(c_fit, -l)});
    double dis = 0.0;
    for (const auto& t : tables) dis = std::max(dis, t.disagreement);
    rows.push_back({ell_max, "cauchy_agreement", dis, 1e-8});
    return rows;
}

// ---- commutator structure ----

struct DecompositionCheck {
    double algebraic;  // direct vs dGamma/Phi built from the discrete alpha, sign (-1)^l on Phi
    double algebraic_stated_sign;  // same with the sign (-1)^{l+1}
    double flow;       // direct vs continuum tables on the probe vector
};

inline Vec default_probe(const SpinBosonTruncation& m) {
    // spin-down (x) normalized (vacuum + one smooth boson)
    const int F = m.fock_dim;
    Vec fock = Vec::Zero(F);
    fock(0) = 1.0;
    Vec g = m.grid_vector([&](double k) { return std::exp(-4.0 * (k - 1.5) * (k - 1.5)); });
    fock += m.creation(g).col(0);
    fock /= fock.norm();
    Vec spin = Vec::Zero(2);
    spin(1) = 1.0;
    Vec out(2 * F);
    for (int s = 0; s < 2; ++s) out.segment(s * F, F) = spin(s) * fock;
    return out;
}

inline DecompositionCheck commutator_decomposition_check(const SpinBosonTruncation& m, int ell,
                                                         const std::optional<Vec>& probe = std::nullopt) {
    if (ell < 1 || ell > 3) throw DimensionMismatch("ell must be 1..3");
    auto seq = iterated_commutator(m.H.matrix(), m.A, ell);
    Mat lhs = std::pow(I_unit, ell) * seq[ell];
    // discrete route
    auto one = iterated_commutator(Mat(m.omega.cast<cplx>().asDiagonal()), HermitianOperator(m.alpha, 1e-10), ell);
    Mat dG = kron(Mat::Identity(2, 2), m.dGamma(Mat(std::pow(I_unit, ell) * one[ell])));
    Vec u = m.v.cast<cplx>();
    for (int j = 0; j < ell; ++j) u = I_unit * (m.alpha * u);
    double sign = (ell % 2) ? -1.0 : 1.0;
    Mat ph = m.Phi(u);
    DecompositionCheck out{};
    out.algebraic = op_norm(Mat(lhs - (dG + sign * ph)));
    out.algebraic_stated_sign = op_norm(Mat(lhs - (dG - sign * ph)));
    // continuum tables
    auto tables = oneparticle_commutators(m, ell);
    RVec T = tables[ell].omega_ad * sign;
    Vec w(m.params.M);
    for (int j = 0; j < m.params.M; ++j) w(j) = tables[ell].v_ad(j) * m.k(j) * std::sqrt(4.0 * kPi * m.h);
    Mat cont = kron(Mat::Identity(2, 2), m.dGamma(T.cast<cplx>().asDiagonal())) + sign * m.Phi(w);
    Vec psi = probe ? *probe : default_probe(m);
    out.flow = ((lhs - cont) * psi).norm();
    return out;
}

// ---- Mourre estimate on an energy window ----

struct SpinBosonMourre {
    enum class Status { positive, no_positivity, vacuous };
    Status status = Status::no_positivity;
    std::string reason;
    StandardMourreInput input;
    std::optional<BestC0> best;
    int budget = 0;
    double threshold_distance = 0.0;
};

inline const char* to_string(SpinBosonMourre::Status s) {
    switch (s) {
        case SpinBosonMourre::Status::positive: return "positive";
        case SpinBosonMourre::Status::vacuous: return "vacuous";
        default: return "no_positivity";
    }
}

// budget < 0: half the rank of 1_I(H), absorbing the +- pairs of the central-difference commutator.
inline SpinBosonMourre spinboson_mourre(const SpinBosonTruncation& m, RealInterval I, int budget = -1) {
    SpinBosonMourre out;
    out.input.H = m.H;
    out.input.A = m.A;
    out.input.I = I;
    double dist = kInf;
    for (double t : m.thresholds()) dist = std::min(dist, std::max({I.lo - t, t - I.hi, 0.0}));
    out.threshold_distance = dist;
    int rank = static_cast<int>(spectral_subspace(m.H, I).cols());
    out.budget = budget >= 0 ? budget : rank / 2;
    try {
        out.best = best_C0(m.H, m.A, I, out.budget);
    } catch (const NoPositivity& e) {
        out.reason = e.what();
    }
    if (dist < m.params.mass / 4) {
        out.status = SpinBosonMourre::Status::no_positivity;
        out.reason = "threshold within m/4 of I (distance " + std::to_string(dist) + ")";
        return out;
    }
    if (!out.best) {
        out.status = SpinBosonMourre::Status::no_positivity;
        return out;
    }
    if (out.best->vacuous) {
        out.status = SpinBosonMourre::Status::vacuous;
        out.reason = "1_I(H) = 0";
        return out;
    }
    out.status = SpinBosonMourre::Status::positive;
    out.input.C0_tilde = out.best->C0_tilde;
    out.input.K_tilde = out.best->K_tilde;
    return out;
}

}  // namespace mourre
