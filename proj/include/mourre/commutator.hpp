#pragma once

#include <vector>

#include "mourre/operator.hpp"

namespace mourre {

// ad_A(B) = BA - AB. Much of the literature uses the opposite sign.
inline Mat ad(const Mat& B, const Mat& A) { return B * A - A * B; }

struct CommutatorSequence {
    Mat base;
    HermitianOperator conjugator;
    std::vector<Mat> ads;  // ads[j] = ad_A^j(B)

    const Mat& operator[](size_t j) const { return ads.at(j); }
    size_t order() const { return ads.size() - 1; }
};

inline CommutatorSequence iterated_commutator(const Mat& B, const HermitianOperator& A, int k) {
    require_same_dim(B, A.matrix(), "iterated_commutator: dimensions differ");
    CommutatorSequence s{B, A, {B}};
    s.ads.reserve(static_cast<size_t>(k) + 1);
    for (int j = 1; j <= k; ++j) s.ads.push_back(ad(s.ads.back(), A.matrix()));
    return s;
}

inline void extend(CommutatorSequence& s, int k) {
    while (static_cast<int>(s.order()) < k) s.ads.push_back(ad(s.ads.back(), s.conjugator.matrix()));
}

// Residual of [K, L^k] = sum_j binom(k,j) L^{k-j} ad_L^j(K).
inline double power_expansion_check(const Mat& K, const Mat& L, int k) {
    require_same_dim(K, L, "power_expansion_check: dimensions differ");
    const Eigen::Index n = K.rows();
    std::vector<Mat> Lp{Mat::Identity(n, n)};
    for (int j = 1; j <= k; ++j) Lp.push_back(Lp.back() * L);
    Mat lhs = K * Lp[k] - Lp[k] * K;
    Mat rhs = Mat::Zero(n, n);
    Mat adj = K;
    for (int j = 1; j <= k; ++j) {
        adj = ad(adj, L);
        rhs += binom(k, j) * Lp[k - j] * adj;
    }
    return op_norm(Mat(lhs - rhs));
}

using Composition = std::vector<int>;

// Ordered tuples of positive integers summing to k, lexicographic.
inline std::vector<Composition> enumerate_compositions(int k) {
    std::vector<Composition> out;
    if (k < 1) return out;
    Composition cur;
    std::function<void(int)> rec = [&](int rest) {
        if (rest == 0) {
            out.push_back(cur);
            return;
        }
        for (int a = 1; a <= rest; ++a) {
            cur.push_back(a);
            rec(rest - a);
            cur.pop_back();
        }
    };
    rec(k);
    return out;
}

// Count stated in the source text for C(k); kept for reporting only.
inline long long stated_composition_count(int k) { return (1LL << (k - 1)) - 1; }

inline double multinomial_weight(const Composition& a) {
    int k = 0;
    double den = 1.0;
    for (int x : a) {
        k += x;
        den *= factorial(x);
    }
    return factorial(k) / den;
}

struct FormulaPair {
    Mat direct;
    Mat formula;
    double relative_residual() const {
        double d = op_norm(Mat(formula));
        double r = op_norm(Mat(direct - formula));
        return d > 0 ? r / d : r;
    }
};

// ad_A^k((z-H)^{-1}) directly and through the sum over compositions.
inline FormulaPair resolvent_commutator_formula(const HermitianOperator& H, const HermitianOperator& A, cplx z,
                                                int k) {
    require_same_dim(H.matrix(), A.matrix(), "resolvent_commutator_formula: dimensions differ");
    Mat J = resolvent(H, z);
    auto seqJ = iterated_commutator(J, A, k);
    auto seqH = iterated_commutator(H.matrix(), A, k);
    std::vector<Mat> adHJ(static_cast<size_t>(k) + 1);
    for (int a = 1; a <= k; ++a) adHJ[a] = seqH[a] * J;
    Mat formula = Mat::Zero(H.dim(), H.dim());
    for (const auto& c : enumerate_compositions(k)) {
        Mat term = J;
        for (int a : c) term = term * adHJ[a];
        formula += multinomial_weight(c) * term;
    }
    return {seqJ[k], formula};
}

// Central difference of order 2 for the j-th derivative at 0.
inline Mat central_difference(const std::function<Mat(double)>& F, int j, double h) {
    switch (j) {
        case 1: return (F(h) - F(-h)) / (2 * h);
        case 2: return (F(h) - 2.0 * F(0) + F(-h)) / (h * h);
        case 3: return (F(2 * h) - 2.0 * F(h) + 2.0 * F(-h) - F(-2 * h)) / (2 * h * h * h);
        case 4: return (F(2 * h) - 4.0 * F(h) + 6.0 * F(0) - 4.0 * F(-h) + F(-2 * h)) / (h * h * h * h);
        default: throw DimensionMismatch("derivative order must be 1..4");
    }
}

struct DerivativeCheck {
    double residual;        // ||finite difference - (-1)^j i^j ad_A^j(H)||
    double commutator_norm; // ||ad_A^j(H)||
};

// d^j/dt^j e^{itA} H e^{-itA} at 0 equals (-1)^j i^j ad_A^j(H).
inline DerivativeCheck conjugation_derivative_check(const HermitianOperator& H, const HermitianOperator& A, int j,
                                                    double step = 1e-2, bool richardson = true) {
    require_same_dim(H.matrix(), A.matrix(), "conjugation_derivative_check: dimensions differ");
    auto F = [&](double t) -> Mat {
        Mat U = unitary_group(A, t);
        return U * H.matrix() * U.adjoint();
    };
    Mat fd = central_difference(F, j, step);
    if (richardson && j >= 3) fd = (4.0 * central_difference(F, j, step / 2) - fd) / 3.0;
    auto seq = iterated_commutator(H.matrix(), A, j);
    cplx pref = std::pow(-I_unit, j);  // (-1)^j i^j
    Mat expected = pref * seq[j];
    return {op_norm(Mat(fd - expected)), op_norm(Mat(seq[j]))};
}

}  // namespace mourre
