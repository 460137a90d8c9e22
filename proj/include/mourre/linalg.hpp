#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>
#include <limits>

#include "mourre/errors.hpp"

namespace mourre {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void require_square(const Mat& m, const char* what) {
    if (m.rows() != m.cols()) throw DimensionMismatch(std::string(what) + " is not square");
}

inline void require_same_dim(const Mat& a, const Mat& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw DimensionMismatch(what);
}

inline Mat hermitize(const Mat& m) { return 0.5 * (m + m.adjoint()); }

inline double frob(const Mat& m) { return m.norm(); }

inline bool near_hermitian(const Mat& m, double rel = 1e-12) {
    double n = m.norm();
    return (m - m.adjoint()).norm() <= rel * std::max(n, 1e-300);
}

// Operator 2-norm: largest singular value.
inline double op_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    if (m.rows() == m.cols() && near_hermitian(m, 1e-13)) {
        Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m), Eigen::EigenvaluesOnly);
        const auto& w = es.eigenvalues();
        return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
    }
    // anti-Hermitian case reduces to the Hermitian one
    if (m.rows() == m.cols() && (m + m.adjoint()).norm() <= 1e-13 * m.norm()) {
        Mat h = I_unit * m;
        Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(h), Eigen::EigenvaluesOnly);
        const auto& w = es.eigenvalues();
        return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
    }
    Mat g = m.cols() <= m.rows() ? Mat(m.adjoint() * m) : Mat(m * m.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(g), Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, es.eigenvalues()(es.eigenvalues().size() - 1)));
}

inline double op_norm(const Vec& v) { return v.norm(); }

// Smallest eigenvalue of the Hermitian part.
inline double min_eig(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return std::round(r);
}

inline double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

inline Mat pauli(int which) {
    Mat s = Mat::Zero(2, 2);
    switch (which) {
        case 0: s(0, 0) = 1; s(1, 1) = 1; break;
        case 1: s(0, 1) = 1; s(1, 0) = 1; break;
        case 2: s(0, 1) = -I_unit; s(1, 0) = I_unit; break;
        case 3: s(0, 0) = 1; s(1, 1) = -1; break;
        default: throw DimensionMismatch("pauli index");
    }
    return s;
}

}  // namespace mourre
