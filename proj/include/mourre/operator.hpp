#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <random>

#include "mourre/linalg.hpp"

namespace mourre {

struct RealInterval {
    double lo = 0.0;
    double hi = 0.0;

    RealInterval() = default;
    RealInterval(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw DimensionMismatch("interval with lo > hi");
    }
    double width() const { return hi - lo; }
    double center() const { return 0.5 * (lo + hi); }
    // Closed interval, endpoints widened by 1e-12.
    bool contains(double x) const { return x >= lo - 1e-12 && x <= hi + 1e-12; }
};

struct SpectralDecomposition {
    RVec eigenvalues;  // ascending
    Mat eigenvectors;  // columns
};

class HermitianOperator {
public:
    HermitianOperator() : HermitianOperator(Mat::Zero(0, 0)) {}

    explicit HermitianOperator(Mat m, double hermiticity_tol = 1e-12)
        : m_(std::move(m)), tol_(hermiticity_tol), cache_(std::make_shared<Cache>()) {
        require_square(m_, "HermitianOperator");
        double n = m_.norm();
        if ((m_ - m_.adjoint()).norm() > tol_ * std::max(n, 1e-300) && n > 0)
            throw NotHermitian("defect " + std::to_string((m_ - m_.adjoint()).norm() / n));
        m_ = hermitize(m_);
    }

    Eigen::Index dim() const { return m_.rows(); }
    const Mat& matrix() const { return m_; }
    double hermiticity_tol() const { return tol_; }
    double norm() const { return spectral_radius(); }

    const SpectralDecomposition& spectrum() const {
        std::call_once(cache_->once, [this] {
            Eigen::SelfAdjointEigenSolver<Mat> es(m_);
            if (es.info() != Eigen::Success) throw DecompositionFailed("eigensolver");
            cache_->sd.eigenvalues = es.eigenvalues();
            cache_->sd.eigenvectors = es.eigenvectors();
        });
        return cache_->sd;
    }

    const RVec& eigenvalues() const { return spectrum().eigenvalues; }
    const Mat& eigenvectors() const { return spectrum().eigenvectors; }

    double spectral_radius() const {
        if (dim() == 0) return 0.0;
        const auto& w = eigenvalues();
        return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
    }

    HermitianOperator operator+(const HermitianOperator& o) const { return HermitianOperator(m_ + o.m_); }
    HermitianOperator operator-(const HermitianOperator& o) const { return HermitianOperator(m_ - o.m_); }
    HermitianOperator operator*(double s) const { return HermitianOperator(s * m_); }
    HermitianOperator shifted(double s) const {
        return HermitianOperator(m_ - s * Mat::Identity(dim(), dim()));
    }

private:
    struct Cache {
        std::once_flag once;
        SpectralDecomposition sd;
    };
    Mat m_;
    double tol_;
    std::shared_ptr<Cache> cache_;
};

// (zI - M)^{-1}
inline Mat resolvent(const HermitianOperator& M, cplx z) {
    const auto& w = M.eigenvalues();
    double dist = kInf;
    for (Eigen::Index i = 0; i < w.size(); ++i) dist = std::min(dist, std::abs(z - w(i)));
    if (dist <= 1e-12) throw SingularResolvent("z within 1e-12 of spectrum");
    const Mat& V = M.eigenvectors();
    Vec d(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) d(i) = 1.0 / (z - w(i));
    return V * d.asDiagonal() * V.adjoint();
}

inline Mat spectral_apply(const HermitianOperator& M, const std::function<cplx(double)>& f) {
    const auto& w = M.eigenvalues();
    const Mat& V = M.eigenvectors();
    Vec d(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) d(i) = f(w(i));
    return V * d.asDiagonal() * V.adjoint();
}

inline HermitianOperator spectral_function(const HermitianOperator& M, const std::function<double(double)>& f) {
    const auto& w = M.eigenvalues();
    const Mat& V = M.eigenvectors();
    RVec d(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) d(i) = f(w(i));
    return HermitianOperator(hermitize(V * d.cast<cplx>().asDiagonal() * V.adjoint()), 1e-10);
}

inline HermitianOperator spectral_projection(const HermitianOperator& M, RealInterval I) {
    return spectral_function(M, [I](double x) { return I.contains(x) ? 1.0 : 0.0; });
}

// Orthonormal basis of ran 1_I(M).
inline Mat spectral_subspace(const HermitianOperator& M, RealInterval I) {
    const auto& w = M.eigenvalues();
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        if (I.contains(w(i))) idx.push_back(i);
    Mat B(M.dim(), static_cast<Eigen::Index>(idx.size()));
    for (size_t j = 0; j < idx.size(); ++j) B.col(j) = M.eigenvectors().col(idx[j]);
    return B;
}

inline Mat unitary_group(const HermitianOperator& M, double t) {
    return spectral_apply(M, [t](double x) { return std::exp(I_unit * (t * x)); });
}

inline Mat identity(Eigen::Index n) { return Mat::Identity(n, n); }

// Seeded random Hermitian matrix with operator norm 1.
inline HermitianOperator random_hermitian(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = cplx(g(rng), g(rng));
    Mat h = hermitize(m);
    h *= scale / op_norm(h);
    return HermitianOperator(h);
}

inline Vec random_unit_vector(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
    return v / v.norm();
}

inline Mat random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    return unitary_group(random_hermitian(n, rng, kPi), 1.0);
}

}  // namespace mourre
