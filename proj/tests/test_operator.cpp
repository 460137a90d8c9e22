#include <gtest/gtest.h>

#include "mourre/operator.hpp"

using namespace mourre;

namespace {

Mat diag(std::initializer_list<double> v) {
    RVec d(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) d(i++) = x;
    return d.cast<cplx>().asDiagonal();
}

}  // namespace

TEST(HermitianOperator, RejectsNonHermitian) {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(HermitianOperator{m}, NotHermitian);
}

TEST(HermitianOperator, DecompositionReconstructs) {
    std::mt19937_64 rng(7);
    auto M = random_hermitian(12, rng, 3.0);
    const Mat& V = M.eigenvectors();
    Mat rec = V * M.eigenvalues().cast<cplx>().asDiagonal() * V.adjoint();
    EXPECT_LE(op_norm(Mat(rec - M.matrix())), 1e-10 * M.norm());
    EXPECT_LE(op_norm(Mat(V.adjoint() * V - Mat::Identity(12, 12))), 1e-10);
    for (Eigen::Index i = 1; i < 12; ++i) EXPECT_LE(M.eigenvalues()(i - 1), M.eigenvalues()(i));
    EXPECT_NEAR(M.norm(), 3.0, 1e-12);
}

TEST(Resolvent, ZeroOperator) {
    HermitianOperator M(Mat::Zero(2, 2));
    Mat R = resolvent(M, I_unit);
    EXPECT_LE(op_norm(Mat(R - (-I_unit) * Mat::Identity(2, 2))), 1e-15);
}

TEST(Resolvent, Diagonal) {
    HermitianOperator M(diag({1.0, 2.0}));
    Mat R = resolvent(M, I_unit);
    EXPECT_LE(std::abs(R(0, 0) - 1.0 / (I_unit - 1.0)), 1e-15);
    EXPECT_LE(std::abs(R(1, 1) - 1.0 / (I_unit - 2.0)), 1e-15);
    EXPECT_LE(std::abs(R(0, 1)), 1e-15);
}

TEST(Resolvent, PauliXAtTwo) {
    HermitianOperator M(pauli(1));
    Mat R = resolvent(M, 2.0);
    Mat expected = (2.0 * Mat::Identity(2, 2) + pauli(1)) / 3.0;
    EXPECT_LE(op_norm(Mat(R - expected)), 1e-14);
    EXPECT_LE(op_norm(Mat((2.0 * Mat::Identity(2, 2) - pauli(1)) * R - Mat::Identity(2, 2))), 1e-10);
}

TEST(Resolvent, SingularAtEigenvalue) {
    HermitianOperator M(pauli(3));
    EXPECT_THROW(resolvent(M, 1.0), SingularResolvent);
}

TEST(Resolvent, ResolventIdentity) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        auto M = random_hermitian(8, rng);
        cplx z1(0.3, 0.7), z2(-0.5, -1.2);
        Mat lhs = resolvent(M, z1) - resolvent(M, z2);
        Mat rhs = (z2 - z1) * resolvent(M, z1) * resolvent(M, z2);
        EXPECT_LE(op_norm(Mat(lhs - rhs)), 1e-9);
    }
}

TEST(SpectralFunction, IdentityAndSquare) {
    std::mt19937_64 rng(3);
    auto M = random_hermitian(6, rng);
    EXPECT_LE(op_norm(Mat(spectral_function(M, [](double x) { return x; }).matrix() - M.matrix())), 1e-12);
    HermitianOperator s3(pauli(3));
    EXPECT_LE(op_norm(Mat(spectral_function(s3, [](double x) { return x * x; }).matrix() - Mat::Identity(2, 2))), 1e-14);
}

TEST(SpectralFunction, CommutesWithOperator) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        auto M = random_hermitian(10, rng, 2.0);
        auto F = spectral_function(M, [](double x) { return std::exp(-x * x) + x * x * x; });
        double scale = F.norm() * M.norm();
        EXPECT_LE(op_norm(Mat(F.matrix() * M.matrix() - M.matrix() * F.matrix())), 1e-10 * scale);
    }
}

TEST(SpectralProjection, Examples) {
    HermitianOperator D(diag({0.0, 1.0, 2.0}));
    EXPECT_LE(op_norm(Mat(spectral_projection(D, RealInterval(0.5, 1.5)).matrix() - diag({0, 1, 0}))), 1e-15);
    EXPECT_LE(op_norm(Mat(spectral_projection(D, RealInterval(-1, 3)).matrix() - Mat::Identity(3, 3))), 1e-14);
    HermitianOperator X(pauli(1));
    Mat P = spectral_projection(X, RealInterval(0.5, 1.5)).matrix();
    Mat expected = 0.5 * Mat::Ones(2, 2);
    EXPECT_LE(op_norm(Mat(P - expected)), 1e-14);
}

TEST(SpectralProjection, ClosedEndpoints) {
    HermitianOperator D(diag({0.0, 1.0, 2.0}));
    EXPECT_EQ(spectral_subspace(D, RealInterval(1.0, 2.0)).cols(), 2);
    EXPECT_EQ(spectral_subspace(D, RealInterval(1.0 + 1e-13, 2.0 - 1e-13)).cols(), 2);
    EXPECT_EQ(spectral_subspace(D, RealInterval(1.0 + 1e-9, 2.0 - 1e-9)).cols(), 0);
}

TEST(RealInterval, RejectsReversed) { EXPECT_ANY_THROW(RealInterval(1.0, 0.0)); }

TEST(UnitaryGroup, Examples) {
    HermitianOperator s3(pauli(3));
    EXPECT_LE(op_norm(Mat(unitary_group(s3, 0.0) - Mat::Identity(2, 2))), 1e-15);
    EXPECT_LE(op_norm(Mat(unitary_group(s3, kPi) + Mat::Identity(2, 2))), 1e-14);
}

TEST(UnitaryGroup, GroupLawAndSpectrum) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> t(-2.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto M = random_hermitian(7, rng, 3.0);
        double s = t(rng), u = t(rng);
        Mat U = unitary_group(M, s);
        EXPECT_LE(op_norm(Mat(U * unitary_group(M, u) - unitary_group(M, s + u))), 1e-10);
        EXPECT_LE(op_norm(Mat(U.adjoint() * U - Mat::Identity(7, 7))), 1e-10);
        auto B = random_hermitian(7, rng);
        HermitianOperator C(hermitize(Mat(U * B.matrix() * U.adjoint())));
        EXPECT_LE((C.eigenvalues() - B.eigenvalues()).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(OperatorNorm, NonNormalMatrix) {
    Mat m = Mat::Zero(2, 2);
    m(0, 1) = 3.0;
    EXPECT_NEAR(op_norm(m), 3.0, 1e-14);
    EXPECT_NEAR(op_norm(Mat(I_unit * pauli(2))), 1.0, 1e-14);
}
