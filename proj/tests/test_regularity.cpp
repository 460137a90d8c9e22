#include <gtest/gtest.h>

#include "mourre/models/lattice.hpp"
#include "mourre/regularity.hpp"

using namespace mourre;

namespace {

Mat diag(std::initializer_list<double> v) {
    RVec d(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) d(i++) = x;
    return d.cast<cplx>().asDiagonal();
}

struct LatticeCert : ::testing::Test {
    static void SetUpTestSuite() {
        pair = new LatticeDilationPair(build_lattice_pair(64, 1.0));
        RealInterval I(1.0, 3.0);
        auto b = best_C0(pair->H, pair->A, I, 2);
        lambda = nearest_eigenvalue(pair->H, 2.0, I);
        StandardMourreInput in{pair->H, pair->A, I, b.C0_tilde, b.K_tilde};
        cert = new MourreCertificate(localize(in, default_regularizer(pair->H, lambda, I), FKind::loc));
        psi = new Vec(eigenpair(pair->H, lambda).second);
    }
    static void TearDownTestSuite() {
        delete psi;
        delete cert;
        delete pair;
    }
    static inline LatticeDilationPair* pair = nullptr;
    static inline MourreCertificate* cert = nullptr;
    static inline Vec* psi = nullptr;
    static inline double lambda = 0.0;
};

}  // namespace

TEST(Eigenpair, Examples) {
    HermitianOperator D(diag({0.0, 1.0, 2.0}));
    auto [l, psi] = eigenpair(D, 1.0);
    EXPECT_EQ(l, 1.0);
    EXPECT_LE((psi - Vec::Unit(3, 1)).norm(), 1e-15);

    HermitianOperator X(pauli(1));
    auto [l2, p2] = eigenpair(X, 1.0);
    EXPECT_NEAR(l2, 1.0, 1e-15);
    EXPECT_NEAR(p2(0).real(), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(p2(0).imag(), 0.0);
    EXPECT_NEAR(p2(1).real(), 1.0 / std::sqrt(2.0), 1e-15);

    HermitianOperator Id(Mat::Identity(3, 3));
    auto [l3, p3] = eigenpair(Id, 1.0);
    EXPECT_EQ(l3, 1.0);
    EXPECT_LE((p3 - Vec::Unit(3, 0)).norm(), 1e-15);

    EXPECT_THROW(eigenpair(D, 0.5), NoEigenvalueNear);
}

TEST(Eigenpair, ResidualOnRandom) {
    std::mt19937_64 rng(1);
    auto H = random_hermitian(20, rng, 5.0);
    auto [l, psi] = eigenpair(H, H.eigenvalues()(7));
    EXPECT_LE((H.matrix() * psi - l * psi).norm(), 1e-10 * H.norm());
    EXPECT_NEAR(psi.norm(), 1.0, 1e-14);
}

TEST(NormSequence, Examples) {
    HermitianOperator A(diag({-1.5, 0.5}));
    auto n = norm_sequence(A, Vec::Unit(2, 0), 6);
    for (int k = 0; k <= 6; ++k) EXPECT_NEAR(n[k], std::pow(1.5, k), 1e-13);
    Vec s = Vec::Ones(2) / std::sqrt(2.0);
    auto m = norm_sequence(HermitianOperator(pauli(3)), s, 8);
    for (double x : m) EXPECT_NEAR(x, 1.0, 1e-15);
}

TEST(NormSequence, TwoEvaluationOrders) {
    std::mt19937_64 rng(2);
    auto A = random_hermitian(8, rng, 2.0);
    Vec psi = random_unit_vector(8, rng);
    auto n = norm_sequence(A, psi, 6);
    Mat P = Mat::Identity(8, 8);
    for (int k = 0; k <= 6; ++k) {
        EXPECT_NEAR(n[k], std::sqrt(psi.dot(P * psi).real()), 1e-9 * std::max(1.0, n[k]));
        P = P * A.matrix() * A.matrix();
    }
}

TEST(QFit, BoundedOperatorBoundAndMonotone) {
    std::mt19937_64 rng(3);
    auto A = random_hermitian(10, rng, 3.0);
    Vec psi = random_unit_vector(10, rng);
    auto n = norm_sequence(A, psi, 12);
    auto q = q_fit_partial(n);
    double floor = kInf;
    for (int k = 1; k <= 12; ++k) floor = std::min(floor, std::pow(factorial(k), 1.0 / k) / A.norm());
    EXPECT_GE(q.back(), floor * (1 - 1e-12));
    for (size_t k = 2; k < q.size(); ++k) EXPECT_LE(q[k], q[k - 1]);
}

TEST(AnalyticRadius, ExactResummation) {
    HermitianOperator A(pauli(3));
    auto n = norm_sequence(A, Vec::Unit(2, 0), 8);
    auto a = analytic_radius(A, Vec::Unit(2, 0), n);
    EXPECT_TRUE(a.valid());
    EXPECT_NEAR(a.q_fit, 1.0, 1e-15);
    EXPECT_THROW(analytic_radius(A, Vec::Unit(2, 0), norm_sequence(A, Vec::Unit(2, 0), 4)), InsufficientCommutatorOrder);
}

TEST(Condad, TrivialAndPauli) {
    auto t = condad_check(HermitianOperator(pauli(1)), HermitianOperator(Mat::Identity(2, 2)), 5);
    EXPECT_TRUE(std::isinf(t.v_fit));
    auto p = condad_check(HermitianOperator(pauli(1)), HermitianOperator(pauli(3)), 6);
    // ad^k sigma_1 has norm 2^k and (i - sigma_1)^{-1} is unitary up to 1/sqrt 2
    double expected = kInf;
    for (int k = 1; k <= 6; ++k) {
        EXPECT_NEAR(p.norms[k], std::pow(2.0, k) / std::sqrt(2.0), 1e-12);
        expected = std::min(expected, std::pow(factorial(k) / p.norms[k], 1.0 / k));
    }
    EXPECT_NEAR(p.v_fit, expected, 1e-12);
}

TEST(Condad2, CommutingPairIsSentinel) {
    HermitianOperator H(diag({0.0, 1.0, 2.0}));
    RegularizerFamily fam;
    fam.lambda = 1.0;
    auto c = condad2_from_condad(H, H, fam, 4);
    EXPECT_TRUE(std::isinf(c.v));
    EXPECT_TRUE(std::isinf(c.w));
}

TEST_F(LatticeCert, ExplicitBoundHolds) {
    BoundEvaluator ev(pair->H, pair->A, *cert, *psi);
    for (int k = 1; k <= 6; ++k) {
        auto b = ev.evaluate(k);
        EXPECT_TRUE(b.holds()) << "k=" << k << " margin " << b.margin;
        if (k <= 2) {
            EXPECT_EQ(b.terms[3], 0.0);
        }
    }
}

TEST_F(LatticeCert, ExplicitBoundErrors) {
    EXPECT_THROW(explicit_bound_check(pair->H, pair->A, nullptr, *psi, lambda, 1), CertificateMissing);
    EXPECT_THROW(explicit_bound_check(pair->H, pair->A, cert, *psi, lambda, 0), InsufficientCommutatorOrder);
    MourreCertificate ana = *cert;
    ana.f_kind = FKind::ana;
    EXPECT_THROW(explicit_bound_check(pair->H, pair->A, &ana, *psi, lambda, 1), CertificateInvalid);
}

TEST_F(LatticeCert, InflatedNormsDetected) {
    BoundEvaluator ev(pair->H, pair->A, *cert, *psi);
    for (int k = 1; k <= 6; ++k) {
        auto b = ev.evaluate(k);
        EXPECT_TRUE(b.holds());
        EXPECT_FALSE(inflated(b, 1e3).holds()) << "k=" << k;
    }
    // a non-eigenvector still satisfies it here: the bound is loose by orders of magnitude
    Vec mixed = *psi + pair->A.eigenvectors().col(pair->A.dim() - 1);
    mixed /= mixed.norm();
    BoundEvaluator em(pair->H, pair->A, *cert, mixed);
    EXPECT_GT(em.evaluate(1).rhs, 100.0 * em.evaluate(1).lhs);
}

TEST_F(LatticeCert, PhaseAndUnitaryInvariance) {
    RegularityOptions o;
    o.k_max = 8;
    o.bound_k_max = 4;
    o.growth = false;
    auto base = regularity_report(pair->H, pair->A, lambda, *psi, cert, o);
    Vec rot = std::exp(I_unit * 0.7) * *psi;
    auto r2 = regularity_report(pair->H, pair->A, lambda, rot, cert, o);
    for (int k = 0; k <= 8; ++k) EXPECT_NEAR(r2.norms[k], base.norms[k], 1e-9 * std::max(1.0, base.norms[k]));
    for (size_t k = 0; k < base.bounds.size(); ++k)
        EXPECT_NEAR(r2.bound_margins[k], base.bound_margins[k], 1e-9 * std::max(1.0, base.bounds[k].rhs));
    EXPECT_NEAR(r2.q_fit, base.q_fit, 1e-12);

    std::mt19937_64 rng(5);
    Mat U = random_unitary(64, rng);
    HermitianOperator H2(hermitize(Mat(U * pair->H.matrix() * U.adjoint())), 1e-10);
    HermitianOperator A2(hermitize(Mat(U * pair->A.matrix() * U.adjoint())), 1e-10);
    MourreCertificate c2 = *cert;
    c2.K = HermitianOperator(hermitize(Mat(U * cert->K.matrix() * U.adjoint())), 1e-10);
    auto r3 = regularity_report(H2, A2, lambda, Vec(U * *psi), &c2, o);
    for (int k = 0; k <= 8; ++k) EXPECT_NEAR(r3.norms[k], base.norms[k], 1e-9 * std::max(1.0, base.norms[k]));
    for (size_t k = 0; k < base.bounds.size(); ++k)
        EXPECT_NEAR(r3.bounds[k].rhs, base.bounds[k].rhs, 1e-9 * base.bounds[k].rhs);
    EXPECT_NEAR(r3.q_fit, base.q_fit, 1e-9);
}

TEST_F(LatticeCert, AnalyticityAndGrowthFits) {
    RegularityOptions o;
    o.k_max = 12;
    o.bound_k_max = 1;
    o.condad_k_max = 5;
    auto r = regularity_report(pair->H, pair->A, lambda, *psi, cert, o);
    ASSERT_TRUE(r.analytic.has_value());
    EXPECT_TRUE(r.analytic->valid());
    EXPECT_NEAR(r.norms[0], 1.0, 1e-14);
    EXPECT_LE(r.radius_estimate, r.q_fit);
    ASSERT_TRUE(r.condad_v && r.condad2_w);
    EXPECT_LE(2.0 * *r.condad2_w, *r.condad_v * (1 + 1e-12));
    EXPECT_TRUE(r.condad2->bound_holds);
    EXPECT_LE(r.condad2->route_residual, 1e-8);
    for (int k = 1; k <= 5; ++k) EXPECT_LE(r.condad2->J_norms[k], 1.01 * r.condad2->composition_bound[k]);
}
