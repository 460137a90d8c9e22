#include <gtest/gtest.h>

#include "mourre/models/lattice.hpp"
#include "mourre/mourre.hpp"
#include "mourre/regularity.hpp"

using namespace mourre;

namespace {

struct LatticeFixture : ::testing::Test {
    static void SetUpTestSuite() {
        pair = new LatticeDilationPair(build_lattice_pair(64, 1.0));
        best = new BestC0(best_C0(pair->H, pair->A, RealInterval(1.0, 3.0), 2));
        lambda = nearest_eigenvalue(pair->H, 2.0, RealInterval(1.0, 3.0));
        StandardMourreInput in{pair->H, pair->A, RealInterval(1.0, 3.0), best->C0_tilde, best->K_tilde};
        cert = new MourreCertificate(localize(in, default_regularizer(pair->H, lambda, in.I), FKind::loc));
    }
    static void TearDownTestSuite() {
        delete cert;
        delete best;
        delete pair;
    }
    static inline LatticeDilationPair* pair = nullptr;
    static inline BestC0* best = nullptr;
    static inline MourreCertificate* cert = nullptr;
    static inline double lambda = 0.0;
};

const StageRecord* find(const MourreCertificate& c, const std::string& stage, const std::string& name) {
    for (const auto& s : c.stages)
        if (s.stage == stage && s.constant_name == name) return &s;
    return nullptr;
}

}  // namespace

TEST(VerifyStandard, AbsorbingK) {
    std::mt19937_64 rng(1);
    auto H = random_hermitian(6, rng), A = random_hermitian(6, rng);
    double c = 0.7;
    double big = op_norm(i_ad(H.matrix(), A.matrix()));
    StandardMourreInput in{H, A, RealInterval(-0.5, 0.5), c, HermitianOperator(Mat((big + c) * Mat::Identity(6, 6)))};
    EXPECT_TRUE(verify_standard(in).valid());
}

TEST(VerifyStandard, CommutingPairZeroMargin) {
    RVec d(3);
    d << 0.0, 1.0, 2.0;
    HermitianOperator H(Mat(d.cast<cplx>().asDiagonal()));
    StandardMourreInput in{H, H, RealInterval(0.5, 2.5), 0.0, HermitianOperator(Mat::Zero(3, 3))};
    EXPECT_NEAR(verify_standard(in).margin, 0.0, 1e-15);
}

TEST(BestC0, VacuousAndNoPositivity) {
    RVec d(3);
    d << 0.0, 1.0, 2.0;
    HermitianOperator H(Mat(d.cast<cplx>().asDiagonal()));
    auto v = best_C0(H, H, RealInterval(5.0, 6.0), 0);
    EXPECT_TRUE(v.vacuous);
    EXPECT_TRUE(std::isinf(v.C0_tilde));
    EXPECT_THROW(best_C0(H, H, RealInterval(0.5, 2.5), 0), NoPositivity);
    EXPECT_THROW(best_C0(H, H, RealInterval(1.0, 1.0), 0), DimensionMismatch);
}

TEST(BestC0, VirialPair) {
    // i ad_A(H) is close to 2H in the bulk, so the window [1, 3] gives a positive constant
    auto pair = build_lattice_pair(64, 1.0);
    auto b = best_C0(pair.H, pair.A, RealInterval(1.0, 3.0), 2);
    EXPECT_GT(b.C0_tilde, 0.0);
    EXPECT_GE(b.margin, -kFormTol * std::max(1.0, b.K_norm));
    EXPECT_LE(b.rank_K, 2);
    StandardMourreInput in{pair.H, pair.A, RealInterval(1.0, 3.0), b.C0_tilde, b.K_tilde};
    EXPECT_TRUE(verify_standard(in).valid());
    in.C0_tilde *= 1.05;
    EXPECT_FALSE(verify_standard(in).valid());
}

TEST_F(LatticeFixture, StandardConstant) {
    EXPECT_NEAR(best->C0_tilde, 1.5461, 2e-3);
    // 2 sits midway between two eigenvalues; the lower one wins the tie
    EXPECT_NEAR(lambda, 1.95167, 1e-4);
}

TEST_F(LatticeFixture, CertificateStagesHold) {
    const auto& c = *cert;
    EXPECT_GE(c.margin, -1e-10);
    EXPECT_NEAR(c.C0, c.C0_tilde / 4.0, 1e-15);
    EXPECT_NEAR(c.C1, 3.0 * c.C0_tilde + 1.0 / c.delta + c.ad_h_norm, 1e-9 * c.C1);
    EXPECT_NEAR(c.delta * c.ad_h_norm * c.ad_h_norm, c.C0_tilde / 4.0, 1e-12);
    EXPECT_EQ(c.h.n, 4);
    for (const auto* s : {find(c, "peterpaul1", "three_quarter_C0_tilde"), find(c, "mourre2", "f_iad_H_minus_h_f_norm"),
                          find(c, "mourre3", "half_C0_tilde"), find(c, "mourre4", "C0"), find(c, "taylor", "one_minus_hprime"),
                          find(c, "projection", "Lambda")}) {
        ASSERT_NE(s, nullptr);
        ASSERT_TRUE(s->margin.has_value());
        EXPECT_GE(*s->margin, -1e-10) << s->stage;
    }
    EXPECT_GT(find(c, "h_monotone", "min_hprime_on_supp")->value, 0.0);
}

TEST_F(LatticeFixture, FLocPeaksAtLambda) {
    EXPECT_NEAR(cert->f_loc()(cert->lambda), 1.0, 1e-15);
    auto s = cert->f_loc();
    EXPECT_GE(s.lo, 1.0 - 1e-12);
    EXPECT_LE(s.hi, 3.0 + 1e-12);
}

TEST_F(LatticeFixture, NegativeControl) {
    MourreCertificate bad = *cert;
    bad.C0 *= 10.0;
    EXPECT_LT(verify_smooth(bad, pair->H, pair->A).margin, 0.0);
}

TEST_F(LatticeFixture, MonotoneInK) {
    MourreCertificate more = *cert;
    std::mt19937_64 rng(3);
    Mat G = random_hermitian(64, rng).matrix();
    more.K = HermitianOperator(hermitize(Mat(cert->K.matrix() + G * G)), 1e-10);
    EXPECT_GE(verify_smooth(more, pair->H, pair->A).margin, verify_smooth(*cert, pair->H, pair->A).margin - 1e-12);
}

TEST_F(LatticeFixture, ProjectionThreshold) {
    const double L = cert->proj_threshold_Lambda;
    Mat P = spectral_apply(pair->A, [L](double x) { return cplx(std::abs(x) > L + 1e-12 ? 1.0 : 0.0); });
    EXPECT_LE(2.0 * std::pow(op_norm(Mat(P * cert->K.matrix())), 2), cert->C0 * cert->C0 / 81.0 * (1 + 1e-12));
}

TEST_F(LatticeFixture, AnalyticLocalizer) {
    StandardMourreInput in{pair->H, pair->A, RealInterval(1.0, 3.0), best->C0_tilde, best->K_tilde};
    auto c = localize(in, default_regularizer(pair->H, lambda, in.I), FKind::ana, {20, false});
    EXPECT_NEAR(c.f_ratio, 2.309, 5e-3);
    EXPECT_NEAR(c.C1, c.C1_loc * c.f_ratio, 1e-9 * c.C1);
    EXPECT_NEAR(c.f()(lambda), 1.0, 1e-15);
}

TEST(Localize, RejectsInvalidStandardInput) {
    auto pair = build_lattice_pair(16, 1.0);
    StandardMourreInput in{pair.H, pair.A, RealInterval(1.0, 3.0), 100.0, HermitianOperator(Mat::Zero(16, 16))};
    RegularizerFamily fam;
    fam.lambda = 2.0;
    EXPECT_THROW(localize(in, fam, FKind::loc), CertificateInvalid);
}

TEST(TaylorBound, Holds) {
    auto pair = build_lattice_pair(32, 1.0);
    RegularizerFamily fam;
    fam.lambda = 2.0;
    fam.nu = 0.25;
    fam.n = 4;
    auto tb = taylor_bound_check(fam, pair.H, make_f_loc(2.0, 1.0, 3.0));
    EXPECT_LE(tb.measured, tb.bound * 1.01);
}
