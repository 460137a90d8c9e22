#include <gtest/gtest.h>

#include "mourre/hs_calculus.hpp"

using namespace mourre;

namespace {

double oracle_error(const SmoothFunction& f, const HermitianOperator& L, const QuadratureSpec& q = {}) {
    auto ext = build_extension(f, 3);
    auto r = hs_evaluate(ext, L, q);
    auto o = spectral_function(L, [&](double x) { return f(x); });
    return op_norm(Mat(r.matrix() - o.matrix()));
}

HermitianOperator random_spread(int n, std::mt19937_64& rng) { return random_hermitian(n, rng, 3.0); }

}  // namespace

TEST(Extension, AgreesOnRealAxisAndSupport) {
    auto f = make_bump(-1.0, 2.0);
    auto ext = build_extension(f, 3);
    for (double x = -1.5; x <= 2.5; x += 0.05) EXPECT_NEAR(ext.value(cplx(x, 0.0)).real(), f(x), 1e-12);
    // support condition: zero once |y| >= <x>
    for (double x : {-0.5, 0.5, 1.5}) EXPECT_EQ(std::abs(ext.value(cplx(x, 1.01 * japanese(x)))), 0.0);
    EXPECT_EQ(std::abs(ext.value(cplx(3.0, 0.1))), 0.0);
}

TEST(Extension, DbarVanishesForConstantsInsideCutoffRegion) {
    auto f = make_bump(-3.0, 3.0);
    auto ext = build_extension(f, 3);
    // f is 1 on the plateau [-1.5, 1.5]; there and for |y| <= <x>/2 the extension is analytic
    for (double x : {-1.0, 0.0, 1.2})
        for (double y : {0.01, 0.2, 0.4}) EXPECT_EQ(std::abs(ext.dbar(cplx(x, y))), 0.0);
}

TEST(Extension, DbarBoundForFAna) {
    auto f = make_f_ana(0.0);
    const int N = 3;
    auto ext = build_extension(f, N);
    EXPECT_GT(ext.C_N(), 0.0);
    EXPECT_TRUE(std::isfinite(ext.C_N()));
    double worst = 0.0;
    for (double x = -30; x <= 30; x += 0.7)
        for (double u = 0.05; u < 1.0; u += 0.05) {
            double y = u * japanese(x);
            double bound = std::pow(japanese(std::abs(cplx(x, y))), -2.0 - N - 1) * std::pow(y, N);
            worst = std::max(worst, std::abs(ext.dbar(cplx(x, y))) / bound);
        }
    EXPECT_LE(worst, ext.C_N() * 1.5);
}

TEST(Extension, RejectsUnboundedDerivatives) {
    SmoothFunction f{"exp", [](const Jet& x) { return exp(x * x); }, -kInf, kInf, 0.0, {}, 1.0};
    EXPECT_THROW(build_extension(f, 3), UnboundedDerivative);
}

TEST(HsEvaluate, DiagonalFAnaPeak) {
    RVec d(4);
    d << -1.0, 0.25, 0.25, 2.0;
    HermitianOperator L(Mat(d.cast<cplx>().asDiagonal()));
    auto r = hs_evaluate(build_extension(make_f_ana(0.25), 3), L);
    EXPECT_NEAR(r.matrix()(1, 1).real(), 1.0, 1e-6);
    EXPECT_NEAR(r.matrix()(2, 2).real(), 1.0, 1e-6);
}

TEST(HsEvaluate, ZeroFunction) {
    std::mt19937_64 rng(1);
    auto L = random_hermitian(6, rng);
    auto r = hs_evaluate(build_extension(make_zero_function(), 3), L);
    EXPECT_EQ(op_norm(r.matrix()), 0.0);
}

TEST(HsEvaluate, RandomBumpMatchesOracle) {
    std::mt19937_64 rng(2);
    auto L = random_spread(16, rng);
    EXPECT_LE(oracle_error(make_bump(-1.0, 1.5), L), 1e-6);
}

TEST(HsEvaluate, FAnaMatchesOracle) {
    std::mt19937_64 rng(3);
    auto L = random_spread(32, rng);
    EXPECT_LE(oracle_error(make_f_ana(0.4), L), 1e-6);
}

TEST(HsEvaluate, DirectRouteAgrees) {
    std::mt19937_64 rng(4);
    auto L = random_spread(6, rng);
    auto ext = build_extension(make_bump(-2.0, 1.0), 3);
    auto a = hs_evaluate(ext, L);
    auto b = hs_evaluate_direct(ext, L);
    EXPECT_LE(op_norm(Mat(a.matrix() - b.matrix())), 1e-9);
}

TEST(HsEvaluate, ExtensionOrderStability) {
    std::mt19937_64 rng(5);
    auto L = random_spread(8, rng);
    auto f = make_f_ana(-0.3);
    auto a = hs_evaluate(build_extension(f, 3), L);
    auto b = hs_evaluate(build_extension(f, 5), L);
    EXPECT_LE(op_norm(Mat(a.matrix() - b.matrix())), 2e-6);
}

TEST(HsEvaluate, RefinementLadderConverges) {
    std::mt19937_64 rng(6);
    auto L = random_spread(8, rng);
    for (const auto& f : {make_f_ana(0.0), make_bump(-1.0, 2.0)}) {
        auto rows = hs_refinement_study(build_extension(f, 3), L, {0, 1, 2, 3});
        for (size_t i = 1; i < rows.size(); ++i)
            if (rows[i - 1].oracle_error > 1e-12) {
                EXPECT_LE(rows[i].oracle_error * 4.0, rows[i - 1].oracle_error) << f.name;
            }
    }
}

TEST(HsEvaluate, ErrorEstimateIsSmall) {
    std::mt19937_64 rng(7);
    auto L = random_spread(8, rng);
    auto r = hs_evaluate_with_estimate(build_extension(make_f_ana(0.1), 3), L);
    EXPECT_LE(r.error_estimate, 1e-6);
}

TEST(QuadratureSpec, Validation) {
    QuadratureSpec q;
    q.nodes_x = 4;
    EXPECT_ANY_THROW(q.validate());
    EXPECT_NO_THROW(QuadratureSpec{}.validate());
}

TEST(TaylorRemainder, IdentityConjugatorIsTrivial) {
    std::mt19937_64 rng(8);
    auto B = random_hermitian(5, rng);
    RegularizerFamily fam;
    fam.n = 3;
    auto t = taylor_remainder(B.matrix(), HermitianOperator(identity(5)), fam);
    EXPECT_LE(op_norm(t.main), 1e-14);
    EXPECT_LE(op_norm(t.remainder), 1e-14);
}

TEST(TaylorRemainder, IntegralRepresentationAgrees) {
    std::mt19937_64 rng(9);
    auto B = random_hermitian(4, rng);
    auto A = random_hermitian(4, rng, 3.0);
    RegularizerFamily fam;
    fam.n = 1;
    auto t = taylor_remainder(B.matrix(), A, fam, true);
    EXPECT_GT(op_norm(t.remainder), 1e-3);
    EXPECT_LE(t.integral_mismatch, 1e-6);
}

TEST(TaylorRemainder, DecaysLikeOneOverN) {
    std::mt19937_64 rng(10);
    auto B = random_hermitian(6, rng);
    auto A = random_hermitian(6, rng, 400.0);
    auto c = remainder_constants();
    double ad2 = op_norm(Mat(iterated_commutator(B.matrix(), A, 2)[2]));
    for (int n = 4; n <= 256; n *= 2) {
        RegularizerFamily fam;
        fam.n = n;
        auto t = taylor_remainder(B.matrix(), A, fam);
        EXPECT_LE(op_norm(t.remainder), c.beta / n * ad2 * 1.01);
        EXPECT_LE(op_norm(Mat(A.matrix() * t.remainder)), c.alpha * ad2 * 1.01);
    }
}

TEST(StrongConvergence, FlatRegionAndDecay) {
    std::mt19937_64 rng(11);
    auto B = random_hermitian(8, rng);
    auto small = random_hermitian(8, rng, 0.9);
    std::vector<Vec> probes{random_unit_vector(8, rng), random_unit_vector(8, rng)};
    auto rows = strong_convergence_check(B.matrix(), small, 1, probes, 1);
    EXPECT_LE(rows[0].difference, 1e-13);
    auto A = random_hermitian(8, rng, 5.0);
    auto r1 = strong_convergence_check(B.matrix(), A, 1, probes, 64);
    EXPECT_GT(r1.front().difference, r1.back().difference);
    EXPECT_LE(r1.back().difference, 1e-12);
    auto r3 = strong_convergence_check(B.matrix(), A, 3, probes, 128);
    EXPECT_LE(r3.back().difference, 1e-8);
}
