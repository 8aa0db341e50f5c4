#include <gtest/gtest.h>

#include <random>

#include "l1/index.hpp"

using namespace l1;

namespace {

Mat random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = cd(N(rng), N(rng));
    return (A + A.adjoint()) / 2.0;
}

}  // namespace

TEST(Index, IdempotentMatrixIdentity) {
    std::mt19937_64 rng(1);
    Eigen::VectorXd eps(6);
    eps << 1, 1, 1, -1, -1, -1;
    for (int s = 0; s < 20; ++s) {
        // F odd for the grading.
        Mat F = random_hermitian(6, rng) * 0.3;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                if (eps(i) == eps(j)) F(i, j) = 0;
        const Mat p = idempotent_matrix(F, eps);
        EXPECT_LT((p * p - p).norm(), 1e-12);
        Mat e11 = Mat::Zero(6, 6);
        for (int i = 0; i < 6; ++i) e11(i, i) = (1 - eps(i)) / 2;
        EXPECT_LT((idempotent_offset_matrix(F, eps) - (p - e11)).norm(), 1e-12);
    }
}

TEST(Index, IdempotentEndpoints) {
    Eigen::VectorXd eps(2);
    eps << 1, -1;
    const Mat zero = Mat::Zero(2, 2);
    Mat p = idempotent_matrix(zero, eps);
    EXPECT_NEAR(std::abs(p(0, 0) - 1.0), 0, 1e-15);
    EXPECT_NEAR(std::abs(p(1, 1)), 0, 1e-15);
    Mat sw(2, 2);
    sw << 0, 1, 1, 0;
    p = idempotent_matrix(sw, eps);
    EXPECT_NEAR(std::abs(p(1, 1) - 1.0), 0, 1e-15);
    EXPECT_NEAR(std::abs(p(0, 0)), 0, 1e-15);
}

TEST(Index, KernelIdempotentOnZ) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.0);
    const auto p = index_idempotent(D, SpectralFunction::fat(1.5, 1.0), 0.3, Scheme::Fiberwise);
    EXPECT_LT(p.defect10, 1e-12);
    const auto ti = pairing_trace_index(p);
    EXPECT_TRUE(ti.integral);
    EXPECT_EQ(ti.index, 0);
}

TEST(Index, VanishingCertificateAndRefusal) {
    const auto ok = vanishing_certificate(gapped_dirac(Group::free_abelian(1), 1.5), 0.5, {1, 2, 3, 4, 5, 6});
    EXPECT_TRUE(ok.gapOk);
    EXPECT_TRUE(ok.certified);
    EXPECT_LE(ok.distance.back(), 1e-6);
    EXPECT_LE(ok.signSquareDefect, 1e-10);
    const auto no = vanishing_certificate(gapped_dirac(Group::free_abelian(1), 0.5), 0.5, {1, 2});
    EXPECT_FALSE(no.gapOk);
    EXPECT_FALSE(no.certified);
    EXPECT_FALSE(no.reason.empty());
}

TEST(Index, OddUnitaryCertified) {
    const auto u = odd_index_unitary(gapped_dirac(Group::free_abelian(1), 1.5), 2.0, 0.3);
    EXPECT_TRUE(u.invertible);
    EXPECT_LT(u.certLeft, 1e-8);
    EXPECT_LT(u.certRight, 1e-8);
}

TEST(Index, NewtonSchulzProjects) {
    std::mt19937_64 rng(3);
    Mat P = Mat::Zero(4, 4);
    P(0, 0) = P(1, 1) = 1;
    const Mat q = P + 0.01 * random_hermitian(4, rng);
    const Mat r = newton_schulz(q);
    EXPECT_LT((r * r - r).norm(), 1e-13);
    EXPECT_NEAR(r.trace().real(), 2.0, 1e-12);
}

TEST(Index, BoundaryTraceIsMinusWinding) {
    const Kernel Db = gapped_dirac(Group::free_abelian(1), 2.0);
    HalfOptions o;
    o.norms = false;
    for (int k : {-1, 1}) {
        HalfBC bc;
        bc.winding = k;
        bc.interiorStrength = 0.3;
        const HalfKernel H = half_model_for(Db, 2, bc, 1.5, 1.0, 0, o);
        const auto r = riesz_idempotent(boundary_quasi_idempotent(H, 1.5, 1.0, 0.3, o));
        EXPECT_NEAR(pairing_trace_index(r).value, -k, 1e-6);
    }
}

TEST(Index, DecayFit) {
    std::vector<double> t{1, 2, 3}, v;
    for (double x : t) v.push_back(2.0 * std::exp(-0.5 * x * x));
    const auto f = fit_log_vs_t2(t, v);
    EXPECT_NEAR(f.slope, -0.5, 1e-12);
    EXPECT_NEAR(f.r2, 1.0, 1e-12);
}
