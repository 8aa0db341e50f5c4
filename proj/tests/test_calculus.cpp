#include <gtest/gtest.h>

#include <cmath>

#include "l1/calculus.hpp"
#include "l1/models.hpp"

using namespace l1;

namespace {

Kernel scalar_z(double c) {
    auto Z = Group::free_abelian(1);
    Kernel D(Z, 1);
    D.add_to(Z->z(0), Mat::Constant(1, 1, c));
    D.add_to(Z->z(1), Mat::Constant(1, 1, 1.0));
    D.add_to(Z->z(-1), Mat::Constant(1, 1, 1.0));
    return D;
}

// (1/2π)∫ f(c + 2cos θ) e^{-ikθ} dθ by the periodic trapezoid rule.
cd fourier_coeff(const std::function<cd(double)>& f, double c, int k, int n = 4096) {
    cd s = 0;
    for (int j = 0; j < n; ++j) {
        const double th = 2 * M_PI * j / n;
        s += f(c + 2 * std::cos(th)) * std::exp(cd(0, -k * th));
    }
    return s / double(n);
}

}  // namespace

TEST(Calculus, HeatMatchesDirectFourierCoefficients) {
    const Kernel D = scalar_z(0.5);
    const Kernel h = heat(D, 0.7, 1e-13);
    for (int k = -6; k <= 6; ++k) {
        const cd want = fourier_coeff([](double x) { return cd(std::exp(-0.7 * x * x)); }, 0.5, k);
        EXPECT_LT(std::abs(h.component(D.G->z(k))(0, 0) - want), 1e-11) << k;
    }
}

TEST(Calculus, SchemesAgree) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.0);
    for (const auto& f : {SpectralFunction::gt(2.0), SpectralFunction::heat(0.5), SpectralFunction::gauss_sign(1.0)}) {
        const Kernel a = apply_function(D, f, Scheme::Fiberwise, 1e-10);
        const Kernel b = apply_function(D, f, Scheme::Chebyshev, 1e-10);
        const Kernel c = apply_function(D, f, Scheme::FourierQuadrature, 1e-10);
        EXPECT_LT(l1_distance(a, b), 1e-8) << f.name();
        EXPECT_LT(l1_distance(a, c), 1e-8) << f.name();
    }
}

TEST(Calculus, ChebyshevOnFreeGroupMatchesTruncation) {
    // A quadratic is reproduced exactly; compare with the dense compression
    // on rows far enough from the edge of the ball.
    const Kernel D = gapped_dirac(Group::free(2), 1.0);
    const auto f = SpectralFunction::polynomial({1.0, 0.5, -0.25});
    const Kernel k = apply_function(D, f, Scheme::Chebyshev, 1e-12);
    const Mat M = truncated_matrix(D, 4);
    const Mat E = Mat::Identity(M.rows(), M.cols()) + 0.5 * M - 0.25 * M * M;
    const Mat K = truncated_matrix(k, 4);
    const long inner = static_cast<long>(D.G->ball(2).size()) * D.d;
    EXPECT_LT((E.topRows(inner) - K.topRows(inner)).norm(), 1e-10);
}

TEST(Calculus, SignSquaresToOneAndGapEqualsMass) {
    for (double m : {1.0, 1.5}) {
        const Kernel D = gapped_dirac(Group::free_abelian(1), m);
        EXPECT_NEAR(spectral_gap(D).sigma, m, 1e-9);
        const Kernel s = sign_kernel(D);
        EXPECT_LT(weighted_norm(add(convolve(s, s, {0, 0}), Kernel::identity(D.G, D.d), 1.0, -1.0), 0), 1e-10);
    }
}

TEST(Calculus, CayleyIsUnitary) {
    const Kernel D = gapped_dirac(Group::free_abelian(2), 1.5);
    const Kernel v = cayley(D, 2.0, 1e-13);
    const Kernel vv = convolve(v, adjoint(v), {0, 0});
    EXPECT_LT(weighted_norm(add(vv, Kernel::identity(D.G, D.d), 1.0, -1.0), 0), 1e-9);
}

TEST(Calculus, GapThreshold) {
    const auto r = gap_threshold(1.5, 0.5, 0.0, 1.0);
    EXPECT_TRUE(r.pass);
    EXPECT_FALSE(gap_threshold(0.5, 0.5, 0.0, 1.0).pass);
}

TEST(Calculus, FactoryArgumentChecks) {
    EXPECT_THROW(SpectralFunction::from_json({{"family", "G_t"}, {"t", -1.0}}), ArgumentError);
    EXPECT_THROW(SpectralFunction::from_json({{"family", "cayley"}, {"s", 0.0}}), ArgumentError);
    EXPECT_THROW(SpectralFunction::from_json({{"family", "nope"}}), ArgumentError);
    const auto f = SpectralFunction::from_json({{"family", "F_at"}, {"a", 1.5}, {"t", 1.0}});
    EXPECT_TRUE(f.is_normalizer());
    // The window is only C², so the approach to ±1 is algebraic.
    EXPECT_NEAR(f(40.0).real(), 1.0, 1e-5);
    EXPECT_NEAR(f(-40.0).real(), -1.0, 1e-5);
    EXPECT_NEAR(f(0.0).real(), 0.0, 1e-15);
}

TEST(Calculus, RandomNormalizerIsOddWithUnitLimits) {
    std::mt19937_64 rng(9);
    const auto F = SpectralFunction::random_normalizer(3.0, rng);
    EXPECT_TRUE(F.is_normalizer());
    for (double x : {0.3, 1.7, 4.0}) EXPECT_NEAR((F(x) + F(-x)).real(), 0.0, 1e-12);
    EXPECT_NEAR(F(200.0).real(), 1.0, 1e-3);
    EXPECT_NEAR(F.fhat(0.0).real(), 2.0, 1e-12);
    EXPECT_EQ(std::abs(F.fhat(3.5)), 0.0);
}

// Lattice kernels decay like e^{-cℓ log ℓ}, the Gaussian tail integral like
// e^{-cℓ²}: the bound holds at moderate lengths and can fail deep in the tail.
TEST(Calculus, TailBoundOnModerateLengths) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.0);
    const auto f = SpectralFunction::heat(0.5);
    const Kernel fD = apply_function(D, f, Scheme::Fiberwise, 0.0);
    for (const auto& [x, m] : fD.comps) {
        const int l = D.G->length(x);
        if (l >= 1 && l <= 12) EXPECT_LE(mat_op_norm(m), f.fourier_tail(l / 2.0)) << l;
    }
    const auto r = tail_bound_check(D, f, 2.0, 1.0, 0.0, 0.0);
    EXPECT_GT(r.checked, 0);
    EXPECT_GE(r.worstLength, 13);
}
