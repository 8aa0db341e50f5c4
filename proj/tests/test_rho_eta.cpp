#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "l1/rho_eta.hpp"

using namespace l1;

namespace {

Kernel scalar_cyclic(int q, double c) {
    auto G = Group::cyclic(q);
    Kernel D(G, 1);
    D.add_to(G->z(0), Mat::Constant(1, 1, c));
    D.add_to(G->z(1), Mat::Constant(1, 1, 1.0));
    D.add_to(G->z(q - 1), Mat::Constant(1, 1, 1.0));
    return D;
}

// k-th Fourier coefficient of sgn(c + 2cos θ_j) on the dual of ℤ/q.
double sign_coefficient(int q, double c, int k) {
    double s = 0;
    for (int j = 0; j < q; ++j) {
        const double th = 2 * M_PI * j / q;
        s += (c + 2 * std::cos(th) > 0 ? 1.0 : -1.0) * std::cos(k * th);
    }
    return s / q;
}

}  // namespace

TEST(RhoEta, EtaOnCyclicGroupMatchesSignCoefficients) {
    const Kernel D = scalar_cyclic(5, 1.0);
    for (int k : {1, 2}) {
        const auto phi = make_cocycle("delta:" + std::to_string(k), D.G);
        const EtaResult e = eta(phi, D, 0.0);
        EXPECT_NEAR(e.value.real(), -sign_coefficient(5, 1.0, k), 1e-6) << k;
        EXPECT_NEAR(e.value.imag(), 0.0, 1e-6);
        EXPECT_TRUE(e.converged);
        EXPECT_GT(e.fitEps, 0.0);
        EXPECT_LE(e.refineDelta, 1e-6);
    }
}

TEST(RhoEta, CayleyPathHasOppositeSign) {
    const Kernel D = scalar_cyclic(5, 1.0);
    const auto r = transgression_check(make_cocycle("delta:1", D.G), D, 0.0);
    EXPECT_NEAR(r.v.value.real(), sign_coefficient(5, 1.0, 1), 1e-6);
    EXPECT_LE(r.oppositeResidual, 1e-6);
}

TEST(RhoEta, ZeroCocycleGivesZero) {
    const Kernel D = scalar_cyclic(5, 1.0);
    const auto phi = cocycle_from_json({{"degree", 0}, {"expr", {{"const", 0.0}}}}, D.G);
    EXPECT_EQ(std::abs(eta(phi, D, 0.0).value), 0.0);
}

TEST(RhoEta, LocalizedCocycleIsRefused) {
    const Kernel D = scalar_cyclic(5, 1.0);
    EXPECT_THROW(eta(make_cocycle("trace", D.G), D, 0.0), RefusedError);
}

TEST(RhoEta, InvariantUnderRescaling) {
    const Kernel D = scalar_cyclic(5, 1.0);
    const Kernel D2 = cd(2.0) * D;
    const auto phi = make_cocycle("delta:1", D.G);
    QuadOptions q;
    QuadOptions q2;
    q2.tMax = q.tMax / 2;
    EXPECT_NEAR(std::abs(eta(phi, D, 0.0, q).value - eta(phi, D2, 0.0, q2).value), 0.0, 1e-6);
}

TEST(RhoEta, EvenEtaOfCoboundaryVanishes) {
    const Kernel D = gapped_dirac(Group::cyclic(5), 1.5);
    const auto psi = delocalize(random_cyclic_cochain(D.G, 2, 11)).second;
    QuadOptions q;
    q.nodes = 512;
    q.tol = 1.0;
    const EtaResult e = eta_even(coboundary(psi), D, 0.0, q);
    EXPECT_LE(std::abs(e.value), 1e-6);
}

TEST(RhoEta, PathsAreTrivialAtZeroAndLocalize) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
    const auto grid = default_s_grid(1.0 / 1.5, 6.0, 10);
    EXPECT_EQ(grid.front(), 0.0);
    for (PathKind k : {PathKind::U, PathKind::P, PathKind::V}) {
        const auto p = rho_path(D, k, grid, 0.5);
        EXPECT_LT(l1_distance(p.nodes.front(), p.trivial), 1e-12) << path_kind_name(k);
        for (double r : p.residual) EXPECT_LE(r, 1e-10) << path_kind_name(k);
        if (k == PathKind::U) {
            EXPECT_TRUE(p.monotone);
            EXPECT_LT(p.propagation.back(), *std::max_element(p.propagation.begin(), p.propagation.end()));
        }
    }
}

TEST(RhoEta, PathRefusedWithoutGap) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 0.5);
    EXPECT_THROW(rho_path(D, PathKind::U, {0.0, 1.0}, 0.5), RefusedError);
}

TEST(RhoEta, ProductIdentities) {
    for (const auto& r : product_identity_random(100, 6, 3, 21)) EXPECT_LE(r.worst(), 1e-12);
}

TEST(RhoEta, ProjectionIdentityAtLargeScale) {
    // s → 0 is dominated by D̸; s → ∞ by E.
    Mat Dslash = Mat::Zero(2, 2);
    Dslash(0, 1) = Dslash(1, 0) = 1.0;
    Eigen::VectorXd E(2);
    E << 1, -1;
    Mat Pm, Pp;
    EXPECT_LE(projection_identity(Dslash, E, 1e3, &Pm, &Pp), 1e-12);
    EXPECT_NEAR(Pp(0, 0).real(), 1.0, 1e-5);
}
