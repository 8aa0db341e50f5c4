#include <gtest/gtest.h>

#include "l1/models.hpp"

using namespace l1;

namespace {

double min_abs_eig_on_grid(const Kernel& D, int n) {
    double best = 1e300;
    for (int i = 0; i < n; ++i) {
        std::vector<double> th(D.G->dual_dim(), 2 * M_PI * i / n);
        if (th.size() == 2) th[1] = 2 * M_PI * ((i * 7) % n) / n;
        Eigen::SelfAdjointEigenSolver<Mat> es(symbol(D, th));
        best = std::min(best, es.eigenvalues().cwiseAbs().minCoeff());
    }
    return best;
}

}  // namespace

TEST(Models, GappedDiracIsSelfAdjointOddWithGap) {
    for (const GroupPtr& G : {Group::free_abelian(1), Group::free_abelian(2), Group::cyclic(6)}) {
        const Kernel D = gapped_dirac(G, 1.5);
        EXPECT_LT(self_adjoint_defect(D), 1e-15);
        EXPECT_EQ(D.parity(), 1);
        EXPECT_GE(min_abs_eig_on_grid(D, 64), 1.5 - 1e-9);
    }
}

TEST(Models, FreeGroupModelGapOnTruncation) {
    const Kernel D = gapped_dirac(Group::free(2), 1.0);
    EXPECT_LT(self_adjoint_defect(D), 1e-15);
    const Mat M = truncated_matrix(D, 4);
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    // Compression of a gapped operator: singular values can only shrink at the edge,
    // but D² = X*X ⊕ XX* with X*X ≥ m² on the interior. Check the Dirac gap via X*X.
    EXPECT_GT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    EXPECT_GE(spectral_gap(D).sigma, 1.0 - 1e-9);
}

TEST(Models, GradedTensorAnticommutes) {
    auto Z = Group::free_abelian(1);
    const Kernel A = gapped_dirac(Z, 1.0), B = gapped_dirac(Z, 2.0);
    const Kernel S = graded_tensor_sum(A, B);
    const Kernel a = tensor_left(A, Kernel::identity(Z, 2));
    Kernel bu = Kernel::identity(Z, 2);
    bu.grading = A.grading;
    const Kernel b = tensor_right(bu, B);
    const Kernel anti = add(convolve(a, b, {0, 0}), convolve(b, a, {0, 0}));
    EXPECT_LT(weighted_norm(anti, 0), 1e-14);
    EXPECT_LT(self_adjoint_defect(S), 1e-15);
    // Gap of the sum: √(1 + 4).
    EXPECT_NEAR(spectral_gap(rehome(S, Group::free_abelian(2))).sigma, std::sqrt(5.0), 1e-9);
}

TEST(Models, SuspensionContracts) {
    const auto r = suspend(gapped_dirac(Group::free_abelian(1), 1.0), 3);
    EXPECT_LT(r.anticommutator, 1e-14);
    EXPECT_LT(r.squareDefect, 1e-12);
}

TEST(Models, HalfSpaceSelfAdjointAndToeplitzIndex) {
    const Kernel Db = gapped_dirac(Group::free_abelian(1), 2.0);
    for (int k : {-1, 0, 1}) {
        HalfBC bc;
        bc.winding = k;
        const HalfKernel H = half_space_model(Db, 2, 40, bc);
        EXPECT_LT(half_self_adjoint_defect(H), 1e-13);
        EXPECT_EQ(toeplitz_index(H, {0.3}).index, -k);
    }
}

TEST(Models, CutoffProfile) {
    const auto c = cutoff(10.0, 4.0, 20);
    EXPECT_DOUBLE_EQ(c.at(10), 1.0);
    EXPECT_DOUBLE_EQ(c.at(14), 0.0);
    EXPECT_GT(c.at(12), 0.0);
    EXPECT_LT(c.at(12), 1.0);
}

TEST(Models, DisplacementOnPureModel) {
    const auto d = displacement_tau(pure_geometry(Group::free(2)), 3);
    EXPECT_NEAR(d.tau, 1.0, 1e-12);
}
