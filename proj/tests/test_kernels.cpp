#include <gtest/gtest.h>

#include <random>

#include "l1/kernels.hpp"

using namespace l1;

namespace {

Kernel random_kernel(GroupPtr G, int d, int radius, std::mt19937_64& rng) {
    std::normal_distribution<double> N;
    Kernel k(G, d);
    for (const auto& x : G->ball(radius)) {
        Mat m(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) m(i, j) = cd(N(rng), N(rng));
        k.add_to(x, m);
    }
    return k;
}

}  // namespace

TEST(Kernels, ConvolutionMatchesMatrixProduct) {
    std::mt19937_64 rng(1);
    for (const GroupPtr& G : {Group::free_abelian(1), Group::free(2)}) {
        const Kernel a = random_kernel(G, 2, 1, rng), b = random_kernel(G, 2, 1, rng);
        const Kernel ab = convolve(a, b, {0, 0});
        // Compress to a ball large enough that rows near the center see every term.
        const int R = 4;
        const Mat A = truncated_matrix(a, R), B = truncated_matrix(b, R), AB = truncated_matrix(ab, R);
        const auto ball = G->ball(R);
        const auto inner = G->ball(R - 2).size();
        const Mat prod = A * B;
        EXPECT_LT((prod.topRows(inner * 2) - AB.topRows(inner * 2)).norm(), 1e-12);
        (void)ball;
    }
}

TEST(Kernels, SymbolIsMultiplicative) {
    std::mt19937_64 rng(2);
    auto G = Group::free_abelian(2);
    const Kernel a = random_kernel(G, 2, 2, rng), b = random_kernel(G, 2, 2, rng);
    const Kernel ab = convolve(a, b, {0, 0});
    const std::vector<double> th{0.3, -1.1};
    EXPECT_LT((symbol(ab, th) - symbol(a, th) * symbol(b, th)).norm(), 1e-11);
    EXPECT_LT((symbol(adjoint(a), th) - symbol(a, th).adjoint()).norm(), 1e-12);
}

TEST(Kernels, WeightedNormByHand) {
    auto G = Group::free_abelian(1);
    Kernel k(G, 1);
    k.add_to(G->z(0), Mat::Constant(1, 1, 2.0));
    k.add_to(G->z(3), Mat::Constant(1, 1, cd(0, -1)));
    EXPECT_NEAR(weighted_norm(k, 0.0), 3.0, 1e-15);
    EXPECT_NEAR(weighted_norm(k, 0.5), 2.0 + std::exp(1.5), 1e-13);
    EXPECT_EQ(word_propagation(k), 3);
}

TEST(Kernels, OperatorNormBounds) {
    auto G = Group::free_abelian(1);
    Kernel k(G, 1);
    k.add_to(G->z(1), Mat::Constant(1, 1, 1.0));
    k.add_to(G->z(-1), Mat::Constant(1, 1, 1.0));
    // Symbol 2cos θ: norm 2.
    const auto f = op_norm(k, NormMethod::Fiberwise);
    EXPECT_NEAR(f.upper, 2.0, 1e-9);
    const auto t = op_norm(k, NormMethod::Truncated, {256, 6});
    EXPECT_LE(t.lower, 2.0 + 1e-12);
    EXPECT_GE(op_norm(k, NormMethod::L1Bound).upper, 2.0);
}

TEST(Kernels, AdjointInvolutionAndDrop) {
    std::mt19937_64 rng(4);
    auto G = Group::free(2);
    const Kernel a = random_kernel(G, 3, 2, rng);
    EXPECT_LT(l1_distance(adjoint(adjoint(a)), a), 1e-15);
    Kernel b = a;
    b.add_to(G->word({1, 1, 1}), Mat::Constant(3, 3, 1e-20));
    EXPECT_EQ(drop_small(b).size(), a.size());
}

TEST(Kernels, JsonRoundTrip) {
    std::mt19937_64 rng(5);
    const Kernel a = random_kernel(Group::free_abelian(2), 2, 1, rng);
    EXPECT_LT(l1_distance(kernel_from_json(kernel_to_json(a)), a), 1e-15);
}
