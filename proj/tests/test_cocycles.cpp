#include <gtest/gtest.h>

#include "l1/cocycles.hpp"

using namespace l1;

namespace {

Kernel shift(GroupPtr Z, long k) { return Kernel::delta(Z, Z->z(k), Mat::Identity(1, 1)); }

}  // namespace

TEST(Cocycles, RegistryCocyclesAreCyclicAndClosed) {
    auto Z = Group::free_abelian(1), Z2 = Group::free_abelian(2), F2 = Group::free(2);
    for (auto [name, G] : std::vector<std::pair<std::string, GroupPtr>>{
             {"trace", F2}, {"delta:1", Z}, {"delta:1,-1", F2}, {"area_Z2", Z2}, {"winding_Z", Z}}) {
        CyclicCocycle phi = make_cocycle(name, G);
        const auto c = check_cocycle(phi, 2, 20000, 5);
        EXPECT_TRUE(c.cyclic) << name << " " << c.cyclicViolation;
        EXPECT_TRUE(c.closed) << name << " " << c.cocycleViolation;
    }
}

TEST(Cocycles, DelocalizationFlags) {
    auto Z = Group::free_abelian(1);
    CyclicCocycle tr = make_cocycle("trace", Z), d1 = make_cocycle("delta:1", Z);
    EXPECT_FALSE(check_cocycle(tr, 2, 1000).delocalized);
    EXPECT_TRUE(check_cocycle(d1, 2, 1000).delocalized);
    auto [e, d] = delocalize(make_cocycle("winding_Z", Z));
    CyclicCocycle dd = d;
    EXPECT_TRUE(check_cocycle(dd, 2, 1000).delocalized);
    EXPECT_EQ(e.degree, 1);
}

TEST(Cocycles, UnknownNameListsRegistry) {
    try {
        make_cocycle("nope", Group::free_abelian(1));
        FAIL();
    } catch (const ArgumentError& e) {
        EXPECT_NE(std::string(e.what()).find("area_Z2"), std::string::npos);
    }
    EXPECT_THROW(make_cocycle("area_Z2", Group::free_abelian(1)), ArgumentError);
}

TEST(Cocycles, JsonExpressions) {
    auto Z2 = Group::free_abelian(2);
    const nlohmann::json j = {{"degree", 0},
                              {"expr", {{"op", "mul"}, {"args", {{{"coord", {0, 0}}}, {{"unit_product", true}}}}}}};
    EXPECT_TRUE(validate_cocycle_json(j).empty());
    const CyclicCocycle phi = cocycle_from_json(j, Z2);
    EXPECT_EQ(phi({Z2->identity()}), cd(0));
    EXPECT_FALSE(validate_cocycle_json({{"degree", 1}, {"expr", {{"op", "pow"}}}}).empty());
    EXPECT_FALSE(validate_cocycle_json("not_registered").empty());
}

TEST(Cocycles, CoboundaryOfCyclicCochainIsClosed) {
    auto Z = Group::free_abelian(1);
    CyclicCocycle b = coboundary(random_cyclic_cochain(Z, 1, 3, 0.5));
    const auto c = check_cocycle(b, 2, 20000, 1);
    EXPECT_TRUE(c.cyclic);
    EXPECT_TRUE(c.closed);
}

TEST(Cocycles, GrowthFit) {
    const auto g = cocycle_growth(make_cocycle("winding_Z", Group::free_abelian(1)), 4);
    EXPECT_GE(g.points, 2);
    EXPECT_GE(g.K, 0.0);
    EXPECT_LT(g.K, 0.6);
}

TEST(Cocycles, TracePairingOfRankOneProjection) {
    auto Z = Group::free_abelian(1);
    IndexIdempotent p;
    p.p = Kernel::identity(Z, 1);
    p.e11 = Kernel::zero(Z, 1);
    const auto r = pair_even(make_cocycle("trace", Z), p, 3);
    EXPECT_EQ(r.value, cd(1.0));
}

TEST(Cocycles, DelocalizedPairingOfTrivialClassIsZero) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
    IndexIdempotent p;
    p.e11 = Kernel::identity(D.G, 2);
    p.e11.comps.begin()->second(0, 0) = 0;
    p.p = p.e11;
    const auto r = pair_even(make_cocycle("delta:1", D.G), p, 3);
    EXPECT_EQ(r.value, cd(0.0));
}

TEST(Cocycles, CoboundaryAnnihilatesIdempotent) {
    const Kernel D = gapped_dirac(Group::free_abelian(1), 1.5);
    const auto p = index_idempotent(D, SpectralFunction::fat(1.5, 1.0), 0.0, Scheme::Fiberwise);
    const CyclicCocycle b = coboundary(delocalize(random_cyclic_cochain(D.G, 1, 7, 1.5)).second);
    const auto r = pair_even(b, p, 12, 1e-8);
    EXPECT_LE(std::abs(r.value), 1e-8);
}

TEST(Cocycles, OddPairingWithShiftIsMinusWinding) {
    auto Z = Group::free_abelian(1);
    for (long k : {1L, 2L, -1L}) {
        IndexInvertible u;
        u.w = shift(Z, k);
        u.winv = shift(Z, -k);
        EXPECT_NEAR(winding_number(u.w), double(k), 1e-12);
        const auto r = pair_odd(make_cocycle("winding_Z", Z), u, 3);
        EXPECT_NEAR(r.value.real(), -double(k), 1e-12);
        EXPECT_NEAR(r.value.imag(), 0.0, 1e-12);
    }
}

TEST(Cocycles, FiniteGroupHasNoTail) {
    const Kernel D = gapped_dirac(Group::cyclic(5), 1.5);
    const auto p = index_idempotent(D, SpectralFunction::gt(2.0), 0.0, Scheme::Fiberwise);
    const auto r = pair_even(make_cocycle("delta:1", D.G), p, 2);
    EXPECT_EQ(r.tailMass, 0.0);
    EXPECT_TRUE(r.converged);
}
