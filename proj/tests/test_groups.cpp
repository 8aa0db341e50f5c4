#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "l1/groups.hpp"

using namespace l1;

namespace {

// Breadth-first search on the Cayley graph: an independent count of |ball(n)|.
std::vector<std::size_t> bfs_counts(const Group& g, int n) {
    std::set<Elem> seen{g.identity()};
    std::vector<Elem> frontier{g.identity()};
    std::vector<std::size_t> counts{1};
    for (int r = 1; r <= n; ++r) {
        std::vector<Elem> next;
        for (const auto& x : frontier)
            for (const auto& s : g.generators()) {
                Elem y = g.mul(x, s);
                if (seen.insert(y).second) next.push_back(y);
            }
        frontier = std::move(next);
        counts.push_back(seen.size());
    }
    return counts;
}

Elem random_elem(const Group& g, std::mt19937_64& rng, int len) {
    const auto gens = g.generators();
    std::uniform_int_distribution<std::size_t> pick(0, gens.size() - 1);
    Elem x = g.identity();
    for (int i = 0; i < len; ++i) x = g.mul(x, gens[pick(rng)]);
    return x;
}

}  // namespace

TEST(Groups, BallCountsMatchBreadthFirstSearch) {
    for (const GroupPtr& g : {Group::free_abelian(1), Group::free_abelian(2), Group::free(2), Group::cyclic(5),
                              Group::product(Group::free_abelian(1), Group::cyclic(3))}) {
        const auto bfs = bfs_counts(*g, 5);
        EXPECT_EQ(g->ball_counts(5), bfs) << g->to_json().dump();
    }
}

TEST(Groups, ClosedFormCounts) {
    auto Z2 = Group::free_abelian(2);
    auto F2 = Group::free(2);
    for (int n = 0; n <= 6; ++n) {
        EXPECT_EQ(closed_form_ball_count(*Z2, n), 2LL * n * n + 2 * n + 1);
        long long f = 1, shell = 4;
        for (int r = 1; r <= n; ++r, shell *= 3) f += shell;
        EXPECT_EQ(closed_form_ball_count(*F2, n), f);
    }
}

TEST(Groups, GroupAxiomsOnRandomWords) {
    std::mt19937_64 rng(3);
    for (const GroupPtr& g : {Group::free(2), Group::free_abelian(2), Group::cyclic(7)}) {
        for (int i = 0; i < 200; ++i) {
            const Elem a = random_elem(*g, rng, 6), b = random_elem(*g, rng, 6), c = random_elem(*g, rng, 6);
            EXPECT_EQ(g->mul(g->mul(a, b), c), g->mul(a, g->mul(b, c)));
            EXPECT_TRUE(g->is_identity(g->mul(a, g->inv(a))));
            EXPECT_EQ(g->length(a), g->length(g->inv(a)));
            EXPECT_LE(g->length(g->mul(a, b)), g->length(a) + g->length(b));
        }
    }
}

TEST(Groups, FreeWordsReduce) {
    auto F2 = Group::free(2);
    EXPECT_EQ(F2->length(F2->word({1, 2, -2, -1})), 0);
    EXPECT_EQ(F2->length(F2->word({1, 2, -1})), 3);
    EXPECT_FALSE(F2->is_abelian());
}

TEST(Groups, GrowthRates) {
    const auto z2 = growth_rate(*Group::free_abelian(2), 8);
    EXPECT_LE(z2.rate, 0.05);
    const auto f2 = growth_rate(*Group::free(2), 8);
    EXPECT_NEAR(f2.rate, std::log(3.0), 0.05);
    EXPECT_DOUBLE_EQ(exact_growth_rate(*Group::free(2)), std::log(3.0));
    EXPECT_DOUBLE_EQ(exact_growth_rate(*Group::free_abelian(3)), 0.0);
}

TEST(Groups, JsonRoundTrip) {
    const nlohmann::json j = {{"kind", "product"},
                              {"left", {{"kind", "free_abelian"}, {"rank", 1}}},
                              {"right", {{"kind", "cyclic"}, {"order", 4}}}};
    auto g = Group::from_json(j);
    EXPECT_TRUE(g->same(*Group::from_json(g->to_json())));
    const Elem x = g->pair(g->left()->z(3), g->right()->z(2));
    EXPECT_EQ(g->elem_from_json(g->elem_to_json(x)), x);
    EXPECT_THROW(Group::from_json({{"kind", "heisenberg"}}), ArgumentError);
}

TEST(Groups, CoordinatesRoundTrip) {
    auto g = Group::free_abelian(2);
    const Elem x = g->zn({3, -2});
    EXPECT_EQ(g->from_coords(g->coords(x)), x);
    EXPECT_EQ(g->length(x), 5);
}
