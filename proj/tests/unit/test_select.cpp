#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "nbb/select.hpp"

namespace nbb {
namespace {

Buddy make_buddy(PixelPoint pa, PixelPoint pb, float act_a, float act_b) {
    Buddy b;
    b.chain_a.assign(5, Coord{0, 0});
    b.chain_b.assign(5, Coord{0, 0});
    b.activations_a.assign(5, act_a);
    b.activations_b.assign(5, act_b);
    b.pixel_a = pa;
    b.pixel_b = pb;
    b.rank = compute_rank(b);
    return b;
}

TEST(ComputeRank, Examples) {
    EXPECT_DOUBLE_EQ(make_buddy({0, 0}, {0, 0}, 1.0f, 1.0f).rank, 10.0);
    EXPECT_DOUBLE_EQ(make_buddy({0, 0}, {0, 0}, 0.0f, 0.0f).rank, 0.0);
    EXPECT_NEAR(make_buddy({0, 0}, {0, 0}, 0.3f, 0.3f).rank, 3.0, 1e-6);
}

TEST(ComputeRank, IncompleteChainThrows) {
    Buddy b = make_buddy({0, 0}, {0, 0}, 0.5f, 0.5f);
    b.chain_a.pop_back();
    EXPECT_THROW(compute_rank(b), std::invalid_argument);
    b = make_buddy({0, 0}, {0, 0}, 0.5f, 0.5f);
    b.activations_b.resize(3);
    EXPECT_THROW(compute_rank(b), std::invalid_argument);
}

std::vector<Buddy> random_buddies(int n, std::mt19937& rng) {
    std::uniform_real_distribution<double> pos(0.0, 99.0);
    std::uniform_real_distribution<float> act(0.06f, 1.0f);
    std::vector<Buddy> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(make_buddy({pos(rng), pos(rng)}, {pos(rng), pos(rng)}, act(rng), act(rng)));
    }
    return out;
}

const ImageSize kSize{100, 100};

TEST(SelectTopK, KOneReturnsTheMaximum) {
    std::mt19937 rng(40);
    auto buddies = random_buddies(30, rng);
    const auto out = select_top_k(buddies, {1, 0, 100}, kSize, kSize);
    ASSERT_EQ(out.size(), 1u);
    const double best = std::max_element(buddies.begin(), buddies.end(), [](const Buddy& a, const Buddy& b) {
                            return a.rank < b.rank;
                        })->rank;
    EXPECT_EQ(out[0].rank, best);
}

TEST(SelectTopK, SmallInputPassesThroughSorted) {
    std::mt19937 rng(41);
    auto buddies = random_buddies(6, rng);
    const auto out = select_top_k(buddies, {10, 0, 100}, kSize, kSize);
    ASSERT_EQ(out.size(), 6u);
    for (std::size_t i = 1; i < out.size(); ++i) {
        EXPECT_GE(out[i - 1].rank, out[i].rank);
    }
    for (const Buddy& b : buddies) {
        EXPECT_NE(std::find(out.begin(), out.end(), b), out.end());
    }
}

TEST(SelectTopK, ZeroKThrows) {
    std::mt19937 rng(42);
    EXPECT_THROW(select_top_k(random_buddies(3, rng), {0, 0, 100}, kSize, kSize), std::invalid_argument);
}

TEST(SelectTopK, SubsetSizeAndOrder) {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        auto buddies = random_buddies(15 + trial * 3, rng);
        const int k = 1 + trial % 7;
        const auto out = select_top_k(buddies, {k, static_cast<std::uint64_t>(trial), 100}, kSize, kSize);
        EXPECT_GE(out.size(), 1u);
        EXPECT_LE(out.size(), static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_NE(std::find(buddies.begin(), buddies.end(), out[i]), buddies.end());
            if (i > 0) {
                EXPECT_GE(out[i - 1].rank, out[i].rank);
            }
        }
    }
}

double sse(const std::vector<Point4>& pts, const std::vector<int>& members) {
    Point4 mean{0, 0, 0, 0};
    for (int i : members) {
        for (int d = 0; d < 4; ++d) mean[d] += pts[i][d];
    }
    for (double& m : mean) m /= static_cast<double>(members.size());
    double s = 0.0;
    for (int i : members) {
        for (int d = 0; d < 4; ++d) s += (pts[i][d] - mean[d]) * (pts[i][d] - mean[d]);
    }
    return s;
}

TEST(SelectTopK, TwoGroupsMatchExhaustivePartition) {
    std::mt19937 rng(44);
    std::normal_distribution<double> jitter(0.0, 2.0);
    std::uniform_real_distribution<float> act(0.1f, 1.0f);
    std::vector<Buddy> buddies;
    for (int i = 0; i < 20; ++i) {
        const double cx = i < 10 ? 20.0 : 75.0;
        const double cy = i < 10 ? 25.0 : 70.0;
        buddies.push_back(make_buddy({cx + jitter(rng), cy + jitter(rng)}, {cx + 3 + jitter(rng), cy + jitter(rng)},
                                     act(rng), act(rng)));
    }
    std::vector<Point4> pts;
    for (const Buddy& b : buddies) pts.push_back(joint_position(b, kSize, kSize));

    // Minimum-SSE 2-partition by enumeration; point 0 fixed in the first part.
    double best = std::numeric_limits<double>::infinity();
    unsigned best_mask = 0;
    for (unsigned mask = 0; mask < (1u << 19); ++mask) {
        std::vector<int> left{0};
        std::vector<int> right;
        for (int i = 1; i < 20; ++i) ((mask >> (i - 1)) & 1u ? right : left).push_back(i);
        if (right.empty()) continue;
        const double s = sse(pts, left) + sse(pts, right);
        if (s < best) {
            best = s;
            best_mask = mask;
        }
    }
    std::vector<Buddy> expected;
    for (int side = 0; side < 2; ++side) {
        const Buddy* top = nullptr;
        for (int i = 0; i < 20; ++i) {
            const int in_right = i == 0 ? 0 : static_cast<int>((best_mask >> (i - 1)) & 1u);
            if (in_right == side && (top == nullptr || buddies[i].rank > top->rank)) top = &buddies[i];
        }
        expected.push_back(*top);
    }
    sort_by_rank(expected);

    for (std::uint64_t seed : {0ull, 1ull, 7ull}) {
        EXPECT_EQ(select_top_k(buddies, {2, seed, 100}, kSize, kSize), expected) << "seed " << seed;
    }
}

TEST(SelectTopK, RankScalingKeepsSelection) {
    std::mt19937 rng(45);
    auto buddies = random_buddies(40, rng);
    auto scaled = buddies;
    for (Buddy& b : scaled) b.rank *= 3.5;
    const auto out = select_top_k(buddies, {5, 3, 100}, kSize, kSize);
    const auto out_scaled = select_top_k(scaled, {5, 3, 100}, kSize, kSize);
    ASSERT_EQ(out.size(), out_scaled.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].pixel_a, out_scaled[i].pixel_a);
        EXPECT_EQ(out[i].pixel_b, out_scaled[i].pixel_b);
    }
}

TEST(SelectTopK, SameSeedSameResult) {
    std::mt19937 rng(46);
    auto buddies = random_buddies(50, rng);
    EXPECT_EQ(select_top_k(buddies, {6, 9, 100}, kSize, kSize), select_top_k(buddies, {6, 9, 100}, kSize, kSize));
}

TEST(SortByRank, SwapInvariantTieBreak) {
    std::vector<Buddy> v{make_buddy({5, 1}, {2, 3}, 0.5f, 0.5f), make_buddy({1, 1}, {9, 9}, 0.5f, 0.5f),
                         make_buddy({4, 0}, {0, 8}, 0.5f, 0.5f)};
    auto swapped = v;
    for (Buddy& b : swapped) std::swap(b.pixel_a, b.pixel_b);
    sort_by_rank(v);
    sort_by_rank(swapped);
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(v[i].pixel_a, swapped[i].pixel_b);
    }
}

TEST(KMeans, FewerDistinctPointsThanK) {
    const std::vector<Point4> pts(5, Point4{0.5, 0.5, 0.5, 0.5});
    const auto r = kmeans(pts, 3, 0, 50);
    EXPECT_EQ(r.centers.size(), 1u);
    EXPECT_EQ(r.assignment, std::vector<int>(5, 0));
}

TEST(KMeans, AssignmentIsNearestCenter) {
    std::mt19937 rng(47);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Point4> pts(60);
    for (Point4& p : pts) p = {u(rng), u(rng), u(rng), u(rng)};
    const auto r = kmeans(pts, 4, 11, 200);
    ASSERT_EQ(r.centers.size(), 4u);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto dist = [&](const Point4& c) {
            double s = 0;
            for (int d = 0; d < 4; ++d) s += (pts[i][d] - c[d]) * (pts[i][d] - c[d]);
            return s;
        };
        const double mine = dist(r.centers[r.assignment[i]]);
        for (const Point4& c : r.centers) EXPECT_LE(mine, dist(c) + 1e-12);
    }
}

}  // namespace
}  // namespace nbb
