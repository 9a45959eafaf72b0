#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nbb/engine.hpp"

namespace nbb {

struct ImageSize {
    int width = 0;
    int height = 0;
    bool operator==(const ImageSize&) const = default;
};

struct SelectionConfig {
    int k = 10;
    std::uint64_t seed = 0;
    int max_iters = 100;
};

/// Sum over levels 1..5 of H_A(p^l) + H_B(q^l). Throws std::invalid_argument
/// if either chain or activation list is not five entries long.
double compute_rank(const Buddy& buddy);

using Point4 = std::array<double, 4>;

struct KMeansResult {
    std::vector<Point4> centers;
    std::vector<int> assignment;  // one cluster index per input point
    int iterations = 0;
};

/// k-means++ seeding from `seed`, then Lloyd iterations until assignments
/// stop changing or max_iters is reached. Distance ties go to the lower
/// cluster index; a cluster that empties keeps its previous center.
KMeansResult kmeans(const std::vector<Point4>& points, int k, std::uint64_t seed, int max_iters);

/// Joint-space feature used for clustering: (x_a/W_a, y_a/H_a, x_b/W_b, y_b/H_b).
Point4 joint_position(const Buddy& buddy, ImageSize size_a, ImageSize size_b);

/// Orders buddies by descending rank; equal ranks fall back to a key that is
/// unchanged when the two images swap roles.
void sort_by_rank(std::vector<Buddy>& buddies);

/// Picks the best-ranked buddy from each of k spatial clusters. Inputs of size
/// <= k pass through. Output is a rank-sorted subset of the input.
std::vector<Buddy> select_top_k(std::vector<Buddy> buddies, const SelectionConfig& config, ImageSize size_a,
                                ImageSize size_b);

}  // namespace nbb
