#pragma once

#include <array>
#include <compare>
#include <utility>
#include <vector>

#include "nbb/backbone.hpp"
#include "nbb/tensor.hpp"

namespace nbb {

/// Integer grid position at some pyramid level.
struct Coord {
    int x = 0;
    int y = 0;
    auto operator<=>(const Coord&) const = default;
};

/// Continuous pixel position in an original image.
struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const PixelPoint&) const = default;
};

/// Inclusive rectangle [x0, x1] x [y0, y1] on one level's grid.
struct Region {
    int level = 1;
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    int width() const { return x1 - x0 + 1; }
    int height() const { return y1 - y0 + 1; }
    int area() const { return width() * height(); }
    bool contains(Coord c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }

    static Region full(int level, int height, int width) { return {level, 0, 0, width - 1, height - 1}; }

    auto operator<=>(const Region&) const = default;
};

struct RegionPair {
    Region p_region;  // in image A's map
    Region q_region;  // in image B's map
    auto operator<=>(const RegionPair&) const = default;
};

using CoordPair = std::pair<Coord, Coord>;

/// A matched pair with its ancestry. Chains are stored coarse to fine:
/// index 0 is level 5, index 4 is level 1.
struct Buddy {
    std::vector<Coord> chain_a;
    std::vector<Coord> chain_b;
    std::vector<float> activations_a;
    std::vector<float> activations_b;
    PixelPoint pixel_a;
    PixelPoint pixel_b;
    double rank = 0.0;

    static constexpr std::size_t chain_index(int level) { return static_cast<std::size_t>(kPyramidLevels - level); }
    Coord at_level_a(int level) const { return chain_a.at(chain_index(level)); }
    Coord at_level_b(int level) const { return chain_b.at(chain_index(level)); }

    bool operator==(const Buddy&) const = default;
};

struct NbbConfig {
    double gamma = 0.05;
    /// Patch side per level, index l-1.
    std::array<int, kPyramidLevels> neighborhood{5, 5, 5, 3, 3};
    /// Receptive radius used when refining from level l into l-1, index l-1.
    /// Level 1 has no finer level, so its entry is unused.
    std::array<int, kPyramidLevels> radius{0, 4, 4, 6, 6};

    int neighborhood_at(int level) const { return neighborhood.at(static_cast<std::size_t>(level - 1)); }
    int radius_at(int level) const { return radius.at(static_cast<std::size_t>(level - 1)); }

    /// Throws std::invalid_argument on gamma outside [0,1] or even neighborhoods.
    void validate() const;
};

/// Renormalizes both regions to their average per-channel mean and standard
/// deviation. Returns tensors cropped to p_region and q_region respectively.
/// A zero-variance channel maps every cell to the common mean.
std::pair<Tensor3, Tensor3> common_appearance(const Tensor3& features_a, const Tensor3& features_b,
                                              const Region& p_region, const Region& q_region);

/// Aligned patch correlation: sum over offsets d in an nbhd x nbhd window of
/// <unit(C_a(p+d)), unit(C_b(q+d))>, skipping offsets that leave either map.
/// Zero vectors contribute zero.
double patch_similarity(const Tensor3& c_a, const Tensor3& c_b, Coord p, Coord q, int nbhd);

/// Mutual nearest neighbours under patch_similarity inside one region pair.
/// Argmax ties go to the smallest row-major index; output is ordered by p.
std::vector<CoordPair> find_nbbs(const Tensor3& c_a, const Tensor3& c_b, const RegionPair& pair, int nbhd);

/// Keeps pairs with H_a(p) > gamma and H_b(q) > gamma, preserving order.
std::vector<CoordPair> filter_by_activation(const std::vector<CoordPair>& candidates,
                                            const Tensor3& activation_a, const Tensor3& activation_b,
                                            double gamma);

/// Window [2c - r/2, 2c + r/2] on the next finer grid, clamped to its dims.
Region receptive_window(Coord c, int level, int radius, int next_height, int next_width);

/// Maps each level-l pair to its pair of search windows at level l-1.
/// Exact duplicate region pairs are dropped, first occurrence kept.
std::vector<RegionPair> propagate_regions(const std::vector<CoordPair>& pairs, int level, int radius,
                                          int next_height, int next_width);

/// Full coarse-to-fine search. Output is sorted by descending rank, ties by
/// the row-major index of the level-1 coordinate in A.
std::vector<Buddy> run_nbb(const FeaturePyramid& pyramid_a, const FeaturePyramid& pyramid_b,
                           const NbbConfig& config = {});

}  // namespace nbb
