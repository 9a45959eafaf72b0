#pragma once

#include <utility>
#include <vector>

#include "nbb/engine.hpp"
#include "nbb/image.hpp"

namespace nbb {

using Point2 = PixelPoint;

/// Source/target control points for affine moving-least-squares deformation.
struct ControlSet {
    std::vector<Point2> sources;
    std::vector<Point2> targets;
    double alpha_exponent = 1.0;

    /// Throws std::invalid_argument on empty or mismatched lists or
    /// coincident sources.
    void validate() const;

    /// Same pairs with the roles of sources and targets exchanged.
    ControlSet swapped() const;
};

/// Affine MLS deformation with weights 1 / |v - source_i|^(2 alpha).
/// Exact at control points; a rank-deficient fit falls back to the weighted
/// centroid translation.
Point2 mls_map(Point2 point, const ControlSet& controls);

std::vector<Point2> midpoints(const std::vector<std::pair<Point2, Point2>>& matches);

/// Inverse-mapped warp: output(v) = input(mls_map(v, controls.swapped())),
/// bilinear sampling, black outside the input.
RgbImage warp_image(const RgbImage& image, const ControlSet& controls);

/// Builds a control set from pairs, dropping any pair whose source repeats an
/// earlier one.
ControlSet make_controls(const std::vector<std::pair<Point2, Point2>>& pairs, double alpha_exponent = 1.0);

/// Warps both images so each buddy's endpoints land on their midpoint.
std::pair<RgbImage, RgbImage> align_pair(const RgbImage& image_a, const RgbImage& image_b,
                                         const std::vector<Buddy>& buddies);

}  // namespace nbb
