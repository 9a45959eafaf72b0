#include "nbb/select.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nbb {

double compute_rank(const Buddy& buddy) {
    const auto levels = static_cast<std::size_t>(kPyramidLevels);
    if (buddy.chain_a.size() != levels || buddy.chain_b.size() != levels ||
        buddy.activations_a.size() != levels || buddy.activations_b.size() != levels) {
        throw std::invalid_argument("compute_rank: buddy chain does not cover all five levels");
    }
    double rank = 0.0;
    for (int level = 1; level <= kPyramidLevels; ++level) {
        const std::size_t i = Buddy::chain_index(level);
        rank += static_cast<double>(buddy.activations_a[i]) + static_cast<double>(buddy.activations_b[i]);
    }
    return rank;
}

namespace {

// Split as two 2-D halves so the value is bit-identical when A and B swap.
double squared_distance(const Point4& a, const Point4& b) {
    const double d0 = a[0] - b[0];
    const double d1 = a[1] - b[1];
    const double d2 = a[2] - b[2];
    const double d3 = a[3] - b[3];
    return (d0 * d0 + d1 * d1) + (d2 * d2 + d3 * d3);
}

int nearest(const Point4& p, const std::vector<Point4>& centers) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(p, centers[c]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

bool row_major_less(const PixelPoint& a, const PixelPoint& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

}  // namespace

KMeansResult kmeans(const std::vector<Point4>& points, int k, std::uint64_t seed, int max_iters) {
    if (k < 1) {
        throw std::invalid_argument("kmeans: k must be >= 1");
    }
    KMeansResult result;
    const std::size_t n = points.size();
    if (n == 0) {
        return result;
    }

    std::mt19937_64 rng(seed);
    result.centers.push_back(points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) {
        d2[i] = squared_distance(points[i], result.centers[0]);
    }
    while (result.centers.size() < static_cast<std::size_t>(k)) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        if (!(total > 0.0)) {
            break;  // every point already coincides with a center
        }
        const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = n - 1;
        double running = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            running += d2[i];
            if (running > target && d2[i] > 0.0) {
                pick = i;
                break;
            }
        }
        result.centers.push_back(points[pick]);
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], squared_distance(points[i], result.centers.back()));
        }
    }

    const std::size_t clusters = result.centers.size();
    result.assignment.assign(n, -1);
    for (int iter = 0; iter < std::max(1, max_iters); ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const int c = nearest(points[i], result.centers);
            if (c != result.assignment[i]) {
                result.assignment[i] = c;
                changed = true;
            }
        }
        result.iterations = iter + 1;
        if (!changed) {
            break;
        }
        std::vector<Point4> sums(clusters, Point4{0.0, 0.0, 0.0, 0.0});
        std::vector<std::size_t> counts(clusters, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(result.assignment[i]);
            for (int d = 0; d < 4; ++d) {
                sums[c][d] += points[i][d];
            }
            ++counts[c];
        }
        for (std::size_t c = 0; c < clusters; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            for (int d = 0; d < 4; ++d) {
                result.centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
            }
        }
    }
    return result;
}

Point4 joint_position(const Buddy& buddy, ImageSize size_a, ImageSize size_b) {
    if (size_a.width < 1 || size_a.height < 1 || size_b.width < 1 || size_b.height < 1) {
        throw std::invalid_argument("joint_position: image sizes must be positive");
    }
    return {buddy.pixel_a.x / size_a.width, buddy.pixel_a.y / size_a.height, buddy.pixel_b.x / size_b.width,
            buddy.pixel_b.y / size_b.height};
}

void sort_by_rank(std::vector<Buddy>& buddies) {
    std::stable_sort(buddies.begin(), buddies.end(), [](const Buddy& x, const Buddy& y) {
        if (x.rank != y.rank) {
            return x.rank > y.rank;
        }
        const auto& [x_lo, x_hi] = std::minmax(x.pixel_a, x.pixel_b, row_major_less);
        const auto& [y_lo, y_hi] = std::minmax(y.pixel_a, y.pixel_b, row_major_less);
        if (x_lo != y_lo) {
            return row_major_less(x_lo, y_lo);
        }
        if (x_hi != y_hi) {
            return row_major_less(x_hi, y_hi);
        }
        return row_major_less(x.pixel_a, y.pixel_a);
    });
}

std::vector<Buddy> select_top_k(std::vector<Buddy> buddies, const SelectionConfig& config, ImageSize size_a,
                                ImageSize size_b) {
    if (config.k < 1) {
        throw std::invalid_argument("select_top_k: k must be >= 1");
    }
    sort_by_rank(buddies);
    if (buddies.size() <= static_cast<std::size_t>(config.k)) {
        return buddies;
    }

    std::vector<Point4> points;
    points.reserve(buddies.size());
    for (const Buddy& b : buddies) {
        points.push_back(joint_position(b, size_a, size_b));
    }
    const KMeansResult clusters = kmeans(points, config.k, config.seed, config.max_iters);

    // buddies is rank-sorted, so the first member seen is each cluster's best.
    std::vector<bool> taken(clusters.centers.size(), false);
    std::vector<Buddy> selected;
    for (std::size_t i = 0; i < buddies.size(); ++i) {
        const auto c = static_cast<std::size_t>(clusters.assignment[i]);
        if (!taken[c]) {
            taken[c] = true;
            selected.push_back(buddies[i]);
        }
    }
    sort_by_rank(selected);
    return selected;
}

}  // namespace nbb
