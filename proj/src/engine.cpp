#include "nbb/engine.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "nbb/select.hpp"

namespace nbb {

void NbbConfig::validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("NbbConfig: gamma must lie in [0, 1]");
    }
    for (int n : neighborhood) {
        if (n < 1 || n % 2 == 0) {
            throw std::invalid_argument("NbbConfig: neighborhood sizes must be odd and positive");
        }
    }
    for (std::size_t i = 1; i < radius.size(); ++i) {
        if (radius[i] < 0) {
            throw std::invalid_argument("NbbConfig: negative receptive radius");
        }
    }
}

namespace {

void check_region(const Region& r, const Tensor3& map, const char* what) {
    if (r.x0 < 0 || r.y0 < 0 || r.x0 > r.x1 || r.y0 > r.y1 || r.x1 >= map.width() ||
        r.y1 >= map.height()) {
        throw std::invalid_argument(std::string(what) + ": region empty or outside the map");
    }
}

bool inside(const Tensor3& map, int x, int y) {
    return x >= 0 && y >= 0 && x < map.width() && y < map.height();
}

// Channel vectors divided by their L2 norm, computed on demand for a
// rectangular window of a map and stored pixel-major.
class UnitVectors {
public:
    UnitVectors(const Tensor3& map, const Region& window)
        : window_(window), channels_(map.channels()),
          data_(static_cast<std::size_t>(window.area()) * map.channels()) {
        for (int y = window.y0; y <= window.y1; ++y) {
            for (int x = window.x0; x <= window.x1; ++x) {
                double* dst = slot(x, y);
                double sum_sq = 0.0;
                for (int c = 0; c < channels_; ++c) {
                    const double v = map.at(c, y, x);
                    sum_sq += v * v;
                }
                if (sum_sq > 0.0) {
                    const double norm = std::sqrt(sum_sq);
                    for (int c = 0; c < channels_; ++c) {
                        dst[c] = map.at(c, y, x) / norm;
                    }
                }
            }
        }
    }

    const double* operator()(int x, int y) const {
        return data_.data() + (static_cast<std::size_t>(y - window_.y0) * window_.width() + (x - window_.x0)) *
                                  channels_;
    }

    int channels() const { return channels_; }

private:
    double* slot(int x, int y) {
        return data_.data() + (static_cast<std::size_t>(y - window_.y0) * window_.width() + (x - window_.x0)) *
                                  channels_;
    }

    Region window_;
    int channels_;
    std::vector<double> data_;
};

double dot(const double* a, const double* b, int n) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

Region dilate(const Region& r, int half, const Tensor3& map) {
    return {r.level, std::max(0, r.x0 - half), std::max(0, r.y0 - half),
            std::min(map.width() - 1, r.x1 + half), std::min(map.height() - 1, r.y1 + half)};
}

int linear_index(Coord c, int width) { return c.y * width + c.x; }

}  // namespace

std::pair<Tensor3, Tensor3> common_appearance(const Tensor3& features_a, const Tensor3& features_b,
                                              const Region& p_region, const Region& q_region) {
    if (features_a.channels() != features_b.channels()) {
        throw std::invalid_argument("common_appearance: channel counts differ");
    }
    if (p_region.level != q_region.level) {
        throw std::invalid_argument("common_appearance: regions on different levels");
    }
    check_region(p_region, features_a, "common_appearance");
    check_region(q_region, features_b, "common_appearance");

    const int channels = features_a.channels();
    struct Stats {
        double mean;
        double stddev;
    };
    auto stats = [](const Tensor3& f, const Region& r, int c) {
        double sum = 0.0;
        for (int y = r.y0; y <= r.y1; ++y) {
            for (int x = r.x0; x <= r.x1; ++x) {
                sum += f.at(c, y, x);
            }
        }
        const double mean = sum / r.area();
        double var = 0.0;
        for (int y = r.y0; y <= r.y1; ++y) {
            for (int x = r.x0; x <= r.x1; ++x) {
                const double d = f.at(c, y, x) - mean;
                var += d * d;
            }
        }
        return Stats{mean, std::sqrt(var / r.area())};
    };
    auto transfer = [](const Tensor3& f, const Region& r, int c, const Stats& own, const Stats& common,
                       Tensor3& out) {
        for (int y = r.y0; y <= r.y1; ++y) {
            for (int x = r.x0; x <= r.x1; ++x) {
                const double normalized = own.stddev > 0.0 ? (f.at(c, y, x) - own.mean) / own.stddev : 0.0;
                out.at(c, y - r.y0, x - r.x0) = static_cast<float>(normalized * common.stddev + common.mean);
            }
        }
    };

    Tensor3 out_a(channels, p_region.height(), p_region.width());
    Tensor3 out_b(channels, q_region.height(), q_region.width());
    for (int c = 0; c < channels; ++c) {
        const Stats sa = stats(features_a, p_region, c);
        const Stats sb = stats(features_b, q_region, c);
        const Stats common{(sa.mean + sb.mean) / 2.0, (sa.stddev + sb.stddev) / 2.0};
        transfer(features_a, p_region, c, sa, common, out_a);
        transfer(features_b, q_region, c, sb, common, out_b);
    }
    return {std::move(out_a), std::move(out_b)};
}

double patch_similarity(const Tensor3& c_a, const Tensor3& c_b, Coord p, Coord q, int nbhd) {
    if (nbhd < 1 || nbhd % 2 == 0) {
        throw std::invalid_argument("patch_similarity: neighborhood must be odd");
    }
    if (c_a.channels() != c_b.channels()) {
        throw std::invalid_argument("patch_similarity: channel counts differ");
    }
    if (!inside(c_a, p.x, p.y) || !inside(c_b, q.x, q.y)) {
        throw std::invalid_argument("patch_similarity: coordinate out of bounds");
    }
    const int half = nbhd / 2;
    const Region win_a = dilate({1, p.x, p.y, p.x, p.y}, half, c_a);
    const Region win_b = dilate({1, q.x, q.y, q.x, q.y}, half, c_b);
    const UnitVectors ua(c_a, win_a);
    const UnitVectors ub(c_b, win_b);
    double d = 0.0;
    for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
            if (inside(c_a, p.x + dx, p.y + dy) && inside(c_b, q.x + dx, q.y + dy)) {
                d += dot(ua(p.x + dx, p.y + dy), ub(q.x + dx, q.y + dy), ua.channels());
            }
        }
    }
    return d;
}

std::vector<CoordPair> find_nbbs(const Tensor3& c_a, const Tensor3& c_b, const RegionPair& pair, int nbhd) {
    if (nbhd < 1 || nbhd % 2 == 0) {
        throw std::invalid_argument("find_nbbs: neighborhood must be odd");
    }
    if (c_a.channels() != c_b.channels()) {
        throw std::invalid_argument("find_nbbs: channel counts differ");
    }
    const Region& pr = pair.p_region;
    const Region& qr = pair.q_region;
    check_region(pr, c_a, "find_nbbs");
    check_region(qr, c_b, "find_nbbs");

    const int half = nbhd / 2;
    const Region win_a = dilate(pr, half, c_a);
    const Region win_b = dilate(qr, half, c_b);
    const UnitVectors ua(c_a, win_a);
    const UnitVectors ub(c_b, win_b);
    const int channels = c_a.channels();

    // Pointwise correlations between every cell of the two dilated windows.
    const int na = win_a.area();
    const int nb = win_b.area();
    std::vector<double> corr(static_cast<std::size_t>(na) * nb);
    for (int ia = 0; ia < na; ++ia) {
        const int xa = win_a.x0 + ia % win_a.width();
        const int ya = win_a.y0 + ia / win_a.width();
        const double* va = ua(xa, ya);
        for (int ib = 0; ib < nb; ++ib) {
            corr[static_cast<std::size_t>(ia) * nb + ib] =
                dot(va, ub(win_b.x0 + ib % win_b.width(), win_b.y0 + ib / win_b.width()), channels);
        }
    }
    auto cell_a = [&](int x, int y) { return (y - win_a.y0) * win_a.width() + (x - win_a.x0); };
    auto cell_b = [&](int x, int y) { return (y - win_b.y0) * win_b.width() + (x - win_b.x0); };

    const int np = pr.area();
    const int nq = qr.area();
    std::vector<double> sim(static_cast<std::size_t>(np) * nq);
    for (int ip = 0; ip < np; ++ip) {
        const int px = pr.x0 + ip % pr.width();
        const int py = pr.y0 + ip / pr.width();
        for (int iq = 0; iq < nq; ++iq) {
            const int qx = qr.x0 + iq % qr.width();
            const int qy = qr.y0 + iq / qr.width();
            double d = 0.0;
            for (int dy = -half; dy <= half; ++dy) {
                for (int dx = -half; dx <= half; ++dx) {
                    if (inside(c_a, px + dx, py + dy) && inside(c_b, qx + dx, qy + dy)) {
                        d += corr[static_cast<std::size_t>(cell_a(px + dx, py + dy)) * nb +
                                  cell_b(qx + dx, qy + dy)];
                    }
                }
            }
            sim[static_cast<std::size_t>(ip) * nq + iq] = d;
        }
    }

    // Region cells are enumerated row-major, so the first strict maximum is
    // the smallest row-major index in the map as well.
    std::vector<int> best_q(np, 0);
    for (int ip = 0; ip < np; ++ip) {
        const double* row = sim.data() + static_cast<std::size_t>(ip) * nq;
        for (int iq = 1; iq < nq; ++iq) {
            if (row[iq] > row[best_q[ip]]) {
                best_q[ip] = iq;
            }
        }
    }
    std::vector<int> best_p(nq, 0);
    for (int iq = 0; iq < nq; ++iq) {
        for (int ip = 1; ip < np; ++ip) {
            if (sim[static_cast<std::size_t>(ip) * nq + iq] > sim[static_cast<std::size_t>(best_p[iq]) * nq + iq]) {
                best_p[iq] = ip;
            }
        }
    }

    std::vector<CoordPair> result;
    for (int ip = 0; ip < np; ++ip) {
        const int iq = best_q[ip];
        if (best_p[iq] == ip) {
            result.emplace_back(Coord{pr.x0 + ip % pr.width(), pr.y0 + ip / pr.width()},
                                Coord{qr.x0 + iq % qr.width(), qr.y0 + iq / qr.width()});
        }
    }
    return result;
}

std::vector<CoordPair> filter_by_activation(const std::vector<CoordPair>& candidates,
                                            const Tensor3& activation_a, const Tensor3& activation_b,
                                            double gamma) {
    std::vector<CoordPair> kept;
    for (const auto& [p, q] : candidates) {
        if (!inside(activation_a, p.x, p.y) || !inside(activation_b, q.x, q.y)) {
            throw std::invalid_argument("filter_by_activation: coordinate outside activation map");
        }
        if (activation_a.at(0, p.y, p.x) > gamma && activation_b.at(0, q.y, q.x) > gamma) {
            kept.emplace_back(p, q);
        }
    }
    return kept;
}

Region receptive_window(Coord c, int level, int radius, int next_height, int next_width) {
    const int half = radius / 2;
    return {level - 1,
            std::clamp(2 * c.x - half, 0, next_width - 1),
            std::clamp(2 * c.y - half, 0, next_height - 1),
            std::clamp(2 * c.x + half, 0, next_width - 1),
            std::clamp(2 * c.y + half, 0, next_height - 1)};
}

std::vector<RegionPair> propagate_regions(const std::vector<CoordPair>& pairs, int level, int radius,
                                          int next_height, int next_width) {
    if (level < 2) {
        throw std::invalid_argument("propagate_regions: level must be >= 2");
    }
    std::vector<RegionPair> out;
    std::set<RegionPair> seen;
    for (const auto& [p, q] : pairs) {
        RegionPair rp{receptive_window(p, level, radius, next_height, next_width),
                      receptive_window(q, level, radius, next_height, next_width)};
        if (seen.insert(rp).second) {
            out.push_back(rp);
        }
    }
    return out;
}

namespace {

struct Node {
    Coord p;
    Coord q;
    int parent = -1;  // index into the next coarser level's nodes
    float ha = 0.0f;
    float hb = 0.0f;
    double partial = 0.0;  // activation sum from level 5 down to this node
};

// Which of two coarser-level ancestors a duplicated candidate keeps: the one
// with the larger accumulated activation, then the smaller unordered pair of
// row-major indices. Both keys are unchanged when A and B swap roles.
bool prefer_parent(const std::vector<Node>& parents, int candidate, int incumbent, int width) {
    if (candidate < 0 || incumbent < 0) {
        return false;
    }
    const Node& c = parents[static_cast<std::size_t>(candidate)];
    const Node& i = parents[static_cast<std::size_t>(incumbent)];
    if (c.partial != i.partial) {
        return c.partial > i.partial;
    }
    auto key = [width](const Node& n) {
        const int a = linear_index(n.p, width);
        const int b = linear_index(n.q, width);
        return std::pair{std::min(a, b), std::max(a, b)};
    };
    return key(c) < key(i);
}

}  // namespace

std::vector<Buddy> run_nbb(const FeaturePyramid& pyramid_a, const FeaturePyramid& pyramid_b,
                           const NbbConfig& config) {
    config.validate();
    if (pyramid_a.input_height != pyramid_b.input_height || pyramid_a.input_width != pyramid_b.input_width) {
        throw std::invalid_argument("run_nbb: pyramids were built from different input sizes");
    }
    for (int level = 1; level <= kPyramidLevels; ++level) {
        const Tensor3& fa = pyramid_a.level(level).features;
        const Tensor3& fb = pyramid_b.level(level).features;
        if (fa.empty() || fa.channels() != fb.channels() || fa.height() != fb.height() ||
            fa.width() != fb.width()) {
            throw std::invalid_argument("run_nbb: pyramid level " + std::to_string(level) + " shapes differ");
        }
    }

    std::array<std::vector<Node>, kPyramidLevels + 1> nodes;  // nodes[l] for level l

    const Tensor3& top = pyramid_a.level(kPyramidLevels).features;
    std::vector<RegionPair> regions{{Region::full(kPyramidLevels, top.height(), top.width()),
                                     Region::full(kPyramidLevels, top.height(), top.width())}};
    std::vector<int> region_parent{-1};

    for (int level = kPyramidLevels; level >= 1; --level) {
        const FeatureLevel& la = pyramid_a.level(level);
        const FeatureLevel& lb = pyramid_b.level(level);
        const int width = la.features.width();
        const int nbhd = config.neighborhood_at(level);
        const auto region_count = static_cast<std::ptrdiff_t>(regions.size());

        std::vector<std::vector<CoordPair>> found(regions.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t i = 0; i < region_count; ++i) {
            const RegionPair& rp = regions[static_cast<std::size_t>(i)];
            if (level == kPyramidLevels) {
                found[static_cast<std::size_t>(i)] = find_nbbs(la.features, lb.features, rp, nbhd);
                continue;
            }
            const auto [ca, cb] = common_appearance(la.features, lb.features, rp.p_region, rp.q_region);
            const RegionPair local{Region::full(level, ca.height(), ca.width()),
                                   Region::full(level, cb.height(), cb.width())};
            auto pairs = find_nbbs(ca, cb, local, nbhd);
            for (auto& [p, q] : pairs) {
                p.x += rp.p_region.x0;
                p.y += rp.p_region.y0;
                q.x += rp.q_region.x0;
                q.y += rp.q_region.y0;
            }
            found[static_cast<std::size_t>(i)] = std::move(pairs);
        }

        // Merge in region order, collapsing (p, q) found in overlapping regions.
        const std::vector<Node>& coarser = level < kPyramidLevels ? nodes[static_cast<std::size_t>(level + 1)]
                                                                  : nodes[0];
        const int coarser_width = level < kPyramidLevels ? pyramid_a.level(level + 1).features.width() : 0;
        std::vector<Node> merged;
        std::map<std::pair<int, int>, std::size_t> index;
        for (std::size_t i = 0; i < found.size(); ++i) {
            for (const auto& [p, q] : found[i]) {
                const auto key = std::pair{linear_index(p, width), linear_index(q, width)};
                const auto [it, inserted] = index.emplace(key, merged.size());
                if (inserted) {
                    merged.push_back({p, q, region_parent[i]});
                } else if (prefer_parent(coarser, region_parent[i], merged[it->second].parent, coarser_width)) {
                    merged[it->second].parent = region_parent[i];
                }
            }
        }

        std::vector<Node>& kept = nodes[static_cast<std::size_t>(level)];
        for (Node& n : merged) {
            n.ha = la.activation.at(0, n.p.y, n.p.x);
            n.hb = lb.activation.at(0, n.q.y, n.q.x);
            if (!(n.ha > config.gamma && n.hb > config.gamma)) {
                continue;
            }
            const double base = n.parent >= 0 ? coarser[static_cast<std::size_t>(n.parent)].partial : 0.0;
            n.partial = base + (static_cast<double>(n.ha) + static_cast<double>(n.hb));
            kept.push_back(n);
        }

        if (level > 1) {
            const Tensor3& next = pyramid_a.level(level - 1).features;
            const int radius = config.radius_at(level);
            regions.clear();
            region_parent.clear();
            std::set<RegionPair> seen;
            for (std::size_t i = 0; i < kept.size(); ++i) {
                RegionPair rp{receptive_window(kept[i].p, level, radius, next.height(), next.width()),
                              receptive_window(kept[i].q, level, radius, next.height(), next.width())};
                if (seen.insert(rp).second) {
                    regions.push_back(rp);
                    region_parent.push_back(static_cast<int>(i));
                }
            }
        }
    }

    const double scale_x = pyramid_a.input_width > 1
                               ? static_cast<double>(pyramid_a.original_width - 1) / (pyramid_a.input_width - 1)
                               : 0.0;
    const double scale_y = pyramid_a.input_height > 1
                               ? static_cast<double>(pyramid_a.original_height - 1) / (pyramid_a.input_height - 1)
                               : 0.0;
    const double scale_bx = pyramid_b.input_width > 1
                                ? static_cast<double>(pyramid_b.original_width - 1) / (pyramid_b.input_width - 1)
                                : 0.0;
    const double scale_by = pyramid_b.input_height > 1
                                ? static_cast<double>(pyramid_b.original_height - 1) / (pyramid_b.input_height - 1)
                                : 0.0;

    std::vector<Buddy> buddies;
    buddies.reserve(nodes[1].size());
    for (const Node& leaf : nodes[1]) {
        Buddy b;
        b.chain_a.resize(kPyramidLevels);
        b.chain_b.resize(kPyramidLevels);
        b.activations_a.resize(kPyramidLevels);
        b.activations_b.resize(kPyramidLevels);
        const Node* n = &leaf;
        for (int level = 1; level <= kPyramidLevels; ++level) {
            const std::size_t slot = Buddy::chain_index(level);
            b.chain_a[slot] = n->p;
            b.chain_b[slot] = n->q;
            b.activations_a[slot] = n->ha;
            b.activations_b[slot] = n->hb;
            if (level < kPyramidLevels) {
                n = &nodes[static_cast<std::size_t>(level + 1)][static_cast<std::size_t>(n->parent)];
            }
        }
        b.pixel_a = {leaf.p.x * scale_x, leaf.p.y * scale_y};
        b.pixel_b = {leaf.q.x * scale_bx, leaf.q.y * scale_by};
        b.rank = compute_rank(b);
        buddies.push_back(std::move(b));
    }

    const int width1 = pyramid_a.level(1).features.width();
    std::stable_sort(buddies.begin(), buddies.end(), [width1](const Buddy& x, const Buddy& y) {
        if (x.rank != y.rank) {
            return x.rank > y.rank;
        }
        const int xa = linear_index(x.at_level_a(1), width1);
        const int ya = linear_index(y.at_level_a(1), width1);
        if (xa != ya) {
            return xa < ya;
        }
        return linear_index(x.at_level_b(1), width1) < linear_index(y.at_level_b(1), width1);
    });
    return buddies;
}

}  // namespace nbb
