#include "nbb/mls.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbb {

void ControlSet::validate() const {
    if (sources.empty()) {
        throw std::invalid_argument("ControlSet: no control points");
    }
    if (sources.size() != targets.size()) {
        throw std::invalid_argument("ControlSet: sources and targets differ in length");
    }
    if (!(alpha_exponent > 0.0)) {
        throw std::invalid_argument("ControlSet: alpha exponent must be positive");
    }
    std::vector<Point2> sorted = sources;
    std::sort(sorted.begin(), sorted.end(), [](const Point2& a, const Point2& b) {
        return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw std::invalid_argument("ControlSet: coincident source points");
    }
}

ControlSet ControlSet::swapped() const { return {targets, sources, alpha_exponent}; }

namespace {

Point2 map_validated(Point2 point, const ControlSet& controls) {
    const std::size_t n = controls.sources.size();

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = point.x - controls.sources[i].x;
        const double dy = point.y - controls.sources[i].y;
        const double d2 = dx * dx + dy * dy;
        if (d2 == 0.0) {
            return controls.targets[i];
        }
        w[i] = controls.alpha_exponent == 1.0 ? 1.0 / d2 : std::pow(d2, -controls.alpha_exponent);
    }
    const double w_max = *std::max_element(w.begin(), w.end());
    double w_sum = 0.0;
    for (double& wi : w) {
        wi /= w_max;
        w_sum += wi;
    }

    Point2 p_star{0.0, 0.0};
    Point2 q_star{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        p_star.x += w[i] * controls.sources[i].x;
        p_star.y += w[i] * controls.sources[i].y;
        q_star.x += w[i] * controls.targets[i].x;
        q_star.y += w[i] * controls.targets[i].y;
    }
    p_star = {p_star.x / w_sum, p_star.y / w_sum};
    q_star = {q_star.x / w_sum, q_star.y / w_sum};

    // Row-vector convention: f(v) = (v - p*) M + q*, M = (sum w p^T p)^-1 sum w p^T q.
    double a00 = 0.0, a01 = 0.0, a11 = 0.0;
    double b00 = 0.0, b01 = 0.0, b10 = 0.0, b11 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double px = controls.sources[i].x - p_star.x;
        const double py = controls.sources[i].y - p_star.y;
        const double qx = controls.targets[i].x - q_star.x;
        const double qy = controls.targets[i].y - q_star.y;
        a00 += w[i] * px * px;
        a01 += w[i] * px * py;
        a11 += w[i] * py * py;
        b00 += w[i] * px * qx;
        b01 += w[i] * px * qy;
        b10 += w[i] * py * qx;
        b11 += w[i] * py * qy;
    }
    const double vx = point.x - p_star.x;
    const double vy = point.y - p_star.y;
    const double det = a00 * a11 - a01 * a01;
    const double trace = a00 + a11;
    if (!(trace > 0.0) || std::abs(det) <= 1e-12 * trace * trace) {
        return {vx + q_star.x, vy + q_star.y};
    }
    const double i00 = a11 / det;
    const double i01 = -a01 / det;
    const double i11 = a00 / det;
    const double m00 = i00 * b00 + i01 * b10;
    const double m01 = i00 * b01 + i01 * b11;
    const double m10 = i01 * b00 + i11 * b10;
    const double m11 = i01 * b01 + i11 * b11;
    return {vx * m00 + vy * m10 + q_star.x, vx * m01 + vy * m11 + q_star.y};
}

}  // namespace

Point2 mls_map(Point2 point, const ControlSet& controls) {
    controls.validate();
    return map_validated(point, controls);
}

std::vector<Point2> midpoints(const std::vector<std::pair<Point2, Point2>>& matches) {
    if (matches.empty()) {
        throw std::invalid_argument("midpoints: no matches");
    }
    std::vector<Point2> out;
    out.reserve(matches.size());
    for (const auto& [a, b] : matches) {
        out.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
    return out;
}

namespace {

// Samples within this distance of the border are clamped onto it.
constexpr double kEdgeSlack = 1e-6;

void sample_bilinear(const RgbImage& image, double x, double y, std::uint8_t* rgb) {
    if (x < -kEdgeSlack || y < -kEdgeSlack || x > image.width - 1 + kEdgeSlack ||
        y > image.height - 1 + kEdgeSlack) {
        rgb[0] = rgb[1] = rgb[2] = 0;
        return;
    }
    x = std::clamp(x, 0.0, static_cast<double>(image.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(image.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, image.width - 1);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double tx = x - x0;
    const double ty = y - y0;
    for (int c = 0; c < 3; ++c) {
        const double top = image.at(x0, y0, c) + tx * (image.at(x1, y0, c) - image.at(x0, y0, c));
        const double bottom = image.at(x0, y1, c) + tx * (image.at(x1, y1, c) - image.at(x0, y1, c));
        const double v = top + ty * (bottom - top);
        rgb[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
}

}  // namespace

RgbImage warp_image(const RgbImage& image, const ControlSet& controls) {
    controls.validate();
    std::vector<std::pair<Point2, Point2>> reversed;
    for (std::size_t i = 0; i < controls.sources.size(); ++i) {
        reversed.emplace_back(controls.targets[i], controls.sources[i]);
    }
    // Distinct sources may share a target; the first pair wins on the way back.
    const ControlSet inverse = make_controls(reversed, controls.alpha_exponent);
    RgbImage out(image.width, image.height);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            const Point2 src = map_validated({static_cast<double>(x), static_cast<double>(y)}, inverse);
            sample_bilinear(image, src.x, src.y, &out.at(x, y, 0));
        }
    }
    return out;
}

ControlSet make_controls(const std::vector<std::pair<Point2, Point2>>& pairs, double alpha_exponent) {
    ControlSet controls;
    controls.alpha_exponent = alpha_exponent;
    for (const auto& [source, target] : pairs) {
        if (std::find(controls.sources.begin(), controls.sources.end(), source) != controls.sources.end()) {
            continue;
        }
        controls.sources.push_back(source);
        controls.targets.push_back(target);
    }
    return controls;
}

std::pair<RgbImage, RgbImage> align_pair(const RgbImage& image_a, const RgbImage& image_b,
                                         const std::vector<Buddy>& buddies) {
    if (buddies.empty()) {
        throw std::invalid_argument("align_pair: no correspondences to align with");
    }
    std::vector<std::pair<Point2, Point2>> matches;
    matches.reserve(buddies.size());
    for (const Buddy& b : buddies) {
        matches.emplace_back(b.pixel_a, b.pixel_b);
    }
    const std::vector<Point2> eta = midpoints(matches);
    std::vector<std::pair<Point2, Point2>> to_mid_a;
    std::vector<std::pair<Point2, Point2>> to_mid_b;
    for (std::size_t i = 0; i < matches.size(); ++i) {
        to_mid_a.emplace_back(matches[i].first, eta[i]);
        to_mid_b.emplace_back(matches[i].second, eta[i]);
    }
    return {warp_image(image_a, make_controls(to_mid_a)), warp_image(image_b, make_controls(to_mid_b))};
}

}  // namespace nbb
