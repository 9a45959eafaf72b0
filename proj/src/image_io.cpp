#include "nbb/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace nbb {

namespace {

cv::Mat to_bgr(const RgbImage& image) {
    cv::Mat rgb(image.height, image.width, CV_8UC3, const_cast<std::uint8_t*>(image.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

RgbImage from_bgr(const cv::Mat& bgr) {
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    RgbImage image(rgb.cols, rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) {
        std::memcpy(&image.pixels[static_cast<std::size_t>(y) * rgb.cols * 3], rgb.ptr<std::uint8_t>(y),
                    static_cast<std::size_t>(rgb.cols) * 3);
    }
    return image;
}

// Fixed palette (BGR) indexed by list position.
constexpr std::array<std::array<int, 3>, 10> kPalette{{
    {40, 40, 230}, {40, 200, 40}, {230, 120, 30}, {0, 200, 230}, {200, 40, 200},
    {230, 200, 0}, {0, 120, 255}, {140, 60, 140}, {120, 200, 160}, {60, 60, 160},
}};

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw ImageIoError("cannot read image " + path.string());
    }
    return from_bgr(bgr);
}

void write_image(const RgbImage& image, const std::filesystem::path& path) {
    if (image.empty()) {
        throw ImageIoError("refusing to write empty image " + path.string());
    }
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), to_bgr(image));
    } catch (const cv::Exception& e) {
        throw ImageIoError("cannot write image " + path.string() + ": " + e.what());
    }
    if (!ok) {
        throw ImageIoError("cannot write image " + path.string());
    }
}

RgbImage annotate_matches(const RgbImage& image_a, const RgbImage& image_b, const std::vector<PixelPoint>& points_a,
                          const std::vector<PixelPoint>& points_b) {
    const int height = std::max(image_a.height, image_b.height);
    cv::Mat canvas(height, image_a.width + image_b.width, CV_8UC3, cv::Scalar(0, 0, 0));
    to_bgr(image_a).copyTo(canvas(cv::Rect(0, 0, image_a.width, image_a.height)));
    to_bgr(image_b).copyTo(canvas(cv::Rect(image_a.width, 0, image_b.width, image_b.height)));

    const int radius = std::max(3, std::min(height, image_a.width + image_b.width) / 60);
    const double font_scale = std::max(0.35, radius / 10.0);
    auto mark = [&](const PixelPoint& p, int x_offset, std::size_t index) {
        const auto& c = kPalette[index % kPalette.size()];
        const cv::Scalar color(c[0], c[1], c[2]);
        const cv::Point center(static_cast<int>(std::lround(p.x)) + x_offset, static_cast<int>(std::lround(p.y)));
        cv::circle(canvas, center, radius, color, 2, cv::LINE_AA);
        cv::putText(canvas, std::to_string(index + 1), center + cv::Point(radius + 1, -radius - 1),
                    cv::FONT_HERSHEY_SIMPLEX, font_scale, color, 1, cv::LINE_AA);
    };
    const std::size_t n = std::min(points_a.size(), points_b.size());
    for (std::size_t i = 0; i < n; ++i) {
        mark(points_a[i], 0, i);
        mark(points_b[i], image_a.width, i);
    }
    return from_bgr(canvas);
}

}  // namespace nbb
