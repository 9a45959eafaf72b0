#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nbb {

/// 8-bit interleaved RGB image, row-major.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {
        if (w < 0 || h < 0) {
            throw std::invalid_argument("RgbImage: negative dimension");
        }
    }

    bool empty() const { return width == 0 || height == 0; }

    std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const RgbImage&) const = default;
};

}  // namespace nbb
