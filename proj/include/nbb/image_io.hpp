#pragma once

#include <filesystem>
#include <stdexcept>
#include <vector>

#include "nbb/engine.hpp"
#include "nbb/image.hpp"

namespace nbb {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Decodes PNG/JPEG (anything OpenCV reads) into RGB order.
RgbImage read_image(const std::filesystem::path& path);

/// Encodes by extension (.png, .jpg).
void write_image(const RgbImage& image, const std::filesystem::path& path);

/// A and B side by side with numbered, color-matched circles at each
/// buddy's endpoints. Colors follow list order, so pass rank-sorted buddies.
RgbImage annotate_matches(const RgbImage& image_a, const RgbImage& image_b, const std::vector<PixelPoint>& points_a,
                          const std::vector<PixelPoint>& points_b);

}  // namespace nbb
