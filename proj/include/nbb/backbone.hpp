#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nbb/image.hpp"
#include "nbb/tensor.hpp"

namespace nbb {

inline constexpr int kPyramidLevels = 5;

// Errors raised while reading an NBBW weight file.
class WeightError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class WeightFormatError : public WeightError {
public:
    using WeightError::WeightError;
};
class WeightSchemaError : public WeightError {
public:
    using WeightError::WeightError;
};
class WeightTruncationError : public WeightError {
public:
    using WeightError::WeightError;
};

/// Input normalization convention declared in the weight file header.
enum class Normalization : std::uint8_t {
    /// Scale to [0,1], subtract the ImageNet channel means, divide by the stds.
    kImageNetMeanStd = 1,
};

inline constexpr std::array<float, 3> kImageNetMean{0.485f, 0.456f, 0.406f};
inline constexpr std::array<float, 3> kImageNetStd{0.229f, 0.224f, 0.225f};

struct LayerSpec {
    std::string_view name;
    int out_channels;
    int in_channels;
};

/// The 13 VGG-19 convolutions up to conv5_1, in execution order. All 3x3.
inline constexpr std::array<LayerSpec, 13> kVggLayers{{
    {"conv1_1", 64, 3},    {"conv1_2", 64, 64},   {"conv2_1", 128, 64},  {"conv2_2", 128, 128},
    {"conv3_1", 256, 128}, {"conv3_2", 256, 256}, {"conv3_3", 256, 256}, {"conv3_4", 256, 256},
    {"conv4_1", 512, 256}, {"conv4_2", 512, 512}, {"conv4_3", 512, 512}, {"conv4_4", 512, 512},
    {"conv5_1", 512, 512},
}};

inline constexpr std::array<int, kPyramidLevels> kLevelChannels{64, 128, 256, 512, 512};

struct BackboneWeights {
    Normalization normalization = Normalization::kImageNetMeanStd;
    std::vector<ConvLayer> layers;

    /// Checks names, order and shapes against kVggLayers; throws WeightSchemaError.
    void validate() const;
};

/// Reads an NBBW file (little-endian):
///   "NBBW" | u32 version=1 | u8 normalization | u32 layer_count=13 |
///   per layer: u16 name_len, name, u32 out, u32 in, u32 kh, u32 kw,
///              f32 weights[out*in*kh*kw], f32 biases[out]
BackboneWeights load_weights(const std::filesystem::path& path);

/// Writes weights in the same format load_weights accepts.
void save_weights(const BackboneWeights& weights, const std::filesystem::path& path);

/// He-normal random weights with small random biases; deterministic in seed.
BackboneWeights random_weights(std::uint64_t seed);

/// Resizes to side x side and applies the declared normalization.
/// Output shape is 3 x side x side. side must be a positive multiple of 16.
Tensor3 preprocess(const RgbImage& image, int side = 224,
                   Normalization normalization = Normalization::kImageNetMeanStd);

/// Per-location channel-vector L2 norm, min-max rescaled to [0,1]. A map with
/// max == min yields all zeros.
Tensor3 normalize_activations(const Tensor3& features);

struct FeatureLevel {
    Tensor3 features;    // relu{l}_1 output
    Tensor3 activation;  // 1 x h x w, values in [0,1]
};

struct FeaturePyramid {
    std::array<FeatureLevel, kPyramidLevels> levels;  // index l-1 holds level l
    int input_height = 0;
    int input_width = 0;
    int original_height = 0;
    int original_width = 0;

    const FeatureLevel& level(int l) const { return levels.at(static_cast<std::size_t>(l - 1)); }
};

/// Runs the conv/relu chain with max pooling between blocks and taps
/// relu1_1 .. relu5_1. original size defaults to the input size.
FeaturePyramid extract_pyramid(const Tensor3& input, const BackboneWeights& weights);

/// preprocess + extract_pyramid, recording the image's true size.
FeaturePyramid build_pyramid(const RgbImage& image, const BackboneWeights& weights, int side = 224);

}  // namespace nbb
