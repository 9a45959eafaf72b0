#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace nbb {

/// Dense channel-major feature map: channels x height x width, each channel
/// plane stored row-major and contiguous.
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(int channels, int height, int width, float fill = 0.0f);
    Tensor3(int channels, int height, int width, std::vector<float> data);

    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
    bool empty() const { return data_.empty(); }

    float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    float* row(int c, int y) { return data_.data() + index(c, y, 0); }
    const float* row(int c, int y) const { return data_.data() + index(c, y, 0); }

    std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }

    bool operator==(const Tensor3&) const = default;

private:
    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int channels_ = 0;
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

/// One convolution layer's parameters, weights in (out, in, kh, kw) order.
struct ConvLayer {
    std::string name;
    int out_channels = 0;
    int in_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    std::vector<float> weights;
    std::vector<float> biases;

    /// Throws std::invalid_argument when the buffers disagree with the shape.
    void validate() const;
};

/// Stride-1 convolution with zero padding. Output keeps the input's spatial
/// size when padding == (kernel - 1) / 2.
Tensor3 conv2d(const Tensor3& input, const ConvLayer& layer, int padding);

Tensor3 relu(const Tensor3& input);
void relu_inplace(Tensor3& tensor);

/// 2x2 max pooling with stride 2. Both spatial dims must be even.
Tensor3 maxpool2(const Tensor3& input);

/// Bilinear resampling with corner-aligned sample mapping: output index i
/// reads source coordinate i * (in - 1) / (out - 1).
Tensor3 bilinear_resize(const Tensor3& input, int new_h, int new_w);

}  // namespace nbb
