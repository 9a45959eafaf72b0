#include "nbb/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbb {

Tensor3::Tensor3(int channels, int height, int width, float fill)
    : channels_(channels), height_(height), width_(width) {
    if (channels < 0 || height < 0 || width < 0) {
        throw std::invalid_argument("Tensor3: negative dimension");
    }
    data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Tensor3::Tensor3(int channels, int height, int width, std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
    if (channels < 0 || height < 0 || width < 0) {
        throw std::invalid_argument("Tensor3: negative dimension");
    }
    if (data_.size() != static_cast<std::size_t>(channels) * height * width) {
        throw std::invalid_argument("Tensor3: data length does not match channels*height*width");
    }
}

void ConvLayer::validate() const {
    if (out_channels <= 0 || in_channels <= 0 || kernel_h <= 0 || kernel_w <= 0) {
        throw std::invalid_argument("ConvLayer " + name + ": non-positive dimension");
    }
    const auto expected = static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
    if (weights.size() != expected) {
        throw std::invalid_argument("ConvLayer " + name + ": weight count mismatch");
    }
    if (biases.size() != static_cast<std::size_t>(out_channels)) {
        throw std::invalid_argument("ConvLayer " + name + ": bias count mismatch");
    }
}

namespace {

// Output channels computed together; each output pixel still accumulates in
// (in_channel, ky, kx) order regardless of blocking or thread count.
constexpr int kChannelBlock = 8;

Tensor3 zero_pad(const Tensor3& input, int padding) {
    if (padding == 0) {
        return input;
    }
    const int hp = input.height() + 2 * padding;
    const int wp = input.width() + 2 * padding;
    Tensor3 padded(input.channels(), hp, wp);
    for (int c = 0; c < input.channels(); ++c) {
        for (int y = 0; y < input.height(); ++y) {
            const float* src = input.row(c, y);
            std::copy(src, src + input.width(), padded.row(c, y + padding) + padding);
        }
    }
    return padded;
}

}  // namespace

Tensor3 conv2d(const Tensor3& input, const ConvLayer& layer, int padding) {
    layer.validate();
    if (layer.in_channels != input.channels()) {
        throw std::invalid_argument("conv2d: layer " + layer.name + " expects " +
                                    std::to_string(layer.in_channels) + " input channels, got " +
                                    std::to_string(input.channels()));
    }
    if (padding < 0) {
        throw std::invalid_argument("conv2d: negative padding");
    }
    const Tensor3 padded = zero_pad(input, padding);
    const int out_h = padded.height() - layer.kernel_h + 1;
    const int out_w = padded.width() - layer.kernel_w + 1;
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("conv2d: kernel larger than padded input");
    }

    const int kh = layer.kernel_h;
    const int kw = layer.kernel_w;
    const int in_c = layer.in_channels;
    const int out_c = layer.out_channels;
    const std::size_t kernel_area = static_cast<std::size_t>(kh) * kw;
    const std::size_t filter_size = kernel_area * in_c;
    const int blocks = (out_c + kChannelBlock - 1) / kChannelBlock;

    Tensor3 output(out_c, out_h, out_w);

#pragma omp parallel
    {
        std::vector<float> acc(static_cast<std::size_t>(kChannelBlock) * out_w);
#pragma omp for schedule(static)
        for (int block = 0; block < blocks; ++block) {
            const int oc0 = block * kChannelBlock;
            const int count = std::min(kChannelBlock, out_c - oc0);
            for (int y = 0; y < out_h; ++y) {
                std::fill(acc.begin(), acc.end(), 0.0f);
                for (int ic = 0; ic < in_c; ++ic) {
                    for (int ky = 0; ky < kh; ++ky) {
                        const float* row = padded.row(ic, y + ky);
                        for (int kx = 0; kx < kw; ++kx) {
                            const float* src = row + kx;
                            for (int o = 0; o < count; ++o) {
                                const float w = layer.weights[(oc0 + o) * filter_size +
                                                              ic * kernel_area + ky * kw + kx];
                                float* dst = acc.data() + static_cast<std::size_t>(o) * out_w;
                                for (int x = 0; x < out_w; ++x) {
                                    dst[x] += w * src[x];
                                }
                            }
                        }
                    }
                }
                for (int o = 0; o < count; ++o) {
                    const float bias = layer.biases[oc0 + o];
                    const float* src = acc.data() + static_cast<std::size_t>(o) * out_w;
                    float* dst = output.row(oc0 + o, y);
                    for (int x = 0; x < out_w; ++x) {
                        dst[x] = src[x] + bias;
                    }
                }
            }
        }
    }
    return output;
}

void relu_inplace(Tensor3& tensor) {
    for (float& v : tensor.data()) {
        v = v > 0.0f ? v : 0.0f;
    }
}

Tensor3 relu(const Tensor3& input) {
    Tensor3 out = input;
    relu_inplace(out);
    return out;
}

Tensor3 maxpool2(const Tensor3& input) {
    if (input.height() % 2 != 0 || input.width() % 2 != 0) {
        throw std::invalid_argument("maxpool2: spatial dims must be even, got " +
                                    std::to_string(input.height()) + "x" +
                                    std::to_string(input.width()));
    }
    const int oh = input.height() / 2;
    const int ow = input.width() / 2;
    Tensor3 out(input.channels(), oh, ow);
    for (int c = 0; c < input.channels(); ++c) {
        for (int y = 0; y < oh; ++y) {
            const float* r0 = input.row(c, 2 * y);
            const float* r1 = r0 + input.width();
            float* dst = out.row(c, y);
            for (int x = 0; x < ow; ++x) {
                dst[x] = std::max(std::max(r0[2 * x], r0[2 * x + 1]),
                                  std::max(r1[2 * x], r1[2 * x + 1]));
            }
        }
    }
    return out;
}

namespace {

struct Tap {
    int i0;
    int i1;
    float t;
};

std::vector<Tap> corner_aligned_taps(int in, int out) {
    std::vector<Tap> taps(out);
    const double scale = out > 1 ? static_cast<double>(in - 1) / (out - 1) : 0.0;
    for (int i = 0; i < out; ++i) {
        const double src = i * scale;
        int i0 = static_cast<int>(std::floor(src));
        i0 = std::clamp(i0, 0, in - 1);
        const int i1 = std::min(i0 + 1, in - 1);
        taps[i] = {i0, i1, static_cast<float>(src - i0)};
    }
    return taps;
}

}  // namespace

Tensor3 bilinear_resize(const Tensor3& input, int new_h, int new_w) {
    if (new_h < 1 || new_w < 1) {
        throw std::invalid_argument("bilinear_resize: target dims must be >= 1");
    }
    if (input.height() < 1 || input.width() < 1) {
        throw std::invalid_argument("bilinear_resize: empty input");
    }
    if (new_h == input.height() && new_w == input.width()) {
        return input;
    }
    const auto ys = corner_aligned_taps(input.height(), new_h);
    const auto xs = corner_aligned_taps(input.width(), new_w);
    Tensor3 out(input.channels(), new_h, new_w);
    for (int c = 0; c < input.channels(); ++c) {
        for (int y = 0; y < new_h; ++y) {
            const Tap& ty = ys[y];
            for (int x = 0; x < new_w; ++x) {
                const Tap& tx = xs[x];
                const float top = input.at(c, ty.i0, tx.i0) +
                                  tx.t * (input.at(c, ty.i0, tx.i1) - input.at(c, ty.i0, tx.i0));
                const float bottom = input.at(c, ty.i1, tx.i0) +
                                     tx.t * (input.at(c, ty.i1, tx.i1) - input.at(c, ty.i1, tx.i0));
                out.at(c, y, x) = top + ty.t * (bottom - top);
            }
        }
    }
    return out;
}

}  // namespace nbb
