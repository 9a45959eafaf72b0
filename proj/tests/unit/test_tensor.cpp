#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nbb/parallel.hpp"
#include "nbb/tensor.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace nbb {
namespace {

ConvLayer random_layer(int out, int in, int k, std::mt19937& rng, bool zero_bias = false) {
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    ConvLayer layer{"test", out, in, k, k, {}, {}};
    layer.weights.resize(static_cast<std::size_t>(out) * in * k * k);
    for (float& w : layer.weights) {
        w = d(rng);
    }
    layer.biases.assign(out, 0.0f);
    if (!zero_bias) {
        for (float& b : layer.biases) {
            b = d(rng);
        }
    }
    return layer;
}

void expect_near(const Tensor3& a, const Tensor3& b, double tol) {
    ASSERT_EQ(a.channels(), b.channels());
    ASSERT_EQ(a.height(), b.height());
    ASSERT_EQ(a.width(), b.width());
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_NEAR(a.data()[i], b.data()[i], tol) << "at flat index " << i;
    }
}

TEST(Conv2d, OneByOneScalesAndAddsBias) {
    const Tensor3 in(1, 3, 3, 1.0f);
    const ConvLayer layer{"s", 1, 1, 1, 1, {2.0f}, {0.5f}};
    const Tensor3 out = conv2d(in, layer, 0);
    EXPECT_EQ(out, Tensor3(1, 3, 3, 2.5f));
}

TEST(Conv2d, IdentityKernelIsIdentity) {
    std::mt19937 rng(1);
    for (int channels : {1, 3}) {
        const Tensor3 in = testing::random_tensor(channels, 5, 7, rng);
        ConvLayer layer{"id", channels, channels, 3, 3, {}, std::vector<float>(channels, 0.0f)};
        layer.weights.assign(static_cast<std::size_t>(channels) * channels * 9, 0.0f);
        for (int c = 0; c < channels; ++c) {
            layer.weights[(static_cast<std::size_t>(c) * channels + c) * 9 + 4] = 1.0f;
        }
        EXPECT_EQ(conv2d(in, layer, 1), in);
    }
}

TEST(Conv2d, MatchesQuadrupleLoopOracle) {
    std::mt19937 rng(2);
    const Tensor3 in = testing::random_tensor(2, 4, 4, rng);
    const ConvLayer layer = random_layer(3, 2, 3, rng);
    const Tensor3 out = conv2d(in, layer, 1);
    EXPECT_EQ(out.channels(), 3);
    EXPECT_EQ(out.height(), 4);
    EXPECT_EQ(out.width(), 4);
    expect_near(out, testing::conv_reference(in, layer, 1), 1e-5);
}

TEST(Conv2d, MoreOutputChannelsThanOneBlock) {
    std::mt19937 rng(3);
    const Tensor3 in = testing::random_tensor(3, 6, 5, rng);
    const ConvLayer layer = random_layer(19, 3, 3, rng);
    expect_near(conv2d(in, layer, 1), testing::conv_reference(in, layer, 1), 1e-5);
}

TEST(Conv2d, ChannelMismatchThrows) {
    std::mt19937 rng(4);
    const Tensor3 in = testing::random_tensor(2, 4, 4, rng);
    const ConvLayer layer = random_layer(1, 3, 3, rng);
    EXPECT_THROW(conv2d(in, layer, 1), std::invalid_argument);
}

TEST(Conv2d, LinearWithZeroBias) {
    std::mt19937 rng(5);
    const Tensor3 x = testing::random_tensor(3, 6, 6, rng);
    const Tensor3 y = testing::random_tensor(3, 6, 6, rng);
    const ConvLayer layer = random_layer(4, 3, 3, rng, /*zero_bias=*/true);
    const float a = 0.7f;
    const float b = -1.3f;
    Tensor3 mix(3, 6, 6);
    for (std::size_t i = 0; i < mix.size(); ++i) {
        mix.data()[i] = a * x.data()[i] + b * y.data()[i];
    }
    const Tensor3 lhs = conv2d(mix, layer, 1);
    const Tensor3 cx = conv2d(x, layer, 1);
    const Tensor3 cy = conv2d(y, layer, 1);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        const double rhs = a * cx.data()[i] + b * cy.data()[i];
        EXPECT_NEAR(lhs.data()[i], rhs, 1e-5 * std::max(1.0, std::abs(rhs)));
    }
}

TEST(Conv2d, ThreadCountDoesNotChangeBits) {
    std::mt19937 rng(6);
    const Tensor3 in = testing::random_tensor(16, 12, 12, rng);
    const ConvLayer layer = random_layer(40, 16, 3, rng);
    set_num_threads(1);
    const Tensor3 one = conv2d(in, layer, 1);
    set_num_threads(4);
    const Tensor3 four = conv2d(in, layer, 1);
    set_num_threads(0);
    EXPECT_EQ(one, four);
    EXPECT_EQ(conv2d(in, layer, 1), one);
}

TEST(Relu, Definition) {
    const Tensor3 in(1, 1, 3, std::vector<float>{-1.0f, 0.0f, 2.0f});
    EXPECT_EQ(relu(in), Tensor3(1, 1, 3, std::vector<float>{0.0f, 0.0f, 2.0f}));
}

TEST(Relu, AllNegativeAndFixpoint) {
    std::mt19937 rng(7);
    const Tensor3 neg = testing::random_tensor(2, 3, 3, rng, -5.0f, -0.1f);
    EXPECT_EQ(relu(neg), Tensor3(2, 3, 3, 0.0f));
    const Tensor3 pos = testing::random_tensor(2, 3, 3, rng, 0.0f, 5.0f);
    EXPECT_EQ(relu(pos), pos);
}

TEST(MaxPool2, ConstantStaysConstant) {
    EXPECT_EQ(maxpool2(Tensor3(2, 4, 6, 3.5f)), Tensor3(2, 2, 3, 3.5f));
}

TEST(MaxPool2, SingleWindow) {
    const Tensor3 in(1, 2, 2, std::vector<float>{1, 2, 3, 4});
    EXPECT_EQ(maxpool2(in), Tensor3(1, 1, 1, 4.0f));
}

TEST(MaxPool2, MatchesWindowScanOracle) {
    std::mt19937 rng(8);
    const Tensor3 in = testing::random_tensor(4, 8, 8, rng);
    EXPECT_EQ(maxpool2(in), testing::maxpool_reference(in));
}

TEST(MaxPool2, OddDimensionThrows) {
    EXPECT_THROW(maxpool2(Tensor3(1, 3, 4)), std::invalid_argument);
    EXPECT_THROW(maxpool2(Tensor3(1, 4, 5)), std::invalid_argument);
}

TEST(MaxPool2, CommutesWithRelu) {
    std::mt19937 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor3 x = testing::random_tensor(3, 6, 8, rng);
        EXPECT_EQ(maxpool2(relu(x)), relu(maxpool2(x)));
    }
}

TEST(BilinearResize, SameSizeIsIdentity) {
    std::mt19937 rng(10);
    const Tensor3 in = testing::random_tensor(2, 5, 7, rng);
    EXPECT_EQ(bilinear_resize(in, 5, 7), in);
}

TEST(BilinearResize, ConstantStaysConstant) {
    const Tensor3 in(3, 4, 5, 0.25f);
    for (auto [h, w] : {std::pair{1, 1}, std::pair{7, 3}, std::pair{16, 16}}) {
        EXPECT_EQ(bilinear_resize(in, h, w), Tensor3(3, h, w, 0.25f));
    }
}

TEST(BilinearResize, LinearMidpoint) {
    const Tensor3 in(1, 2, 2, std::vector<float>{0, 2, 0, 2});
    const Tensor3 out = bilinear_resize(in, 2, 3);
    for (int y = 0; y < 2; ++y) {
        EXPECT_FLOAT_EQ(out.at(0, y, 0), 0.0f);
        EXPECT_FLOAT_EQ(out.at(0, y, 1), 1.0f);
        EXPECT_FLOAT_EQ(out.at(0, y, 2), 2.0f);
    }
}

TEST(BilinearResize, CornersAreExact) {
    std::mt19937 rng(11);
    const Tensor3 in = testing::random_tensor(1, 6, 9, rng);
    const Tensor3 out = bilinear_resize(in, 13, 4);
    EXPECT_EQ(out.at(0, 0, 0), in.at(0, 0, 0));
    EXPECT_EQ(out.at(0, 12, 3), in.at(0, 5, 8));
    EXPECT_EQ(out.at(0, 0, 3), in.at(0, 0, 8));
    EXPECT_EQ(out.at(0, 12, 0), in.at(0, 5, 0));
}

TEST(BilinearResize, ZeroTargetThrows) {
    EXPECT_THROW(bilinear_resize(Tensor3(1, 2, 2), 0, 2), std::invalid_argument);
    EXPECT_THROW(bilinear_resize(Tensor3(1, 2, 2), 2, 0), std::invalid_argument);
}

TEST(Tensor3, RejectsWrongDataLength) {
    EXPECT_THROW(Tensor3(2, 2, 2, std::vector<float>(7)), std::invalid_argument);
}

}  // namespace
}  // namespace nbb
