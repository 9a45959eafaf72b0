#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <unistd.h>

#include "nbb/backbone.hpp"
#include "synthetic.hpp"

namespace nbb {
namespace {

namespace fs = std::filesystem;

const BackboneWeights& shared_weights() {
    static const BackboneWeights w = random_weights(99);
    return w;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("nbb_test_" + std::to_string(::getpid()) + "_" + name);
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void dump(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

class WeightFile : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        path_ = new fs::path(temp_file("weights.nbbw"));
        save_weights(shared_weights(), *path_);
    }
    static void TearDownTestSuite() {
        fs::remove(*path_);
        delete path_;
    }
    static fs::path* path_;
};
fs::path* WeightFile::path_ = nullptr;

TEST_F(WeightFile, LoadsThirteenLayers) {
    const BackboneWeights w = load_weights(*path_);
    ASSERT_EQ(w.layers.size(), 13u);
    EXPECT_EQ(w.layers[0].name, "conv1_1");
    EXPECT_EQ(w.layers[0].out_channels, 64);
    EXPECT_EQ(w.layers[0].in_channels, 3);
    EXPECT_EQ(w.layers[0].kernel_h, 3);
    EXPECT_EQ(w.layers[0].kernel_w, 3);
    EXPECT_EQ(w.layers[12].name, "conv5_1");
    EXPECT_EQ(w.normalization, Normalization::kImageNetMeanStd);
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        EXPECT_EQ(w.layers[i].weights, shared_weights().layers[i].weights);
        EXPECT_EQ(w.layers[i].biases, shared_weights().layers[i].biases);
    }
}

TEST_F(WeightFile, BadMagicIsFormatError) {
    auto bytes = slurp(*path_);
    std::copy_n("XXXX", 4, bytes.begin());
    const fs::path bad = temp_file("magic.nbbw");
    dump(bad, bytes);
    EXPECT_THROW(load_weights(bad), WeightFormatError);
    fs::remove(bad);
}

TEST_F(WeightFile, BadVersionIsFormatError) {
    auto bytes = slurp(*path_);
    bytes[4] = 2;
    const fs::path bad = temp_file("version.nbbw");
    dump(bad, bytes);
    EXPECT_THROW(load_weights(bad), WeightFormatError);
    fs::remove(bad);
}

TEST_F(WeightFile, TruncationNamesTheLayer) {
    auto bytes = slurp(*path_);
    // Header (13 bytes) + conv1_1 record header (2 + 7 + 16) + half its weights.
    bytes.resize(13 + 25 + 64 * 27 * 2);
    const fs::path bad = temp_file("trunc.nbbw");
    dump(bad, bytes);
    try {
        load_weights(bad);
        FAIL() << "expected a truncation error";
    } catch (const WeightTruncationError& e) {
        EXPECT_NE(std::string(e.what()).find("conv1_1"), std::string::npos) << e.what();
    }
    fs::remove(bad);
}

TEST_F(WeightFile, TruncationLaterInTheFileNamesThatLayer) {
    auto bytes = slurp(*path_);
    bytes.resize(bytes.size() - 100);
    const fs::path bad = temp_file("trunc2.nbbw");
    dump(bad, bytes);
    try {
        load_weights(bad);
        FAIL() << "expected a truncation error";
    } catch (const WeightTruncationError& e) {
        EXPECT_NE(std::string(e.what()).find("conv5_1"), std::string::npos) << e.what();
    }
    fs::remove(bad);
}

TEST_F(WeightFile, RenamedLayerIsSchemaError) {
    auto bytes = slurp(*path_);
    bytes[13 + 2 + 6] = '9';  // conv1_1 -> conv1_9
    const fs::path bad = temp_file("schema.nbbw");
    dump(bad, bytes);
    EXPECT_THROW(load_weights(bad), WeightSchemaError);
    fs::remove(bad);
}

TEST(Weights, SaveRejectsWrongShape) {
    BackboneWeights w = shared_weights();
    w.layers[3].out_channels = 64;
    EXPECT_THROW(save_weights(w, temp_file("never.nbbw")), WeightSchemaError);
}

TEST(Preprocess, UniformGrayFollowsFormula) {
    const RgbImage gray(40, 30, 128);
    const Tensor3 t = preprocess(gray, 32);
    ASSERT_EQ(t.channels(), 3);
    for (int c = 0; c < 3; ++c) {
        const float expected = (128.0f / 255.0f - kImageNetMean[c]) / kImageNetStd[c];
        for (float v : t.plane(c)) {
            EXPECT_NEAR(v, expected, 1e-6);
        }
    }
}

TEST(Preprocess, ShapeIsThreeBySide) {
    const RgbImage img = testing::textured_scene(300, 170, 3);
    const Tensor3 t = preprocess(img, 224);
    EXPECT_EQ(t.channels(), 3);
    EXPECT_EQ(t.height(), 224);
    EXPECT_EQ(t.width(), 224);
}

TEST(Preprocess, RejectsBadSideAndEmptyImage) {
    const RgbImage img = testing::textured_scene(32, 32, 3);
    EXPECT_THROW(preprocess(img, 15), std::invalid_argument);
    EXPECT_THROW(preprocess(img, 0), std::invalid_argument);
    EXPECT_THROW(preprocess(RgbImage{}, 224), std::invalid_argument);
}

// Scalar-loop reference for the normalized activation map.
Tensor3 activation_reference(const Tensor3& f) {
    std::vector<double> a(f.plane_size());
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            double s = 0.0;
            for (int c = 0; c < f.channels(); ++c) {
                s += static_cast<double>(f.at(c, y, x)) * f.at(c, y, x);
            }
            a[static_cast<std::size_t>(y) * f.width() + x] = std::sqrt(s);
        }
    }
    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
    Tensor3 h(1, f.height(), f.width());
    for (std::size_t i = 0; i < a.size(); ++i) {
        h.data()[i] = *hi > *lo ? static_cast<float>((a[i] - *lo) / (*hi - *lo)) : 0.0f;
    }
    return h;
}

TEST(NormalizeActivations, NormsZeroFiveTen) {
    // Channel vectors (0,0), (3,4), (6,8) have norms 0, 5, 10.
    const Tensor3 f(2, 1, 3, std::vector<float>{0, 3, 6, 0, 4, 8});
    const Tensor3 h = normalize_activations(f);
    EXPECT_FLOAT_EQ(h.at(0, 0, 0), 0.0f);
    EXPECT_FLOAT_EQ(h.at(0, 0, 1), 0.5f);
    EXPECT_FLOAT_EQ(h.at(0, 0, 2), 1.0f);
}

TEST(NormalizeActivations, ConstantMapIsAllZero) {
    EXPECT_EQ(normalize_activations(Tensor3(4, 3, 3, 2.0f)), Tensor3(1, 3, 3, 0.0f));
}

TEST(NormalizeActivations, MatchesScalarOracle) {
    std::mt19937 rng(12);
    const Tensor3 f = testing::random_tensor(8, 5, 5, rng);
    const Tensor3 h = normalize_activations(f);
    const Tensor3 ref = activation_reference(f);
    float lo = 1.0f;
    float hi = 0.0f;
    for (std::size_t i = 0; i < h.size(); ++i) {
        EXPECT_NEAR(h.data()[i], ref.data()[i], 1e-6);
        lo = std::min(lo, h.data()[i]);
        hi = std::max(hi, h.data()[i]);
    }
    EXPECT_EQ(lo, 0.0f);
    EXPECT_EQ(hi, 1.0f);
}

TEST(NormalizeActivations, InvariantToPositiveScaling) {
    std::mt19937 rng(13);
    const Tensor3 f = testing::random_tensor(6, 7, 4, rng);
    const Tensor3 h = normalize_activations(f);
    for (float scale : {0.5f, 3.0f, 100.0f}) {
        Tensor3 g = f;
        for (float& v : g.data()) {
            v *= scale;
        }
        const Tensor3 hs = normalize_activations(g);
        for (std::size_t i = 0; i < h.size(); ++i) {
            EXPECT_NEAR(hs.data()[i], h.data()[i], 1e-5);
        }
    }
}

class PyramidShapes : public ::testing::TestWithParam<int> {};

TEST_P(PyramidShapes, HalvingLaw) {
    const int side = GetParam();
    const FeaturePyramid p =
        extract_pyramid(preprocess(testing::textured_scene(side, side, 5), side), shared_weights());
    for (int level = 1; level <= kPyramidLevels; ++level) {
        const FeatureLevel& l = p.level(level);
        EXPECT_EQ(l.features.channels(), kLevelChannels[static_cast<std::size_t>(level - 1)]);
        EXPECT_EQ(l.features.height(), side >> (level - 1));
        EXPECT_EQ(l.features.width(), side >> (level - 1));
        EXPECT_EQ(l.activation.channels(), 1);
        EXPECT_EQ(l.activation.height(), side >> (level - 1));
        for (float v : l.activation.data()) {
            ASSERT_GE(v, 0.0f);
            ASSERT_LE(v, 1.0f);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Sides, PyramidShapes, ::testing::Values(32, 64, 96, 224));

TEST(ExtractPyramid, ZeroWeightsGiveConstantsAndZeroActivation) {
    BackboneWeights w = shared_weights();
    for (ConvLayer& layer : w.layers) {
        std::fill(layer.weights.begin(), layer.weights.end(), 0.0f);
        for (std::size_t i = 0; i < layer.biases.size(); ++i) {
            layer.biases[i] = 0.01f * static_cast<float>(i % 7);
        }
    }
    const FeaturePyramid p = extract_pyramid(preprocess(testing::textured_scene(32, 32, 6), 32), w);
    for (int level = 1; level <= kPyramidLevels; ++level) {
        const Tensor3& f = p.level(level).features;
        for (int c = 0; c < f.channels(); ++c) {
            for (float v : f.plane(c)) {
                ASSERT_EQ(v, f.plane(c)[0]);
            }
        }
        EXPECT_EQ(p.level(level).activation, Tensor3(1, f.height(), f.width(), 0.0f));
    }
}

TEST(ExtractPyramid, DeterministicAcrossRuns) {
    const Tensor3 in = preprocess(testing::textured_scene(64, 64, 7), 64);
    const FeaturePyramid a = extract_pyramid(in, shared_weights());
    const FeaturePyramid b = extract_pyramid(in, shared_weights());
    for (int level = 1; level <= kPyramidLevels; ++level) {
        EXPECT_EQ(a.level(level).features, b.level(level).features);
        EXPECT_EQ(a.level(level).activation, b.level(level).activation);
    }
}

TEST(ExtractPyramid, RejectsNonSquareOrBadSide) {
    EXPECT_THROW(extract_pyramid(Tensor3(3, 32, 48), shared_weights()), std::invalid_argument);
    EXPECT_THROW(extract_pyramid(Tensor3(3, 24, 24), shared_weights()), std::invalid_argument);
    EXPECT_THROW(extract_pyramid(Tensor3(1, 32, 32), shared_weights()), std::invalid_argument);
}

TEST(BuildPyramid, RecordsOriginalSize) {
    const FeaturePyramid p = build_pyramid(testing::textured_scene(50, 40, 8), shared_weights(), 32);
    EXPECT_EQ(p.input_width, 32);
    EXPECT_EQ(p.input_height, 32);
    EXPECT_EQ(p.original_width, 50);
    EXPECT_EQ(p.original_height, 40);
}

}  // namespace
}  // namespace nbb
