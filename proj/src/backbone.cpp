#include "nbb/backbone.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

namespace nbb {

static_assert(std::endian::native == std::endian::little,
              "NBBW reader assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'B', 'B', 'W'};
constexpr std::uint32_t kVersion = 1;

class Reader {
public:
    explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

    template <typename T>
    T read(const std::string& what) {
        T value;
        take(&value, sizeof(T), what);
        return value;
    }

    void take(void* dst, std::size_t n, const std::string& what) {
        if (bytes_.size() - pos_ < n) {
            throw WeightTruncationError("NBBW file truncated while reading " + what);
        }
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    bool at_end() const { return pos_ == bytes_.size(); }

private:
    std::vector<char> bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

void BackboneWeights::validate() const {
    if (layers.size() != kVggLayers.size()) {
        throw WeightSchemaError("expected " + std::to_string(kVggLayers.size()) + " layers, got " +
                                std::to_string(layers.size()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const ConvLayer& layer = layers[i];
        const LayerSpec& spec = kVggLayers[i];
        if (layer.name != spec.name) {
            throw WeightSchemaError("layer " + std::to_string(i) + " is named '" + layer.name +
                                    "', expected '" + std::string(spec.name) + "'");
        }
        if (layer.out_channels != spec.out_channels || layer.in_channels != spec.in_channels ||
            layer.kernel_h != 3 || layer.kernel_w != 3) {
            throw WeightSchemaError("layer " + layer.name + " has shape (" +
                                    std::to_string(layer.out_channels) + "," +
                                    std::to_string(layer.in_channels) + "," +
                                    std::to_string(layer.kernel_h) + "," +
                                    std::to_string(layer.kernel_w) + ")");
        }
        try {
            layer.validate();
        } catch (const std::invalid_argument& e) {
            throw WeightSchemaError(e.what());
        }
    }
}

BackboneWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open weight file " + path.string());
    }
    Reader reader(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

    char magic[4];
    try {
        reader.take(magic, 4, "magic");
    } catch (const WeightTruncationError&) {
        throw WeightFormatError("not an NBBW file: " + path.string());
    }
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw WeightFormatError("bad magic in " + path.string());
    }
    const auto version = reader.read<std::uint32_t>("version");
    if (version != kVersion) {
        throw WeightFormatError("unsupported NBBW version " + std::to_string(version));
    }
    const auto tag = reader.read<std::uint8_t>("normalization tag");
    if (tag != static_cast<std::uint8_t>(Normalization::kImageNetMeanStd)) {
        throw WeightFormatError("unknown normalization tag " + std::to_string(tag));
    }
    const auto count = reader.read<std::uint32_t>("layer count");
    if (count != kVggLayers.size()) {
        throw WeightSchemaError("expected 13 layers, file declares " + std::to_string(count));
    }

    BackboneWeights weights;
    weights.normalization = static_cast<Normalization>(tag);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string expected(kVggLayers[i].name);
        ConvLayer layer;
        const auto name_len = reader.read<std::uint16_t>(expected + " name length");
        layer.name.resize(name_len);
        reader.take(layer.name.data(), name_len, expected + " name");
        if (layer.name != expected) {
            throw WeightSchemaError("layer " + std::to_string(i) + " is named '" + layer.name +
                                    "', expected '" + expected + "'");
        }
        layer.out_channels = static_cast<int>(reader.read<std::uint32_t>(layer.name + " shape"));
        layer.in_channels = static_cast<int>(reader.read<std::uint32_t>(layer.name + " shape"));
        layer.kernel_h = static_cast<int>(reader.read<std::uint32_t>(layer.name + " shape"));
        layer.kernel_w = static_cast<int>(reader.read<std::uint32_t>(layer.name + " shape"));
        if (layer.out_channels != kVggLayers[i].out_channels ||
            layer.in_channels != kVggLayers[i].in_channels || layer.kernel_h != 3 ||
            layer.kernel_w != 3) {
            throw WeightSchemaError("layer " + layer.name + " has unexpected shape");
        }
        layer.weights.resize(static_cast<std::size_t>(layer.out_channels) * layer.in_channels *
                             layer.kernel_h * layer.kernel_w);
        reader.take(layer.weights.data(), layer.weights.size() * sizeof(float),
                    layer.name + " weights");
        layer.biases.resize(layer.out_channels);
        reader.take(layer.biases.data(), layer.biases.size() * sizeof(float),
                    layer.name + " biases");
        weights.layers.push_back(std::move(layer));
    }
    if (!reader.at_end()) {
        throw WeightFormatError("trailing bytes after last layer in " + path.string());
    }
    return weights;
}

void save_weights(const BackboneWeights& weights, const std::filesystem::path& path) {
    weights.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write weight file " + path.string());
    }
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(weights.normalization));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(weights.layers.size()));
    for (const ConvLayer& layer : weights.layers) {
        put<std::uint16_t>(out, static_cast<std::uint16_t>(layer.name.size()));
        out.write(layer.name.data(), static_cast<std::streamsize>(layer.name.size()));
        put<std::uint32_t>(out, layer.out_channels);
        put<std::uint32_t>(out, layer.in_channels);
        put<std::uint32_t>(out, layer.kernel_h);
        put<std::uint32_t>(out, layer.kernel_w);
        out.write(reinterpret_cast<const char*>(layer.weights.data()),
                  static_cast<std::streamsize>(layer.weights.size() * sizeof(float)));
        out.write(reinterpret_cast<const char*>(layer.biases.data()),
                  static_cast<std::streamsize>(layer.biases.size() * sizeof(float)));
    }
    if (!out) {
        throw std::runtime_error("failed writing weight file " + path.string());
    }
}

BackboneWeights random_weights(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> normal(0.0f, 1.0f);
    BackboneWeights weights;
    for (const LayerSpec& spec : kVggLayers) {
        ConvLayer layer;
        layer.name = std::string(spec.name);
        layer.out_channels = spec.out_channels;
        layer.in_channels = spec.in_channels;
        layer.kernel_h = 3;
        layer.kernel_w = 3;
        const float stddev = std::sqrt(2.0f / static_cast<float>(spec.in_channels * 9));
        layer.weights.resize(static_cast<std::size_t>(spec.out_channels) * spec.in_channels * 9);
        for (float& w : layer.weights) {
            w = stddev * normal(rng);
        }
        layer.biases.resize(spec.out_channels);
        for (float& b : layer.biases) {
            b = 0.01f * normal(rng);
        }
        weights.layers.push_back(std::move(layer));
    }
    return weights;
}

Tensor3 preprocess(const RgbImage& image, int side, Normalization normalization) {
    if (image.empty()) {
        throw std::invalid_argument("preprocess: empty image");
    }
    if (side < 16 || side % 16 != 0) {
        throw std::invalid_argument("preprocess: side must be a positive multiple of 16, got " +
                                    std::to_string(side));
    }
    if (normalization != Normalization::kImageNetMeanStd) {
        throw std::invalid_argument("preprocess: unsupported normalization");
    }
    Tensor3 unit(3, image.height, image.width);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                unit.at(c, y, x) = static_cast<float>(image.at(x, y, c)) / 255.0f;
            }
        }
    }
    Tensor3 resized = bilinear_resize(unit, side, side);
    for (int c = 0; c < 3; ++c) {
        for (float& v : resized.plane(c)) {
            v = (v - kImageNetMean[c]) / kImageNetStd[c];
        }
    }
    return resized;
}

Tensor3 normalize_activations(const Tensor3& features) {
    if (features.channels() < 1) {
        throw std::invalid_argument("normalize_activations: need at least one channel");
    }
    const std::size_t n = features.plane_size();
    std::vector<double> norms(n, 0.0);
    for (int c = 0; c < features.channels(); ++c) {
        const auto plane = features.plane(c);
        for (std::size_t i = 0; i < n; ++i) {
            norms[i] += static_cast<double>(plane[i]) * plane[i];
        }
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double& v : norms) {
        v = std::sqrt(v);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor3 out(1, features.height(), features.width());
    if (n == 0 || !(hi > lo)) {
        return out;
    }
    auto plane = out.plane(0);
    const double range = hi - lo;
    for (std::size_t i = 0; i < n; ++i) {
        plane[i] = static_cast<float>(std::clamp((norms[i] - lo) / range, 0.0, 1.0));
    }
    return out;
}

FeaturePyramid extract_pyramid(const Tensor3& input, const BackboneWeights& weights) {
    weights.validate();
    if (input.channels() != 3 || input.height() != input.width() || input.height() < 16 ||
        input.height() % 16 != 0) {
        throw std::invalid_argument("extract_pyramid: input must be 3 x S x S with S a multiple of 16");
    }
    FeaturePyramid pyramid;
    pyramid.input_height = pyramid.original_height = input.height();
    pyramid.input_width = pyramid.original_width = input.width();

    auto conv = [&](const Tensor3& x, std::size_t index) {
        Tensor3 y = conv2d(x, weights.layers[index], 1);
        relu_inplace(y);
        return y;
    };
    auto tap = [&](int level, const Tensor3& features) {
        FeatureLevel& slot = pyramid.levels[static_cast<std::size_t>(level - 1)];
        slot.features = features;
        slot.activation = normalize_activations(features);
    };

    // Layer indices into kVggLayers; each block opens with the tapped relu{l}_1.
    constexpr std::array<std::array<std::size_t, 2>, kPyramidLevels> blocks{{
        {0, 2}, {2, 4}, {4, 8}, {8, 12}, {12, 13}}};

    Tensor3 x = input;
    for (int level = 1; level <= kPyramidLevels; ++level) {
        const auto [first, last] = blocks[static_cast<std::size_t>(level - 1)];
        if (level > 1) {
            x = maxpool2(x);
        }
        x = conv(x, first);
        tap(level, x);
        if (level == kPyramidLevels) {
            break;
        }
        for (std::size_t i = first + 1; i < last; ++i) {
            x = conv(x, i);
        }
    }
    return pyramid;
}

FeaturePyramid build_pyramid(const RgbImage& image, const BackboneWeights& weights, int side) {
    FeaturePyramid pyramid = extract_pyramid(preprocess(image, side, weights.normalization), weights);
    pyramid.original_height = image.height;
    pyramid.original_width = image.width;
    return pyramid;
}

}  // namespace nbb
