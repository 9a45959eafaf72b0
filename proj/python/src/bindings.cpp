#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "nbb/backbone.hpp"
#include "nbb/documents.hpp"
#include "nbb/engine.hpp"
#include "nbb/mls.hpp"
#include "nbb/parallel.hpp"
#include "nbb/select.hpp"

namespace py = pybind11;
using namespace nbb;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Tensor3 to_tensor(const FloatArray& a) {
    if (a.ndim() != 3) {
        throw std::invalid_argument("expected a (channels, height, width) array");
    }
    std::vector<float> data(a.data(), a.data() + a.size());
    return Tensor3(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                   std::move(data));
}

py::array_t<float> to_numpy(const Tensor3& t) {
    py::array_t<float> out({t.channels(), t.height(), t.width()});
    std::memcpy(out.mutable_data(), t.data().data(), t.size() * sizeof(float));
    return out;
}

RgbImage to_image(const ByteArray& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) {
        throw std::invalid_argument("expected an (height, width, 3) uint8 array");
    }
    RgbImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::memcpy(img.pixels.data(), a.data(), img.pixels.size());
    return img;
}

py::array_t<std::uint8_t> to_numpy(const RgbImage& img) {
    py::array_t<std::uint8_t> out({img.height, img.width, 3});
    std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
    return out;
}

ImageSize size_of(const ByteArray& a) { return {static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))}; }

}  // namespace

PYBIND11_MODULE(_nbb, m) {
    m.doc() = "Neural best-buddies sparse correspondence";

    py::register_exception<WeightError>(m, "WeightError", PyExc_ValueError);
    py::register_exception<DocumentError>(m, "DocumentError", PyExc_ValueError);

    py::class_<Coord>(m, "Coord")
        .def(py::init<int, int>(), py::arg("x"), py::arg("y"))
        .def_readwrite("x", &Coord::x)
        .def_readwrite("y", &Coord::y)
        .def("__eq__", [](const Coord& a, const Coord& b) { return a == b; })
        .def("__iter__", [](const Coord& c) { return py::iter(py::make_tuple(c.x, c.y)); })
        .def("__repr__", [](const Coord& c) { return "Coord(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")"; });

    py::class_<PixelPoint>(m, "Point")
        .def(py::init<double, double>(), py::arg("x"), py::arg("y"))
        .def(py::init([](const py::tuple& t) {
            if (t.size() != 2) throw std::invalid_argument("point must be (x, y)");
            return PixelPoint{t[0].cast<double>(), t[1].cast<double>()};
        }))
        .def_readwrite("x", &PixelPoint::x)
        .def_readwrite("y", &PixelPoint::y)
        .def("__eq__", [](const PixelPoint& a, const PixelPoint& b) { return a == b; })
        .def("__iter__", [](const PixelPoint& p) { return py::iter(py::make_tuple(p.x, p.y)); })
        .def("__repr__", [](const PixelPoint& p) {
            return "Point(" + py::repr(py::float_(p.x)).cast<std::string>() + ", " +
                   py::repr(py::float_(p.y)).cast<std::string>() + ")";
        });
    py::implicitly_convertible<py::tuple, PixelPoint>();

    py::class_<Region>(m, "Region")
        .def(py::init([](int level, int x0, int y0, int x1, int y1) { return Region{level, x0, y0, x1, y1}; }),
             py::arg("level"), py::arg("x0"), py::arg("y0"), py::arg("x1"), py::arg("y1"))
        .def_readwrite("level", &Region::level)
        .def_readwrite("x0", &Region::x0)
        .def_readwrite("y0", &Region::y0)
        .def_readwrite("x1", &Region::x1)
        .def_readwrite("y1", &Region::y1);

    py::class_<BackboneWeights>(m, "Weights")
        .def_property_readonly("layer_names", [](const BackboneWeights& w) {
            std::vector<std::string> names;
            for (const ConvLayer& l : w.layers) names.push_back(l.name);
            return names;
        });

    m.def("load_weights", &load_weights, py::arg("path"));
    m.def("save_weights", &save_weights, py::arg("weights"), py::arg("path"));
    m.def("random_weights", &random_weights, py::arg("seed"));

    py::class_<FeaturePyramid>(m, "Pyramid")
        .def("features", [](const FeaturePyramid& p, int level) { return to_numpy(p.level(level).features); },
             py::arg("level"))
        .def("activation",
             [](const FeaturePyramid& p, int level) {
                 const Tensor3& h = p.level(level).activation;
                 py::array_t<float> out({h.height(), h.width()});
                 std::memcpy(out.mutable_data(), h.data().data(), h.size() * sizeof(float));
                 return out;
             },
             py::arg("level"))
        .def_property_readonly("original_size",
                               [](const FeaturePyramid& p) { return py::make_tuple(p.original_width, p.original_height); });

    m.def(
        "build_pyramid",
        [](const ByteArray& image, const BackboneWeights& w, int side) {
            const RgbImage img = to_image(image);
            py::gil_scoped_release release;
            return build_pyramid(img, w, side);
        },
        py::arg("image"), py::arg("weights"), py::arg("side") = 224);

    m.def("normalize_activations", [](const FloatArray& f) { return to_numpy(normalize_activations(to_tensor(f))); },
          py::arg("features"));
    m.def(
        "common_appearance",
        [](const FloatArray& a, const FloatArray& b, const Region& p, const Region& q) {
            auto [ca, cb] = common_appearance(to_tensor(a), to_tensor(b), p, q);
            return py::make_tuple(to_numpy(ca), to_numpy(cb));
        },
        py::arg("features_a"), py::arg("features_b"), py::arg("p_region"), py::arg("q_region"));
    m.def(
        "find_nbbs",
        [](const FloatArray& a, const FloatArray& b, const Region& p, const Region& q, int nbhd) {
            return find_nbbs(to_tensor(a), to_tensor(b), {p, q}, nbhd);
        },
        py::arg("features_a"), py::arg("features_b"), py::arg("p_region"), py::arg("q_region"), py::arg("nbhd"));

    py::class_<Buddy>(m, "Buddy")
        .def_readonly("pixel_a", &Buddy::pixel_a)
        .def_readonly("pixel_b", &Buddy::pixel_b)
        .def_readonly("rank", &Buddy::rank)
        .def_readonly("chain_a", &Buddy::chain_a)
        .def_readonly("chain_b", &Buddy::chain_b)
        .def("__repr__", [](const Buddy& b) {
            return "Buddy(a=(" + std::to_string(b.pixel_a.x) + ", " + std::to_string(b.pixel_a.y) + "), b=(" +
                   std::to_string(b.pixel_b.x) + ", " + std::to_string(b.pixel_b.y) +
                   "), rank=" + std::to_string(b.rank) + ")";
        });

    m.def(
        "run_nbb",
        [](const FeaturePyramid& a, const FeaturePyramid& b, double gamma) {
            NbbConfig cfg;
            cfg.gamma = gamma;
            py::gil_scoped_release release;
            return run_nbb(a, b, cfg);
        },
        py::arg("pyramid_a"), py::arg("pyramid_b"), py::arg("gamma") = 0.05);

    m.def(
        "select_top_k",
        [](std::vector<Buddy> buddies, int k, std::uint64_t seed, std::pair<int, int> size_a,
           std::pair<int, int> size_b) {
            return select_top_k(std::move(buddies), {k, seed, 100}, {size_a.first, size_a.second},
                                {size_b.first, size_b.second});
        },
        py::arg("buddies"), py::arg("k") = 10, py::arg("seed") = 0, py::arg("size_a"), py::arg("size_b"));

    m.def(
        "match",
        [](const ByteArray& image_a, const ByteArray& image_b, const BackboneWeights& w, int k, double gamma,
           int side, std::uint64_t seed) {
            const RgbImage a = to_image(image_a);
            const RgbImage b = to_image(image_b);
            py::gil_scoped_release release;
            NbbConfig cfg;
            cfg.gamma = gamma;
            return select_top_k(run_nbb(build_pyramid(a, w, side), build_pyramid(b, w, side), cfg), {k, seed, 100},
                                {a.width, a.height}, {b.width, b.height});
        },
        py::arg("image_a"), py::arg("image_b"), py::arg("weights"), py::arg("k") = 10, py::arg("gamma") = 0.05,
        py::arg("side") = 224, py::arg("seed") = 0);

    m.def(
        "mls_map",
        [](PixelPoint p, std::vector<PixelPoint> sources, std::vector<PixelPoint> targets, double alpha) {
            return mls_map(p, ControlSet{std::move(sources), std::move(targets), alpha});
        },
        py::arg("point"), py::arg("sources"), py::arg("targets"), py::arg("alpha") = 1.0);
    m.def(
        "warp_image",
        [](const ByteArray& image, std::vector<PixelPoint> sources, std::vector<PixelPoint> targets, double alpha) {
            const RgbImage img = to_image(image);
            const ControlSet cs{std::move(sources), std::move(targets), alpha};
            RgbImage out;
            {
                py::gil_scoped_release release;
                out = warp_image(img, cs);
            }
            return to_numpy(out);
        },
        py::arg("image"), py::arg("sources"), py::arg("targets"), py::arg("alpha") = 1.0);
    m.def(
        "align_pair",
        [](const ByteArray& image_a, const ByteArray& image_b, const std::vector<Buddy>& buddies) {
            auto [wa, wb] = align_pair(to_image(image_a), to_image(image_b), buddies);
            return py::make_tuple(to_numpy(wa), to_numpy(wb));
        },
        py::arg("image_a"), py::arg("image_b"), py::arg("buddies"));

    m.def(
        "match_document",
        [](const std::vector<Buddy>& buddies, const ByteArray& image_a, const ByteArray& image_b, double gamma, int k,
           std::uint64_t seed, int side, const std::string& path_a, const std::string& path_b) {
            MatchDocument doc;
            doc.image_a = {path_a, size_of(image_a)};
            doc.image_b = {path_b, size_of(image_b)};
            doc.config = {gamma, k, seed, side};
            for (const Buddy& b : buddies) doc.buddies.push_back(to_record(b));
            return serialize(doc);
        },
        py::arg("buddies"), py::arg("image_a"), py::arg("image_b"), py::arg("gamma") = 0.05, py::arg("k") = 10,
        py::arg("seed") = 0, py::arg("side") = 224, py::arg("path_a") = "", py::arg("path_b") = "",
        "Serializes buddies as a match document JSON string.");

    m.def(
        "evaluate_pck",
        [](const std::string& matches_json, const std::string& annotations_json, double alpha) {
            const PckReport r = evaluate_pck(parse_match_document(matches_json),
                                             parse_annotation_document(annotations_json), alpha);
            py::dict d;
            d["alpha"] = r.alpha;
            d["threshold_px"] = r.threshold_px;
            d["correct"] = r.correct;
            d["total"] = r.total;
            d["pck"] = r.pck;
            d["distances"] = r.distances;
            return d;
        },
        py::arg("matches_json"), py::arg("annotations_json"), py::arg("alpha") = 0.1);

    m.def("set_num_threads", &set_num_threads, py::arg("n"));
    m.def("num_threads", &num_threads);
}
