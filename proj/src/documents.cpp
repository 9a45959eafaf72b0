#include "nbb/documents.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

namespace nbb {

using Json = nlohmann::ordered_json;

namespace {

Json point_json(const Point2& p) { return Json::array({p.x, p.y}); }
Json coord_json(const Coord& c) { return Json::array({c.x, c.y}); }

Point2 parse_point(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw DocumentError(std::string(what) + " must be [x, y]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Coord parse_coord(const Json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw DocumentError(std::string(what) + " must be an integer [x, y]");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

const Json& field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw DocumentError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

ImageSize parse_size(const Json& j) {
    const int w = field(j, "width").get<int>();
    const int h = field(j, "height").get<int>();
    if (w < 1 || h < 1) {
        throw DocumentError("image dims must be positive");
    }
    return {w, h};
}

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw DocumentError(std::string("invalid JSON: ") + e.what());
    }
}

}  // namespace

BuddyRecord to_record(const Buddy& buddy) {
    return {buddy.pixel_a, buddy.pixel_b, buddy.rank, buddy.chain_a, buddy.chain_b};
}

std::string serialize(const MatchDocument& doc) {
    Json j;
    j["version"] = doc.version;
    for (const auto& [key, image] : {std::pair{"image_a", &doc.image_a}, std::pair{"image_b", &doc.image_b}}) {
        j[key] = {{"path", image->path}, {"width", image->size.width}, {"height", image->size.height}};
    }
    j["config"] = {{"gamma", doc.config.gamma}, {"k", doc.config.k}, {"seed", doc.config.seed},
                   {"side", doc.config.side}};
    Json buddies = Json::array();
    for (const BuddyRecord& b : doc.buddies) {
        Json chain_a = Json::array();
        Json chain_b = Json::array();
        for (const Coord& c : b.chain_a) {
            chain_a.push_back(coord_json(c));
        }
        for (const Coord& c : b.chain_b) {
            chain_b.push_back(coord_json(c));
        }
        buddies.push_back({{"pixel_a", point_json(b.pixel_a)},
                           {"pixel_b", point_json(b.pixel_b)},
                           {"rank", b.rank},
                           {"chain_a", chain_a},
                           {"chain_b", chain_b}});
    }
    j["buddies"] = std::move(buddies);
    return j.dump(2) + "\n";
}

MatchDocument parse_match_document(const std::string& text) {
    const Json j = parse_json(text);
    MatchDocument doc;
    try {
        doc.version = field(j, "version").get<std::string>();
        if (doc.version != kMatchDocumentVersion) {
            throw DocumentError("unsupported match document version '" + doc.version + "'");
        }
        for (const auto& [key, image] : {std::pair{"image_a", &doc.image_a}, std::pair{"image_b", &doc.image_b}}) {
            const Json& record = field(j, key);
            image->path = field(record, "path").get<std::string>();
            image->size = parse_size(record);
        }
        const Json& config = field(j, "config");
        doc.config.gamma = field(config, "gamma").get<double>();
        doc.config.k = field(config, "k").get<int>();
        doc.config.seed = field(config, "seed").get<std::uint64_t>();
        doc.config.side = field(config, "side").get<int>();
        for (const Json& b : field(j, "buddies")) {
            BuddyRecord record;
            record.pixel_a = parse_point(field(b, "pixel_a"), "pixel_a");
            record.pixel_b = parse_point(field(b, "pixel_b"), "pixel_b");
            record.rank = field(b, "rank").get<double>();
            for (const Json& c : field(b, "chain_a")) {
                record.chain_a.push_back(parse_coord(c, "chain_a entry"));
            }
            for (const Json& c : field(b, "chain_b")) {
                record.chain_b.push_back(parse_coord(c, "chain_b entry"));
            }
            doc.buddies.push_back(std::move(record));
        }
    } catch (const Json::exception& e) {
        throw DocumentError(std::string("malformed match document: ") + e.what());
    }
    return doc;
}

std::string serialize(const AnnotationDocument& doc) {
    Json j;
    j["image_a"] = {{"width", doc.size_a.width}, {"height", doc.size_a.height}};
    j["image_b"] = {{"width", doc.size_b.width}, {"height", doc.size_b.height}};
    Json pairs = Json::array();
    for (const KeypointPair& p : doc.pairs) {
        pairs.push_back({{"gt_a", point_json(p.gt_a)}, {"gt_b", point_json(p.gt_b)}});
    }
    j["pairs"] = std::move(pairs);
    return j.dump(2) + "\n";
}

AnnotationDocument parse_annotation_document(const std::string& text) {
    const Json j = parse_json(text);
    AnnotationDocument doc;
    try {
        doc.size_a = parse_size(field(j, "image_a"));
        doc.size_b = parse_size(field(j, "image_b"));
        for (const Json& p : field(j, "pairs")) {
            KeypointPair pair{parse_point(field(p, "gt_a"), "gt_a"), parse_point(field(p, "gt_b"), "gt_b")};
            if (pair.gt_a.x < 0 || pair.gt_a.y < 0 || pair.gt_a.x > doc.size_a.width - 1 ||
                pair.gt_a.y > doc.size_a.height - 1 || pair.gt_b.x < 0 || pair.gt_b.y < 0 ||
                pair.gt_b.x > doc.size_b.width - 1 || pair.gt_b.y > doc.size_b.height - 1) {
                throw DocumentError("annotation keypoint outside image bounds");
            }
            doc.pairs.push_back(pair);
        }
    } catch (const Json::exception& e) {
        throw DocumentError(std::string("malformed annotation document: ") + e.what());
    }
    return doc;
}

PckReport evaluate_pck(const MatchDocument& matches, const AnnotationDocument& annotations, double alpha) {
    if (annotations.pairs.empty()) {
        throw std::invalid_argument("evaluate_pck: no annotated keypoints");
    }
    if (matches.buddies.empty()) {
        throw std::invalid_argument("evaluate_pck: match document has no correspondences");
    }
    if (!(alpha >= 0.0)) {
        throw std::invalid_argument("evaluate_pck: alpha must be non-negative");
    }
    std::vector<std::pair<Point2, Point2>> pairs;
    for (const BuddyRecord& b : matches.buddies) {
        pairs.emplace_back(b.pixel_a, b.pixel_b);
    }
    const ControlSet controls = make_controls(pairs);

    PckReport report;
    report.alpha = alpha;
    report.threshold_px = alpha * std::max(annotations.size_b.width, annotations.size_b.height);
    report.total = annotations.pairs.size();
    for (const KeypointPair& kp : annotations.pairs) {
        const Point2 predicted = mls_map(kp.gt_a, controls);
        const double distance = std::hypot(predicted.x - kp.gt_b.x, predicted.y - kp.gt_b.y);
        report.predicted.push_back(predicted);
        report.distances.push_back(distance);
        if (distance <= report.threshold_px) {
            ++report.correct;
        }
    }
    report.pck = static_cast<double>(report.correct) / static_cast<double>(report.total);
    return report;
}

std::string serialize(const PckReport& report) {
    Json j;
    j["alpha"] = report.alpha;
    j["threshold_px"] = report.threshold_px;
    j["correct"] = report.correct;
    j["total"] = report.total;
    j["pck"] = report.pck;
    Json points = Json::array();
    for (std::size_t i = 0; i < report.distances.size(); ++i) {
        points.push_back({{"predicted", point_json(report.predicted[i])}, {"distance", report.distances[i]}});
    }
    j["points"] = std::move(points);
    return j.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), {}};
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << text;
}

}  // namespace nbb
