#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbb/engine.hpp"
#include "nbb/mls.hpp"
#include "nbb/select.hpp"

namespace nbb {

inline constexpr const char* kMatchDocumentVersion = "nbb-match/1";

class DocumentError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ImageRecord {
    std::string path;
    ImageSize size;
    bool operator==(const ImageRecord&) const = default;
};

struct MatchConfigEcho {
    double gamma = 0.05;
    int k = 10;
    std::uint64_t seed = 0;
    int side = 224;
    bool operator==(const MatchConfigEcho&) const = default;
};

/// Buddy as stored on disk; chains run from level 5 down to level 1.
struct BuddyRecord {
    Point2 pixel_a;
    Point2 pixel_b;
    double rank = 0.0;
    std::vector<Coord> chain_a;
    std::vector<Coord> chain_b;
    bool operator==(const BuddyRecord&) const = default;
};

struct MatchDocument {
    std::string version = kMatchDocumentVersion;
    ImageRecord image_a;
    ImageRecord image_b;
    MatchConfigEcho config;
    std::vector<BuddyRecord> buddies;
    bool operator==(const MatchDocument&) const = default;
};

BuddyRecord to_record(const Buddy& buddy);

std::string serialize(const MatchDocument& doc);
/// Throws DocumentError on malformed input.
MatchDocument parse_match_document(const std::string& text);

struct KeypointPair {
    Point2 gt_a;
    Point2 gt_b;
};

struct AnnotationDocument {
    ImageSize size_a;
    ImageSize size_b;
    std::vector<KeypointPair> pairs;
};

std::string serialize(const AnnotationDocument& doc);
AnnotationDocument parse_annotation_document(const std::string& text);

struct PckReport {
    double alpha = 0.0;
    double threshold_px = 0.0;
    std::size_t correct = 0;
    std::size_t total = 0;
    double pck = 0.0;
    std::vector<Point2> predicted;
    std::vector<double> distances;
};

/// Transfers every gt_a through the MLS field defined by the matches and
/// counts predictions within alpha * max(H, W) of gt_b, where H, W are
/// image B's dims.
PckReport evaluate_pck(const MatchDocument& matches, const AnnotationDocument& annotations, double alpha);

std::string serialize(const PckReport& report);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace nbb
