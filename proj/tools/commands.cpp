#include "commands.hpp"

#include <cstdlib>
#include <ostream>
#include <stdexcept>

#include "nbb/engine.hpp"
#include "nbb/image_io.hpp"
#include "nbb/mls.hpp"
#include "nbb/parallel.hpp"
#include "nbb/select.hpp"

namespace nbb::cli {

std::filesystem::path resolve_weights(const std::optional<std::filesystem::path>& flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("NBB_WEIGHTS"); env != nullptr && *env != '\0') {
        return env;
    }
    throw std::runtime_error("no weight file: pass --weights or set NBB_WEIGHTS");
}

MatchDocument run_match(const MatchOptions& options, const BackboneWeights& weights, std::ostream& log) {
    if (options.k < 1) {
        throw std::invalid_argument("--k must be >= 1");
    }
    set_num_threads(options.threads);
    const RgbImage image_a = read_image(options.image_a);
    const RgbImage image_b = read_image(options.image_b);
    const FeaturePyramid pyramid_a = build_pyramid(image_a, weights, options.side);
    const FeaturePyramid pyramid_b = build_pyramid(image_b, weights, options.side);

    NbbConfig config;
    config.gamma = options.gamma;
    const ImageSize size_a{image_a.width, image_a.height};
    const ImageSize size_b{image_b.width, image_b.height};
    const std::vector<Buddy> selected =
        select_top_k(run_nbb(pyramid_a, pyramid_b, config), {options.k, options.seed, 100}, size_a, size_b);

    MatchDocument doc;
    doc.image_a = {options.image_a.string(), size_a};
    doc.image_b = {options.image_b.string(), size_b};
    doc.config = {options.gamma, options.k, options.seed, options.side};
    for (const Buddy& b : selected) {
        doc.buddies.push_back(to_record(b));
    }
    if (doc.buddies.empty()) {
        log << "warning: no correspondences survived the activation threshold (gamma=" << options.gamma
            << "); try a lower --gamma\n";
    }

    if (options.annotate) {
        std::vector<PixelPoint> pa;
        std::vector<PixelPoint> pb;
        for (const BuddyRecord& b : doc.buddies) {
            pa.push_back(b.pixel_a);
            pb.push_back(b.pixel_b);
        }
        write_image(annotate_matches(image_a, image_b, pa, pb), *options.annotate);
    }
    return doc;
}

MatchDocument cmd_match(const MatchOptions& options, std::ostream& log) {
    const BackboneWeights weights = load_weights(resolve_weights(options.weights));
    return run_match(options, weights, log);
}

std::vector<Buddy> buddies_from(const MatchDocument& doc) {
    std::vector<Buddy> out;
    for (const BuddyRecord& r : doc.buddies) {
        Buddy b;
        b.pixel_a = r.pixel_a;
        b.pixel_b = r.pixel_b;
        b.rank = r.rank;
        b.chain_a = r.chain_a;
        b.chain_b = r.chain_b;
        out.push_back(std::move(b));
    }
    return out;
}

void cmd_align(const AlignOptions& options, std::ostream& log) {
    MatchDocument doc;
    if (options.matches) {
        doc = parse_match_document(read_text_file(*options.matches));
    } else {
        doc = cmd_match(options.match, log);
    }
    if (doc.buddies.empty()) {
        throw std::runtime_error("no correspondences to align with; rerun match with a lower --gamma");
    }
    set_num_threads(options.match.threads);
    const RgbImage image_a = read_image(options.match.image_a);
    const RgbImage image_b = read_image(options.match.image_b);
    const auto [aligned_a, aligned_b] = align_pair(image_a, image_b, buddies_from(doc));
    write_image(aligned_a, options.out_a);
    write_image(aligned_b, options.out_b);
}

PckReport cmd_eval_pck(const EvalOptions& options) {
    const MatchDocument matches = parse_match_document(read_text_file(options.matches));
    const AnnotationDocument annotations = parse_annotation_document(read_text_file(options.annotations));
    return evaluate_pck(matches, annotations, options.alpha);
}

}  // namespace nbb::cli
