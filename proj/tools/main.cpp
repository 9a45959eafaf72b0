#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nbb/documents.hpp"

namespace {

void emit(const std::string& text, const std::string& output) {
    if (output.empty() || output == "-") {
        std::cout << text;
    } else {
        nbb::write_text_file(output, text);
    }
}

void add_pipeline_flags(CLI::App* cmd, nbb::cli::MatchOptions& opt, std::string& weights) {
    cmd->add_option("--weights", weights, "NBBW weight file (falls back to $NBB_WEIGHTS)");
    cmd->add_option("--k", opt.k, "Number of spatially scattered correspondences")->check(CLI::PositiveNumber);
    cmd->add_option("--gamma", opt.gamma, "Activation threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--side", opt.side, "Canonical input side, multiple of 16");
    cmd->add_option("--seed", opt.seed, "k-means seed");
    cmd->add_option("--threads", opt.threads, "Worker threads (0 = runtime default)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse cross-domain correspondence with neural best buddies"};
    app.require_subcommand(1);

    nbb::cli::MatchOptions match;
    std::string weights;
    std::string annotate;
    std::string output;
    auto* match_cmd = app.add_subcommand("match", "Find correspondences and write a match document");
    match_cmd->add_option("image_a", match.image_a, "First image")->required();
    match_cmd->add_option("image_b", match.image_b, "Second image")->required();
    add_pipeline_flags(match_cmd, match, weights);
    match_cmd->add_option("--annotate", annotate, "Write a side-by-side PNG with numbered markers");
    match_cmd->add_option("-o,--output", output, "Match document path (default stdout)");

    nbb::cli::AlignOptions align;
    std::string matches_path;
    auto* align_cmd = app.add_subcommand("align", "Warp both images onto the midpoints of their matches");
    align_cmd->add_option("image_a", align.match.image_a, "First image")->required();
    align_cmd->add_option("image_b", align.match.image_b, "Second image")->required();
    align_cmd->add_option("--matches", matches_path, "Existing match document (otherwise matched inline)");
    add_pipeline_flags(align_cmd, align.match, weights);
    align_cmd->add_option("--out-a", align.out_a, "Aligned first image")->required();
    align_cmd->add_option("--out-b", align.out_b, "Aligned second image")->required();

    nbb::cli::EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval-pck", "Percentage of correct keypoint transfers");
    eval_cmd->add_option("--matches", eval.matches, "Match document")->required();
    eval_cmd->add_option("--annotations", eval.annotations, "Annotation document")->required();
    eval_cmd->add_option("--alpha", eval.alpha, "Tolerance as a fraction of max(H, W)")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("-o,--output", output, "Report path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!weights.empty()) {
            match.weights = weights;
            align.match.weights = weights;
        }
        if (*match_cmd) {
            if (!annotate.empty()) {
                match.annotate = annotate;
            }
            emit(nbb::serialize(nbb::cli::cmd_match(match, std::cerr)), output);
        } else if (*align_cmd) {
            if (!matches_path.empty()) {
                align.matches = matches_path;
            }
            nbb::cli::cmd_align(align, std::cerr);
        } else if (*eval_cmd) {
            emit(nbb::serialize(nbb::cli::cmd_eval_pck(eval)), output);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
