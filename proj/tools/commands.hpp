#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "nbb/backbone.hpp"
#include "nbb/documents.hpp"

namespace nbb::cli {

struct MatchOptions {
    std::filesystem::path image_a;
    std::filesystem::path image_b;
    std::optional<std::filesystem::path> weights;
    int k = 10;
    double gamma = 0.05;
    int side = 224;
    std::uint64_t seed = 0;
    int threads = 0;
    std::optional<std::filesystem::path> annotate;
};

/// --weights if given, else $NBB_WEIGHTS; throws when neither is set.
std::filesystem::path resolve_weights(const std::optional<std::filesystem::path>& flag);

/// Full pipeline on already-loaded weights. Warnings go to `log`.
MatchDocument run_match(const MatchOptions& options, const BackboneWeights& weights, std::ostream& log);

MatchDocument cmd_match(const MatchOptions& options, std::ostream& log);

struct AlignOptions {
    MatchOptions match;  // used for an inline run when `matches` is absent
    std::optional<std::filesystem::path> matches;
    std::filesystem::path out_a;
    std::filesystem::path out_b;
};

void cmd_align(const AlignOptions& options, std::ostream& log);

struct EvalOptions {
    std::filesystem::path matches;
    std::filesystem::path annotations;
    double alpha = 0.1;
};

PckReport cmd_eval_pck(const EvalOptions& options);

std::vector<Buddy> buddies_from(const MatchDocument& doc);

}  // namespace nbb::cli
