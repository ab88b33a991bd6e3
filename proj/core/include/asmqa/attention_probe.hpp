#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asmqa/jsonl.hpp"
#include "asmqa/renderer.hpp"

namespace asmqa {

/// Canonical reduction every dump is expected to use.
inline constexpr std::string_view kCanonicalReduction = "last-layer, head-mean, query=last-position";

/// Per-token attention scores exported from a model.
struct AttentionDump {
    std::string model_tag;
    std::vector<std::string> tokens;
    std::vector<double> scores;
    std::string reduction;
    Json prompt_meta = Json::object();
};

/// Error{data} unless |tokens| == |scores| and every score is finite and >= 0.
void validate(const AttentionDump& dump);

AttentionDump dump_from_json(const Json& j);
Json to_json(const AttentionDump& dump);
AttentionDump load_dump(const std::filesystem::path& path);

/// Probe prompt: the answer sentence repeated `n_repeats` times as a single
/// document, in the regular prompt layout. Error{precondition} for an empty
/// sentence or n_repeats == 0.
std::string build_repeat_probe(std::string_view answer_sentence, std::string_view question, std::size_t n_repeats,
                               const PromptTemplate& tmpl);

/// Peak criterion: strict local maximum (endpoints compare against their one
/// neighbour), above mean + threshold_sigmas * stdev (population), then
/// greedy by descending score keeping peaks at least `min_separation` apart.
/// Indices ascending. Fewer than 3 points yields no peaks.
std::vector<std::size_t> detect_peaks(const std::vector<double>& scores, std::size_t min_separation,
                                      double threshold_sigmas = 2.0);

struct MassBin {
    std::size_t begin = 0;  // token index, inclusive
    std::size_t end = 0;    // exclusive
    double share = 0.0;
};

struct PositionalMass {
    std::vector<MassBin> bins;
    bool zero_total = false;
};

/// Splits scores into n_bins contiguous bins of floor(n / n_bins) tokens, the
/// last bin absorbing the remainder; share = bin sum / total. An all-zero
/// signal gets uniform shares and zero_total = true.
PositionalMass positional_mass(const std::vector<double>& scores, std::size_t n_bins = 20);

struct ProbeParams {
    std::size_t n_bins = 20;
    std::size_t min_separation = 1;
    double threshold_sigmas = 2.0;
};

struct ProbeReport {
    std::string model_tag;
    std::vector<std::size_t> peak_positions;
    std::size_t peak_count = 0;
    PositionalMass mass;
    std::pair<double, double> head_tail_share{0.0, 0.0};

    Json to_json() const;
};

ProbeReport probe_report(const AttentionDump& dump, const ProbeParams& params = {});

/// "position,token,score" rows for external plotting.
std::string scores_csv(const AttentionDump& dump);

}  // namespace asmqa
