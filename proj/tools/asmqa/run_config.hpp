#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "asmqa/assembler.hpp"
#include "asmqa/attention_probe.hpp"
#include "asmqa/corpus.hpp"
#include "asmqa/eval_harness.hpp"
#include "asmqa/negative_miner.hpp"
#include "asmqa/quality_filter.hpp"
#include "asmqa/renderer.hpp"

namespace asmqa::cli {

struct SourceSpec {
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::canonical;
    std::optional<std::string> name;
    IngestFilter filter;
};

/// Everything a run needs. Loaded from one JSON document; flags override it.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::filesystem::path out_dir = "out";

    std::vector<SourceSpec> sources;
    std::optional<std::size_t> embedding_dim;

    ScorerSpec scorer;
    double threshold = 0.0;

    MiningPlan plan;
    bool per_source_index = true;
    std::optional<VectorEndpointSpec> vector_endpoint;

    AssemblyConfig assembly;
    std::string language = "zh";
    PromptTemplate tmpl = PromptTemplate::chinese();
    std::string counter = "char";
    TargetVariant variant = TargetVariant::full;
    std::optional<std::filesystem::path> replay_path;

    TokenMode token_mode = TokenMode::auto_detect;
    bool parse_outputs = true;
    std::size_t shuffle_k = 10;

    ProbeParams probe;
    std::size_t probe_repeats = 20;

    RunConfig();

    /// Copies the global seed into the stages that consume it.
    void propagate_seed();
};

/// Parses a config document; Error{config} on bad values.
RunConfig config_from_json(const Json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Effective configuration. Worker count and output directory are left out
/// because they never change results.
Json to_json(const RunConfig& config);

/// SHA-256 of the effective configuration.
std::string config_hash(const RunConfig& config);

/// Throws Error{config} if any component invariant fails.
void validate(const RunConfig& config);

}  // namespace asmqa::cli
