#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "asmqa/corpus.hpp"
#include "asmqa/negative_miner.hpp"
#include "asmqa/renderer.hpp"
#include "asmqa/rng.hpp"
#include "asmqa/sample.hpp"

namespace asmqa {

struct AssemblyConfig {
    double retrieved_fraction = 0.7;
    double shuffle_fraction = 0.5;
    double unknown_fraction = 0.05;
    double replay_ratio = 0.2;
    std::size_t max_budget = 8192;
    std::size_t min_budget = 1024;
    std::string unknown_answer = "我不知道。";
    std::uint64_t seed = 0;
    /// Sources whose records become relevance-MRC samples (index prediction only).
    std::set<std::string> relevance_sources = {"t2rank"};
    /// Cap on relevance records drawn (seeded selection); nullopt keeps all.
    std::optional<std::size_t> relevance_sample_size;
    /// Whether a random-branch record with no candidate negatives may proceed with positives only.
    bool allow_positives_only = true;
};

/// Throws Error{config} unless fractions lie in [0,1], replay_ratio < 1 and min_budget < max_budget.
void validate(const AssemblyConfig& config);

struct Strategy {
    bool use_retrieved = false;
    bool do_shuffle = false;
    bool make_unknown = false;
    std::size_t budget = 0;

    bool operator==(const Strategy&) const = default;
};

/// Draws use_retrieved, do_shuffle, make_unknown (independent Bernoulli, in
/// that order) and then a budget uniform on [min_budget, max_budget].
Strategy plan_sample(const QARecord& record, const AssemblyConfig& config, RngStream& rng);

/// Everything needed to measure a rendered sample against its budget.
struct RenderContext {
    const PromptTemplate& tmpl;
    const LengthCounter& counter;
    TargetVariant variant = TargetVariant::full;
};

enum class RejectReason { positives_exceed_budget, no_negatives, negatives_exceed_budget };

std::string_view to_string(RejectReason reason);

struct Rejection {
    std::string record_id;
    RejectReason reason;
    std::string detail;
};

struct AssembleOutcome {
    std::optional<AsmSample> sample;
    std::optional<Rejection> rejection;
};

/// Packed length of the sample under `ctx`, as pack_example would measure it.
std::size_t rendered_length(const AsmSample& sample, const RenderContext& ctx);

/// Standard sample: positives plus as many negatives (in rank order) as the
/// budget allows, shuffled or in retrieval order. `shuffle_rng` drives the
/// permutation.
AssembleOutcome assemble_standard(const QARecord& record, const MiningResult& negatives, const Strategy& strategy,
                                  RngStream& shuffle_rng, const RenderContext& ctx);

/// Synthetic-unknown sample: negatives only, constant answer.
AssembleOutcome assemble_unknown(const QARecord& record, const MiningResult& negatives, const Strategy& strategy,
                                 RngStream& shuffle_rng, const AssemblyConfig& config, const RenderContext& ctx);

/// Relevance-MRC sample: negatives sampled uniformly from the record's hard
/// negatives; the target stops after the index segment.
AssembleOutcome assemble_relevance(const QARecord& record, const Strategy& strategy, const MiningPlan& plan,
                                   RngStream& mining_rng, RngStream& shuffle_rng, const RenderContext& ctx);

struct MixedItem {
    TrainingExample example;
    bool replay = false;
};

struct MixResult {
    std::vector<MixedItem> items;
    std::size_t replay_count = 0;
    /// Times the replay stream wrapped around to its start.
    std::size_t recycled = 0;
};

/// Interleaves replay examples: before each emission a replay item is chosen
/// with probability `ratio`; stops when the ASM stream is exhausted. Order
/// within each stream is preserved and the replay stream recycles from its start.
MixResult mix_replay(const std::vector<TrainingExample>& asm_examples, const std::vector<TrainingExample>& replay,
                     double ratio, RngStream& rng);

struct AssemblyInputs {
    AssemblyConfig config;
    MiningPlan plan;
    PromptTemplate tmpl = PromptTemplate::chinese();
    std::string counter = "char";
    TargetVariant variant = TargetVariant::full;
    /// Retrieval index per source name; "*" serves any source.
    const std::map<std::string, EmbeddingIndex>* indices = nullptr;
    std::vector<TrainingExample> replay;
    std::size_t workers = 1;
};

struct AssemblyStats {
    std::size_t records = 0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t exhausted_warnings = 0;
    std::map<std::string, std::size_t> by_kind;
    std::map<std::string, std::size_t> by_tag;
    std::map<std::string, std::size_t> by_reject_reason;
    std::size_t replay_items = 0;
    std::size_t replay_recycled = 0;

    Json to_json() const;
};

struct AssemblyResult {
    std::vector<AsmSample> samples;
    std::vector<TrainingExample> examples;  // index-aligned with samples
    std::vector<MixedItem> mixed;           // examples interleaved with replay
    std::vector<Rejection> rejections;
    AssemblyStats stats;
};

/// Runs plan -> mine -> assemble -> render over every record. Output order is
/// record order; results do not depend on `workers`.
AssemblyResult assemble_corpus(const CorpusStore& store, const AssemblyInputs& inputs);

Json to_json(const Rejection& rejection);

}  // namespace asmqa
