#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asmqa/corpus.hpp"
#include "asmqa/rng.hpp"

namespace asmqa {

/// Exact cosine-similarity index over unit-normalised document vectors.
///
/// Rows are kept sorted by doc_id so that ties in score resolve by ascending
/// id without extra bookkeeping. Immutable after build; safe to share
/// read-only between threads.
class EmbeddingIndex {
public:
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& fingerprint() const { return fingerprint_; }

    const std::string& id_at(std::size_t row) const { return ids_[row]; }
    std::span<const double> vector_at(std::size_t row) const { return {vectors_.data() + row * dim_, dim_}; }
    std::optional<std::size_t> row_of(std::string_view doc_id) const;

private:
    friend EmbeddingIndex build_index(std::span<const Document> docs);

    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<double> vectors_;
    std::string fingerprint_;
};

/// Builds the index. Throws Error{data} for missing embeddings (listing the
/// offending ids), zero or non-finite vectors, mixed dimensions and duplicate ids.
EmbeddingIndex build_index(std::span<const Document> docs);

/// One index per document source ("corresponding dataset"), or a single "*" index.
std::map<std::string, EmbeddingIndex> build_indices(const CorpusStore& store, bool per_source);

/// Unit-normalises `v`; throws Error{data} for a zero or non-finite vector.
std::vector<double> normalized(std::span<const double> v);

struct ScoredDoc {
    std::string doc_id;
    double score;

    bool operator==(const ScoredDoc&) const = default;
};

/// Top-k by cosine similarity, score descending then doc_id ascending.
/// Returns min(k, available) hits and never an excluded id.
std::vector<ScoredDoc> search_top_k(const EmbeddingIndex& index, std::span<const double> query, std::size_t k,
                                    const std::set<std::string>& exclude = {});

struct MiningPlan {
    /// Negatives requested per sample; nullopt is the fill-to-budget sentinel,
    /// which mines `candidate_pool` candidates and lets the assembler trim them.
    std::optional<std::size_t> negatives_per_sample;
    double retrieved_fraction = 0.7;
    std::uint64_t seed = 0;
    std::size_t candidate_pool = 64;
};

void validate(const MiningPlan& plan);

struct MiningResult {
    std::vector<Document> docs;
    /// Retrieval scores aligned with `docs` (retrieved branch only).
    std::vector<double> scores;
    /// Set when fewer negatives than requested were available.
    bool exhausted = false;
};

/// Mines negatives for one record.
///
/// Retrieved branch: top-ranked non-positive docs from `index`, in rank order;
/// requires record.question_embedding (Error{data} otherwise).
/// Random branch: uniform sample without replacement from candidate_negatives.
MiningResult mine_negatives(const QARecord& record, const EmbeddingIndex* index, const CorpusStore& store,
                            const MiningPlan& plan, bool use_retrieved, RngStream& rng);

/// Client for the vector wire protocol:
/// POST {"texts": [...]} -> {"vectors": [[...], ...]}.
struct VectorEndpointSpec {
    std::string url;
    std::size_t batch_size = 32;
    int retries = 3;
    int timeout_seconds = 30;
};

std::vector<Embedding> embed_texts(const std::vector<std::string>& texts, const VectorEndpointSpec& spec);

/// Fills in missing document and question embeddings through the vector endpoint.
CorpusStore with_embeddings(CorpusStore store, const VectorEndpointSpec& spec);

}  // namespace asmqa
