#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmqa/corpus.hpp"

namespace asmqa {

enum class ScorerMode { precomputed_field, remote_endpoint, constant };

ScorerMode parse_scorer_mode(std::string_view tag);
std::string_view to_string(ScorerMode mode);

/// How to obtain reward-model quality scores.
struct ScorerSpec {
    ScorerMode mode = ScorerMode::precomputed_field;
    std::optional<std::string> endpoint_url;
    std::size_t batch_size = 32;
    double constant_value = 0.0;
    int retries = 3;
    int timeout_seconds = 30;
    std::size_t max_in_flight = 4;
    /// Text sent to the scorer; `{question}` and `{answer}` (first gold answer) are substituted.
    std::string text_template = "{question}\n{answer}";
};

/// Throws Error{config} on an empty endpoint URL, zero batch size and the like.
void validate(const ScorerSpec& spec);

std::string score_text(const QARecord& record, std::string_view text_template);

/// Returns the records with quality_score set, input order preserved.
///
/// precomputed_field: records must already carry a score (Error{data} otherwise).
/// constant: every record gets `constant_value`.
/// remote_endpoint: POSTs {"texts": [...]} in batches, expects {"scores": [...]}.
/// A wrong score count or a non-finite score is Error{protocol}; an
/// unreachable endpoint is Error{io}.
std::vector<QARecord> attach_scores(std::vector<QARecord> records, const ScorerSpec& scorer);

/// Records with quality_score >= threshold, order preserved.
/// Throws Error{precondition} if any record is unscored.
std::vector<QARecord> filter_by_threshold(const std::vector<QARecord>& records, double threshold);

}  // namespace asmqa
