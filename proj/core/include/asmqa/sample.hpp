#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "asmqa/corpus.hpp"

namespace asmqa {

enum class SampleKind { standard, relevance_mrc, synthetic_unknown };

enum class StrategyTag { retrieved_neg, random_neg, shuffled, ordered };

std::string_view to_string(SampleKind kind);
std::string_view to_string(StrategyTag tag);
SampleKind parse_sample_kind(std::string_view tag);
StrategyTag parse_strategy_tag(std::string_view tag);

/// One assembled training sample, before rendering.
struct AsmSample {
    std::string sample_id;
    SampleKind kind = SampleKind::standard;
    std::string question;
    /// Display order; prompt marker i refers to arranged_docs[i - 1].
    std::vector<Document> arranged_docs;
    /// Sorted 1-based positions of the positive docs within arranged_docs.
    std::vector<std::size_t> positive_positions;
    std::string target_question;
    std::string target_answer;
    std::size_t length_budget = 0;
    std::set<StrategyTag> strategy_tags;

    bool operator==(const AsmSample&) const = default;
};

Json to_json(const AsmSample& sample);
AsmSample sample_from_json(const Json& j);

}  // namespace asmqa
