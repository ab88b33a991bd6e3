#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "asmqa/corpus.hpp"
#include "asmqa/renderer.hpp"
#include "asmqa/rng.hpp"

namespace asmqa {

// --- metrics ---------------------------------------------------------------

/// Units Rouge-L compares: unicode characters, whitespace tokens, or pick
/// per reference (char when at least half its non-space characters are CJK).
enum class TokenMode { char_units, whitespace, auto_detect };

TokenMode parse_token_mode(std::string_view tag);
std::string_view to_string(TokenMode mode);

/// Length of the longest common subsequence, O(|a||b|) time, O(min) memory.
template <typename Seq>
std::size_t lcs_length(const Seq& a, const Seq& b);

/// LCS-based F1: P = LCS/|hyp|, R = LCS/|ref|, F = 2PR/(P+R); 0 if either side is empty.
double rouge_l(std::string_view hypothesis, std::string_view reference, TokenMode mode = TokenMode::char_units);

/// Max of rouge_l over references; Error{precondition} when `references` is empty.
double rouge_l_max(std::string_view hypothesis, const std::vector<std::string>& references,
                   TokenMode mode = TokenMode::auto_detect);

/// Whitespace removed, full-width digits folded to ASCII.
std::string normalize_for_em(std::string_view text);

/// 1 iff the normalised gold label occurs in the normalised prediction.
int em_retrieval(std::string_view prediction, std::string_view gold_label);

struct IndexMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Set-based P/R/F1; empty vs empty scores (1,1,1).
IndexMetrics index_prediction_metrics(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold);

// --- protocol --------------------------------------------------------------

/// Permutes positions [0, min(k, n)) with a seeded uniform shuffle; the tail is untouched.
template <typename T>
std::vector<T> shuffle_first_k(std::vector<T> items, std::size_t k, RngStream& rng) {
    const std::size_t m = std::min(k, items.size());
    rng.shuffle(std::span<T>(items.data(), m));
    return items;
}

struct ParsedOutput {
    std::optional<std::string> question_echo;
    std::vector<std::size_t> positions;
    std::string answer;

    bool operator==(const ParsedOutput&) const = default;
};

/// Splits model output into (question echo, predicted indices, answer).
/// Output with none of the template prefixes is returned whole as the answer.
/// Never throws.
ParsedOutput parse_asm_output(std::string_view model_output, const PromptTemplate& tmpl);

// --- runs ------------------------------------------------------------------

enum class EvalTask { multidoc_qa, synthesis, summarization };
enum class Perturbation { none, shuffled_first_10 };

EvalTask parse_eval_task(std::string_view tag);
std::string_view to_string(EvalTask task);
Perturbation parse_perturbation(std::string_view tag);
std::string_view to_string(Perturbation p);

struct EvalItem {
    std::string item_id;
    std::string question;
    std::vector<Document> docs;
    std::vector<std::string> gold_answers;
    std::optional<std::vector<std::size_t>> gold_positive_positions;
    std::optional<std::string> gold_retrieval_label;
};

Json to_json(const EvalItem& item);
EvalItem eval_item_from_json(const Json& j);

/// Error{data} unless the item carries what `task` scores against.
void validate(const EvalItem& item, EvalTask task);

/// Shuffles the first k docs of an item (stream keyed by seed and item_id)
/// and remaps gold_positive_positions to follow the moved documents.
EvalItem shuffle_item(const EvalItem& item, std::size_t k, std::uint64_t seed);

struct ItemScore {
    std::string item_id;
    double score = 0.0;
    std::optional<IndexMetrics> index_metrics;
};

struct EvalReport {
    std::vector<ItemScore> per_item;
    double aggregate = 0.0;  // mean score x 100
    EvalTask task = EvalTask::multidoc_qa;
    Perturbation perturbation = Perturbation::none;
    std::optional<double> delta;  // unperturbed minus perturbed aggregate, percentage points
    std::optional<double> index_f1;  // mean index-prediction F1 x 100, when gold positions exist

    Json to_json() const;
    static EvalReport from_json(const Json& j);
};

struct EvalOptions {
    TokenMode token_mode = TokenMode::auto_detect;
    /// Score the parsed answer segment instead of the raw output.
    bool parse_outputs = true;
    PromptTemplate tmpl = PromptTemplate::chinese();
    std::size_t workers = 1;
};

/// Scores every item; Error{data} listing item_ids without a prediction.
EvalReport evaluate_run(const std::vector<EvalItem>& items, const std::map<std::string, std::string>& predictions,
                        EvalTask task, Perturbation perturbation, const EvalOptions& options = {});

/// Copy of `perturbed` with delta = unperturbed.aggregate - perturbed.aggregate.
EvalReport with_delta(const EvalReport& unperturbed, EvalReport perturbed);

/// "task | perturbation | aggregate | delta" text table for one or more reports.
std::string render_report_table(const std::vector<EvalReport>& reports);

/// One row per model, three percentage columns (multi-doc QA, synthesis, summarization).
struct ScoreRow {
    std::string label;
    std::optional<double> multidoc_qa;
    std::optional<double> synthesis;
    std::optional<double> summarization;
};
std::string render_score_table(const std::vector<ScoreRow>& rows);

/// Fixed one-decimal formatting used by every report.
std::string format_percent(double value);

}  // namespace asmqa

#include "asmqa/detail/lcs.hpp"
