#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asmqa/error.hpp"
#include "asmqa/sample.hpp"

namespace asmqa {

/// Prompt scaffold and the three target prefixes.
///
/// A full target reads
///   prefix1 + question + question_close + prefix2 + "1,2,3" + index_close + prefix3 + answer
/// i.e. question repetition, index prediction, answer summarization. The
/// output parser keys on prefix1/2/3, so they must be non-empty and distinct.
struct PromptTemplate {
    std::string question_header;
    std::string docs_header;
    std::string doc_marker = "[{i}]";  // "{i}" is replaced by the 1-based index
    std::string instruction;

    std::string prefix1;
    std::string question_close;
    std::string prefix2;
    std::string index_separator = ",";
    std::string index_close;
    std::string prefix3;

    std::string bos = "<s>";
    std::string role_open = "<human>:";
    std::string turn_separator = "\n";
    std::string role_answer = "<bot>:";
    std::string eos = "</s>";

    /// Default template, in Chinese.
    static PromptTemplate chinese();
    /// English rendering of the same structure.
    static PromptTemplate english();

    bool operator==(const PromptTemplate&) const = default;
};

/// Throws Error{config} if the prefixes are empty or not pairwise distinct.
void validate(const PromptTemplate& tmpl);

Json to_json(const PromptTemplate& tmpl);
/// Fields missing from `j` keep the values of `base`.
PromptTemplate template_from_json(const Json& j, PromptTemplate base = PromptTemplate::chinese());

enum class TargetVariant { full, no_qr, no_qr_no_ip };

TargetVariant parse_target_variant(std::string_view tag);
std::string_view to_string(TargetVariant variant);

/// Pluggable length measure for the sample budget.
class LengthCounter {
public:
    virtual ~LengthCounter() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string_view name() const = 0;
};

/// Unicode scalar values.
class CharCounter final : public LengthCounter {
public:
    std::size_t count(std::string_view text) const override;
    std::string_view name() const override { return "char"; }
};

/// UTF-8 bytes.
class ByteCounter final : public LengthCounter {
public:
    std::size_t count(std::string_view text) const override { return text.size(); }
    std::string_view name() const override { return "byte"; }
};

std::unique_ptr<LengthCounter> make_counter(std::string_view name);

std::size_t count_units(std::string_view text, const LengthCounter& counter);

/// Question line, numbered documents, then the closing instruction.
std::string render_prompt_layout(std::string_view question, const std::vector<std::string_view>& doc_texts,
                                 const PromptTemplate& tmpl);

std::string render_prompt(const AsmSample& sample, const PromptTemplate& tmpl);

std::string join_positions(const std::vector<std::size_t>& positions, std::string_view separator);

/// Renders the ASM target. no_qr_no_ip on a relevance_mrc sample is
/// Error{precondition}, since the target would be empty.
std::string render_target(const AsmSample& sample, TargetVariant variant, const PromptTemplate& tmpl);

struct ExampleMeta {
    std::string sample_id;
    std::string kind;
    std::vector<std::string> strategy_tags;

    bool operator==(const ExampleMeta&) const = default;
};

/// Half-open [start, end) offsets in unicode scalar values.
using Span = std::pair<std::size_t, std::size_t>;

struct TrainingExample {
    std::string full_text;
    std::vector<Span> loss_spans;
    std::size_t length_units = 0;
    ExampleMeta meta;

    bool operator==(const TrainingExample&) const = default;
};

Json to_json(const TrainingExample& example);
TrainingExample example_from_json(const Json& j);

/// Raised by pack_example when the packed text does not fit the budget.
class BudgetExceeded : public Error {
public:
    BudgetExceeded(std::size_t length, std::size_t budget)
        : Error(ErrorKind::data, "packed length " + std::to_string(length) + " exceeds budget " +
                                     std::to_string(budget) + " by " + std::to_string(length - budget)),
          overflow_(length - budget) {}

    std::size_t overflow() const { return overflow_; }

private:
    std::size_t overflow_;
};

/// bos + role_open + prompt + turn_separator + role_answer + target + eos,
/// with one loss span covering target + eos.
TrainingExample pack_example(std::string_view prompt, std::string_view target, const PromptTemplate& tmpl,
                             std::size_t budget, const LengthCounter& counter, ExampleMeta meta = {});

ExampleMeta meta_of(const AsmSample& sample);

}  // namespace asmqa
