#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asmqa/jsonl.hpp"

namespace asmqa {

using Embedding = std::vector<double>;

struct Document {
    std::string doc_id;
    std::string text;
    std::string source;
    std::optional<Embedding> embedding;

    bool operator==(const Document&) const = default;
};

struct QARecord {
    std::string record_id;
    std::string question;
    std::vector<std::string> gold_answers;
    std::vector<Document> positive_docs;
    std::vector<Document> candidate_negatives;
    std::optional<double> quality_score;
    /// Name of the corpus this record was ingested from ("dureader", "t2rank", ...).
    std::string source;
    std::optional<std::string> category;
    std::optional<Embedding> question_embedding;

    bool operator==(const QARecord&) const = default;
};

struct CorpusStore {
    std::vector<QARecord> records;
    std::map<std::string, Document> global_docs;
    std::optional<std::size_t> embedding_dim;

    const Document* find_doc(std::string_view doc_id) const;
    bool operator==(const CorpusStore&) const = default;
};

struct Violation {
    std::string field;
    std::string rule;

    bool operator==(const Violation&) const = default;
};

/// All QARecord invariants breached by `record`; empty iff valid.
std::vector<Violation> validate_record(const QARecord& record);

enum class CorpusFormat { canonical, dureader, webcpm, t2rank };

CorpusFormat parse_corpus_format(std::string_view tag);
std::string_view to_string(CorpusFormat format);

/// Record-selection predicates applied after validation.
struct IngestFilter {
    std::optional<std::string> category;  // keep only records whose category equals this
    bool single_answer_only = false;

    bool operator==(const IngestFilter&) const = default;
};

struct IngestOptions {
    IngestFilter filter;
    /// Overrides the default source name (the format tag).
    std::optional<std::string> source_name;
    /// Declared embedding dimension; inferred from the first embedding when unset.
    std::optional<std::size_t> embedding_dim;
    std::size_t workers = 1;
};

struct SkippedLine {
    std::size_t line_number;  // 1-based
    std::string reason;
};

struct IngestStats {
    std::size_t lines = 0;     // non-blank lines seen
    std::size_t kept = 0;
    std::size_t invalid = 0;   // parse or validation failures
    std::size_t filtered = 0;  // valid but rejected by IngestFilter
    std::vector<SkippedLine> skipped;
};

struct IngestResult {
    CorpusStore store;
    IngestStats stats;
};

/// Ingests a JSON-lines corpus file.
///
/// Invalid lines are skipped and counted. Throws Error{io} when the file is
/// unreadable and Error{data} when more than half the lines are invalid,
/// which almost always means the wrong format tag.
IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format, const IngestOptions& options = {});

/// Same as ingest_corpus, over in-memory lines.
IngestResult ingest_lines(const std::vector<std::string>& lines, CorpusFormat format, const IngestOptions& options = {});

/// Merges several stores; record ids and doc ids must not conflict.
CorpusStore merge_stores(std::vector<CorpusStore> stores);

Json to_json(const Document& doc);
Json to_json(const QARecord& record);
Document document_from_json(const Json& j);
QARecord record_from_json(const Json& j);

/// Writes the store as canonical JSON-lines.
void export_canonical(const CorpusStore& store, const std::filesystem::path& path);

/// Content-derived id for documents that arrive without one.
std::string content_doc_id(std::string_view text, std::size_t ordinal);

}  // namespace asmqa
