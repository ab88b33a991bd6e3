#include "asmqa/corpus.hpp"

#include <set>
#include <sstream>
#include <unordered_map>

#include "asmqa/digest.hpp"
#include "asmqa/error.hpp"
#include "asmqa/parallel.hpp"

namespace asmqa {

const Document* CorpusStore::find_doc(std::string_view doc_id) const {
    auto it = global_docs.find(std::string(doc_id));
    return it == global_docs.end() ? nullptr : &it->second;
}

std::vector<Violation> validate_record(const QARecord& record) {
    std::vector<Violation> out;
    if (record.record_id.empty()) out.push_back({"record_id", "nonempty"});
    if (record.question.empty()) out.push_back({"question", "nonempty"});
    if (record.gold_answers.empty()) {
        out.push_back({"gold_answers", "nonempty"});
    } else {
        for (std::size_t i = 0; i < record.gold_answers.size(); ++i) {
            if (record.gold_answers[i].empty()) out.push_back({"gold_answers[" + std::to_string(i) + "]", "nonempty"});
        }
    }
    if (record.positive_docs.empty()) out.push_back({"positive_docs", "nonempty"});

    std::set<std::string> positive_ids;
    for (std::size_t i = 0; i < record.positive_docs.size(); ++i) {
        const auto& d = record.positive_docs[i];
        const std::string where = "positive_docs[" + std::to_string(i) + "]";
        if (d.doc_id.empty()) out.push_back({where + ".doc_id", "nonempty"});
        if (d.text.empty()) out.push_back({where + ".text", "nonempty"});
        if (!d.doc_id.empty() && !positive_ids.insert(d.doc_id).second) out.push_back({where + ".doc_id", "unique"});
    }
    std::set<std::string> negative_ids;
    for (std::size_t i = 0; i < record.candidate_negatives.size(); ++i) {
        const auto& d = record.candidate_negatives[i];
        const std::string where = "candidate_negatives[" + std::to_string(i) + "]";
        if (d.doc_id.empty()) out.push_back({where + ".doc_id", "nonempty"});
        if (d.text.empty()) out.push_back({where + ".text", "nonempty"});
        if (d.doc_id.empty()) continue;
        if (positive_ids.count(d.doc_id) != 0) {
            out.push_back({where + ".doc_id", "disjoint_from_positives"});
        } else if (!negative_ids.insert(d.doc_id).second) {
            out.push_back({where + ".doc_id", "unique"});
        }
    }
    return out;
}

CorpusFormat parse_corpus_format(std::string_view tag) {
    if (tag == "canonical") return CorpusFormat::canonical;
    if (tag == "dureader") return CorpusFormat::dureader;
    if (tag == "webcpm") return CorpusFormat::webcpm;
    if (tag == "t2rank") return CorpusFormat::t2rank;
    throw Error(ErrorKind::config, "unknown corpus format '" + std::string(tag) + "'");
}

std::string_view to_string(CorpusFormat format) {
    switch (format) {
        case CorpusFormat::canonical: return "canonical";
        case CorpusFormat::dureader: return "dureader";
        case CorpusFormat::webcpm: return "webcpm";
        case CorpusFormat::t2rank: return "t2rank";
    }
    return "canonical";
}

std::string content_doc_id(std::string_view text, std::size_t ordinal) {
    return "h" + sha256_hex(text).substr(0, 16) + "-" + std::to_string(ordinal);
}

// ---------------------------------------------------------------------------
// JSON mapping

Json to_json(const Document& doc) {
    Json j = {{"doc_id", doc.doc_id}, {"text", doc.text}};
    if (!doc.source.empty()) j["source"] = doc.source;
    if (doc.embedding) j["embedding"] = *doc.embedding;
    return j;
}

Json to_json(const QARecord& r) {
    Json j;
    j["record_id"] = r.record_id;
    j["question"] = r.question;
    j["gold_answers"] = r.gold_answers;
    j["positive_docs"] = Json::array();
    for (const auto& d : r.positive_docs) j["positive_docs"].push_back(to_json(d));
    j["candidate_negatives"] = Json::array();
    for (const auto& d : r.candidate_negatives) j["candidate_negatives"].push_back(to_json(d));
    if (r.quality_score) j["quality_score"] = *r.quality_score;
    if (!r.source.empty()) j["source"] = r.source;
    if (r.category) j["category"] = *r.category;
    if (r.question_embedding) j["question_embedding"] = *r.question_embedding;
    return j;
}

namespace {

std::string string_field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    return it->get<std::string>();
}

std::vector<std::string> string_list(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (it->is_string()) return {it->get<std::string>()};
    return it->get<std::vector<std::string>>();
}

std::optional<Embedding> embedding_field(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<Embedding>();
}

std::vector<Document> doc_list(const Json& j, const char* key) {
    std::vector<Document> out;
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return out;
    for (const auto& d : *it) out.push_back(document_from_json(d));
    return out;
}

}  // namespace

Document document_from_json(const Json& j) {
    Document d;
    d.doc_id = string_field(j, "doc_id");
    d.text = string_field(j, "text");
    d.source = string_field(j, "source");
    d.embedding = embedding_field(j, "embedding");
    return d;
}

QARecord record_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::data, "record is not a JSON object");
    QARecord r;
    r.record_id = string_field(j, "record_id");
    r.question = string_field(j, "question");
    r.gold_answers = string_list(j, "gold_answers");
    r.positive_docs = doc_list(j, "positive_docs");
    r.candidate_negatives = doc_list(j, "candidate_negatives");
    if (auto it = j.find("quality_score"); it != j.end() && !it->is_null()) r.quality_score = it->get<double>();
    r.source = string_field(j, "source");
    if (auto it = j.find("category"); it != j.end() && !it->is_null()) r.category = it->get<std::string>();
    r.question_embedding = embedding_field(j, "question_embedding");
    return r;
}

// ---------------------------------------------------------------------------
// Source adapters. Each maps one raw line onto a QARecord; docs may come back
// with an empty doc_id, which the merge step replaces with a content id.

namespace {

// DuReader 2.0: {"question_id", "question", "fact_or_opinion", "answers": [...],
//   "documents": [{"title", "paragraphs": [...], "is_selected"}]}
QARecord from_dureader(const Json& j, std::size_t line_no) {
    QARecord r;
    const std::string qid = string_field(j, "question_id");
    r.record_id = "dureader-" + (qid.empty() ? "L" + std::to_string(line_no) : qid);
    r.question = string_field(j, "question");
    r.gold_answers = string_list(j, "answers");
    if (auto it = j.find("fact_or_opinion"); it != j.end() && it->is_string()) r.category = it->get<std::string>();
    if (auto it = j.find("documents"); it != j.end()) {
        for (const auto& raw : *it) {
            Document d;
            d.doc_id = string_field(raw, "doc_id");
            const std::string title = string_field(raw, "title");
            std::string body;
            for (const auto& p : string_list(raw, "paragraphs")) {
                if (!body.empty()) body += '\n';
                body += p;
            }
            d.text = title.empty() ? body : (body.empty() ? title : title + '\n' + body);
            const bool selected = raw.value("is_selected", false);
            (selected ? r.positive_docs : r.candidate_negatives).push_back(std::move(d));
        }
    }
    return r;
}

// WebCPM long-form QA: {"id", "question", "answer", "supporting_facts": [...],
//   "negative_facts": [...], "category"}
QARecord from_webcpm(const Json& j, std::size_t line_no) {
    QARecord r;
    const std::string id = string_field(j, "id");
    r.record_id = "webcpm-" + (id.empty() ? "L" + std::to_string(line_no) : id);
    r.question = string_field(j, "question");
    r.gold_answers = j.contains("answers") ? string_list(j, "answers") : string_list(j, "answer");
    if (auto it = j.find("category"); it != j.end() && it->is_string()) r.category = it->get<std::string>();
    for (auto& text : string_list(j, "supporting_facts")) r.positive_docs.push_back({{}, std::move(text), {}, {}});
    for (auto& text : string_list(j, "negative_facts")) r.candidate_negatives.push_back({{}, std::move(text), {}, {}});
    return r;
}

// T2Ranking: {"qid", "query", "positive_passages": [{"pid", "text"}],
//   "negative_passages": [...], "answers"?}. Passage relevance has no answer
// text, so the first positive passage stands in as the gold answer.
QARecord from_t2rank(const Json& j, std::size_t line_no) {
    QARecord r;
    const std::string qid = string_field(j, "qid");
    r.record_id = "t2rank-" + (qid.empty() ? "L" + std::to_string(line_no) : qid);
    r.question = string_field(j, "query");
    auto passages = [&](const char* key, std::vector<Document>& into) {
        if (auto it = j.find(key); it != j.end()) {
            for (const auto& raw : *it) {
                Document d;
                d.doc_id = string_field(raw, "pid");
                d.text = string_field(raw, "text");
                d.embedding = embedding_field(raw, "embedding");
                into.push_back(std::move(d));
            }
        }
    };
    passages("positive_passages", r.positive_docs);
    passages("negative_passages", r.candidate_negatives);
    r.gold_answers = string_list(j, "answers");
    if (r.gold_answers.empty() && !r.positive_docs.empty()) r.gold_answers.push_back(r.positive_docs.front().text);
    r.question_embedding = embedding_field(j, "query_embedding");
    return r;
}

struct ParsedLine {
    std::size_t line_number = 0;
    std::optional<QARecord> record;
    std::string error;
};

ParsedLine parse_line(const std::string& line, std::size_t line_number, CorpusFormat format, const std::string& source) {
    ParsedLine out;
    out.line_number = line_number;
    try {
        const Json j = Json::parse(line);
        if (!j.is_object()) throw Error(ErrorKind::data, "line is not a JSON object");
        QARecord r;
        switch (format) {
            case CorpusFormat::canonical: r = record_from_json(j); break;
            case CorpusFormat::dureader: r = from_dureader(j, line_number); break;
            case CorpusFormat::webcpm: r = from_webcpm(j, line_number); break;
            case CorpusFormat::t2rank: r = from_t2rank(j, line_number); break;
        }
        if (r.source.empty()) r.source = source;
        for (auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (auto& d : *docs) {
                if (d.source.empty()) d.source = r.source;
            }
        }
        out.record = std::move(r);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::string describe(const std::vector<Violation>& violations) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) ss << "; ";
        ss << violations[i].field << ": " << violations[i].rule;
    }
    return ss.str();
}

class ContentIdAssigner {
public:
    std::string assign(const std::string& text) {
        const std::string prefix = sha256_hex(text).substr(0, 16);
        auto& texts = by_prefix_[prefix];
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (texts[i] == text) return "h" + prefix + "-" + std::to_string(i);
        }
        texts.push_back(text);
        return "h" + prefix + "-" + std::to_string(texts.size() - 1);
    }

private:
    std::unordered_map<std::string, std::vector<std::string>> by_prefix_;
};

}  // namespace

IngestResult ingest_lines(const std::vector<std::string>& lines, CorpusFormat format, const IngestOptions& options) {
    const std::string source = options.source_name.value_or(std::string(to_string(format)));

    std::vector<std::size_t> line_index;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].find_first_not_of(" \t\r") != std::string::npos) line_index.push_back(i);
    }

    std::vector<ParsedLine> parsed(line_index.size());
    parallel_for(line_index.size(), options.workers, [&](std::size_t i) {
        parsed[i] = parse_line(lines[line_index[i]], line_index[i] + 1, format, source);
    });

    IngestResult result;
    auto& store = result.store;
    auto& stats = result.stats;
    store.embedding_dim = options.embedding_dim;
    stats.lines = parsed.size();

    ContentIdAssigner ids;
    std::set<std::string> record_ids;
    auto skip = [&](const ParsedLine& p, std::string reason) {
        ++stats.invalid;
        stats.skipped.push_back({p.line_number, std::move(reason)});
    };

    for (auto& p : parsed) {
        if (!p.record) {
            skip(p, "parse: " + p.error);
            continue;
        }
        QARecord& r = *p.record;
        for (auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (auto& d : *docs) {
                if (d.doc_id.empty() && !d.text.empty()) d.doc_id = ids.assign(d.text);
            }
        }
        if (auto violations = validate_record(r); !violations.empty()) {
            skip(p, describe(violations));
            continue;
        }
        if (record_ids.count(r.record_id) != 0) {
            skip(p, "record_id: unique");
            continue;
        }

        // Embedding dimension, checked against the declared or first-seen dim.
        std::optional<std::size_t> dim = store.embedding_dim;
        std::string dim_error;
        auto check_dim = [&](const std::optional<Embedding>& e, const std::string& what) {
            if (!e || !dim_error.empty()) return;
            if (e->empty()) {
                dim_error = what + ": empty embedding";
            } else if (!dim) {
                dim = e->size();
            } else if (*dim != e->size()) {
                dim_error = what + ": embedding dimension " + std::to_string(e->size()) + " != " + std::to_string(*dim);
            }
        };
        check_dim(r.question_embedding, "question_embedding");
        for (const auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (const auto& d : *docs) check_dim(d.embedding, d.doc_id);
        }
        if (!dim_error.empty()) {
            skip(p, dim_error);
            continue;
        }

        std::string conflict;
        for (const auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (const auto& d : *docs) {
                const Document* known = store.find_doc(d.doc_id);
                if (known == nullptr) continue;
                if (known->text != d.text || (known->embedding && d.embedding && *known->embedding != *d.embedding)) {
                    conflict = d.doc_id + ": conflicts with an earlier document of the same id";
                }
            }
        }
        if (!conflict.empty()) {
            skip(p, conflict);
            continue;
        }

        const auto& f = options.filter;
        if ((f.category && r.category != f.category) || (f.single_answer_only && r.gold_answers.size() != 1)) {
            ++stats.filtered;
            continue;
        }

        store.embedding_dim = dim;
        for (const auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (const auto& d : *docs) store.global_docs.emplace(d.doc_id, d);
        }
        record_ids.insert(r.record_id);
        store.records.push_back(std::move(r));
        ++stats.kept;
    }

    if (stats.lines > 0 && stats.invalid * 2 > stats.lines) {
        throw Error(ErrorKind::data, std::to_string(stats.invalid) + " of " + std::to_string(stats.lines) +
                                         " lines invalid for format '" + std::string(to_string(format)) +
                                         "'; first: line " + std::to_string(stats.skipped.front().line_number) + ": " +
                                         stats.skipped.front().reason);
    }
    return result;
}

IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format, const IngestOptions& options) {
    return ingest_lines(read_lines(path), format, options);
}

CorpusStore merge_stores(std::vector<CorpusStore> stores) {
    CorpusStore out;
    std::set<std::string> record_ids;
    for (auto& s : stores) {
        if (s.embedding_dim) {
            if (out.embedding_dim && *out.embedding_dim != *s.embedding_dim) {
                throw Error(ErrorKind::data, "cannot merge corpora with different embedding dimensions");
            }
            out.embedding_dim = s.embedding_dim;
        }
        for (auto& [id, doc] : s.global_docs) {
            auto [it, inserted] = out.global_docs.emplace(id, doc);
            if (!inserted && it->second.text != doc.text) {
                throw Error(ErrorKind::data, "doc_id " + id + " has different text in two corpora");
            }
        }
        for (auto& r : s.records) {
            if (!record_ids.insert(r.record_id).second) throw Error(ErrorKind::data, "duplicate record_id " + r.record_id);
            out.records.push_back(std::move(r));
        }
    }
    return out;
}

void export_canonical(const CorpusStore& store, const std::filesystem::path& path) {
    JsonlWriter w(path);
    for (const auto& r : store.records) w.write(to_json(r));
    w.close();
}

}  // namespace asmqa
