#include "asmqa/negative_miner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "asmqa/digest.hpp"
#include "asmqa/error.hpp"
#include "asmqa/http_json.hpp"

namespace asmqa {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::vector<double> normalized(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorKind::data, "non-finite vector component");
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm == 0.0) throw Error(ErrorKind::data, "zero vector cannot be normalised");
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return out;
}

std::optional<std::size_t> EmbeddingIndex::row_of(std::string_view doc_id) const {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), doc_id);
    if (it == ids_.end() || *it != doc_id) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

EmbeddingIndex build_index(std::span<const Document> docs) {
    std::vector<std::string> missing;
    for (const auto& d : docs) {
        if (!d.embedding) missing.push_back(d.doc_id);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        throw Error(ErrorKind::data, std::to_string(missing.size()) + " documents lack embeddings: " + list);
    }

    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return docs[a].doc_id < docs[b].doc_id; });

    EmbeddingIndex index;
    index.dim_ = docs.empty() ? 0 : docs.front().embedding->size();
    index.ids_.reserve(docs.size());
    index.vectors_.reserve(docs.size() * index.dim_);
    for (std::size_t pos : order) {
        const Document& d = docs[pos];
        if (d.embedding->size() != index.dim_ || index.dim_ == 0) {
            throw Error(ErrorKind::data, "document " + d.doc_id + " has embedding dimension " +
                                             std::to_string(d.embedding->size()) + ", expected " + std::to_string(index.dim_));
        }
        if (!index.ids_.empty() && index.ids_.back() == d.doc_id) throw Error(ErrorKind::data, "duplicate doc_id " + d.doc_id);
        std::vector<double> unit;
        try {
            unit = normalized(*d.embedding);
        } catch (const Error& e) {
            throw Error(ErrorKind::data, "document " + d.doc_id + ": " + e.what());
        }
        index.ids_.push_back(d.doc_id);
        index.vectors_.insert(index.vectors_.end(), unit.begin(), unit.end());
    }

    Sha256 h;
    const std::uint64_t dim64 = index.dim_;
    h.update(&dim64, sizeof dim64);
    for (std::size_t row = 0; row < index.ids_.size(); ++row) {
        h.update(index.ids_[row]);
        h.update("\0", 1);
        const auto v = index.vector_at(row);
        h.update(v.data(), v.size() * sizeof(double));
    }
    index.fingerprint_ = h.hex_digest();
    return index;
}

std::map<std::string, EmbeddingIndex> build_indices(const CorpusStore& store, bool per_source) {
    std::map<std::string, std::vector<Document>> groups;
    for (const auto& [id, doc] : store.global_docs) groups[per_source ? doc.source : "*"].push_back(doc);
    std::map<std::string, EmbeddingIndex> out;
    for (auto& [source, docs] : groups) out.emplace(source, build_index(docs));
    return out;
}

std::vector<ScoredDoc> search_top_k(const EmbeddingIndex& index, std::span<const double> query, std::size_t k,
                                    const std::set<std::string>& exclude) {
    if (k == 0) throw Error(ErrorKind::precondition, "search_top_k requires k >= 1");
    if (query.size() != index.dim()) {
        throw Error(ErrorKind::data, "query dimension " + std::to_string(query.size()) + " != index dimension " +
                                         std::to_string(index.dim()));
    }
    const std::vector<double> q = normalized(query);

    struct Hit {
        double score;
        std::size_t row;
    };
    std::vector<Hit> hits;
    hits.reserve(index.size());
    for (std::size_t row = 0; row < index.size(); ++row) {
        if (!exclude.empty() && exclude.count(index.id_at(row)) != 0) continue;
        hits.push_back({dot(q, index.vector_at(row)), row});
    }
    // Rows are id-sorted, so the row number is the id tie-break.
    auto better = [](const Hit& a, const Hit& b) { return a.score != b.score ? a.score > b.score : a.row < b.row; };
    const std::size_t n = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(), better);

    std::vector<ScoredDoc> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({index.id_at(hits[i].row), hits[i].score});
    return out;
}

void validate(const MiningPlan& plan) {
    if (!(plan.retrieved_fraction >= 0.0 && plan.retrieved_fraction <= 1.0)) {
        throw Error(ErrorKind::config, "retrieved_fraction must lie in [0, 1]");
    }
    if (plan.negatives_per_sample && *plan.negatives_per_sample == 0) {
        throw Error(ErrorKind::config, "negatives_per_sample must be positive");
    }
    if (plan.candidate_pool == 0) throw Error(ErrorKind::config, "candidate_pool must be positive");
}

MiningResult mine_negatives(const QARecord& record, const EmbeddingIndex* index, const CorpusStore& store,
                            const MiningPlan& plan, bool use_retrieved, RngStream& rng) {
    const std::size_t wanted = plan.negatives_per_sample.value_or(plan.candidate_pool);
    std::set<std::string> positives;
    for (const auto& d : record.positive_docs) positives.insert(d.doc_id);

    MiningResult out;
    if (use_retrieved) {
        if (!record.question_embedding) {
            throw Error(ErrorKind::data, "record " + record.record_id + " has no question embedding for retrieval");
        }
        if (index == nullptr) throw Error(ErrorKind::data, "no embedding index for record " + record.record_id);
        for (auto& hit : search_top_k(*index, *record.question_embedding, wanted, positives)) {
            const Document* doc = store.find_doc(hit.doc_id);
            if (doc == nullptr) throw Error(ErrorKind::data, "indexed document " + hit.doc_id + " missing from corpus");
            out.docs.push_back(*doc);
            out.scores.push_back(hit.score);
        }
    } else {
        std::vector<const Document*> pool;
        for (const auto& d : record.candidate_negatives) {
            if (positives.count(d.doc_id) == 0) pool.push_back(&d);
        }
        const std::size_t take = std::min(wanted, pool.size());
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
            std::swap(pool[i], pool[j]);
            out.docs.push_back(*pool[i]);
        }
    }
    out.exhausted = out.docs.size() < wanted;
    return out;
}

std::vector<Embedding> embed_texts(const std::vector<std::string>& texts, const VectorEndpointSpec& spec) {
    if (spec.batch_size == 0) throw Error(ErrorKind::config, "vector endpoint batch_size must be positive");
    const HttpEndpoint endpoint = parse_endpoint(spec.url);
    const HttpOptions http{spec.retries, spec.timeout_seconds};
    std::vector<Embedding> out;
    out.reserve(texts.size());
    std::optional<std::size_t> dim;
    for (std::size_t begin = 0; begin < texts.size(); begin += spec.batch_size) {
        const std::size_t end = std::min(texts.size(), begin + spec.batch_size);
        Json batch = Json::array();
        for (std::size_t i = begin; i < end; ++i) batch.push_back(texts[i]);
        const Json response = post_json(endpoint, Json{{"texts", batch}}, http);
        const auto it = response.find("vectors");
        if (it == response.end() || !it->is_array() || it->size() != end - begin) {
            throw Error(ErrorKind::protocol, "vector endpoint returned a malformed or misaligned \"vectors\" array");
        }
        for (const auto& v : *it) {
            Embedding e;
            try {
                e = v.get<Embedding>();
            } catch (const Json::exception&) {
                throw Error(ErrorKind::protocol, "vector endpoint returned a non-numeric vector");
            }
            if (e.empty() || (dim && *dim != e.size())) throw Error(ErrorKind::protocol, "vector endpoint returned non-uniform dimensions");
            for (double x : e) {
                if (!std::isfinite(x)) throw Error(ErrorKind::protocol, "vector endpoint returned a non-finite value");
            }
            dim = e.size();
            out.push_back(std::move(e));
        }
    }
    return out;
}

CorpusStore with_embeddings(CorpusStore store, const VectorEndpointSpec& spec) {
    std::vector<std::string> doc_ids;
    std::vector<std::string> texts;
    for (const auto& [id, doc] : store.global_docs) {
        if (!doc.embedding) {
            doc_ids.push_back(id);
            texts.push_back(doc.text);
        }
    }
    std::vector<std::size_t> record_rows;
    for (std::size_t i = 0; i < store.records.size(); ++i) {
        if (!store.records[i].question_embedding) {
            record_rows.push_back(i);
            texts.push_back(store.records[i].question);
        }
    }
    if (texts.empty()) return store;

    auto vectors = embed_texts(texts, spec);
    if (store.embedding_dim && !vectors.empty() && vectors.front().size() != *store.embedding_dim) {
        throw Error(ErrorKind::protocol, "vector endpoint dimension differs from the corpus embedding dimension");
    }
    if (!vectors.empty()) store.embedding_dim = vectors.front().size();
    for (std::size_t i = 0; i < doc_ids.size(); ++i) store.global_docs[doc_ids[i]].embedding = vectors[i];
    for (std::size_t i = 0; i < record_rows.size(); ++i) store.records[record_rows[i]].question_embedding = vectors[doc_ids.size() + i];
    for (auto& r : store.records) {
        for (auto* docs : {&r.positive_docs, &r.candidate_negatives}) {
            for (auto& d : *docs) d.embedding = store.global_docs.at(d.doc_id).embedding;
        }
    }
    return store;
}

}  // namespace asmqa
