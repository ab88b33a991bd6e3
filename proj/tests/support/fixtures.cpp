#include "fixtures.hpp"

#include "asmqa/unicode.hpp"

namespace asmqa::testkit {

TempDir::TempDir() {
    std::random_device rd;
    for (;;) {
        path_ = std::filesystem::temp_directory_path() / ("asmqa-test-" + std::to_string(rd()));
        if (std::filesystem::create_directory(path_)) break;
    }
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

std::string random_cjk(std::mt19937_64& g, std::size_t length, std::size_t alphabet) {
    std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(alphabet - 1));
    std::string out;
    for (std::size_t i = 0; i < length; ++i) unicode::append(out, static_cast<char32_t>(0x4E00 + pick(g)));
    return out;
}

std::vector<double> random_vector(std::mt19937_64& g, std::size_t dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = n(g);
    return v;
}

CorpusStore toy_store(std::size_t n_records, std::uint64_t seed, const ToyOptions& o) {
    std::mt19937_64 g(seed);
    auto between = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(g); };
    CorpusStore store;
    if (o.embeddings) store.embedding_dim = o.dim;
    for (std::size_t i = 0; i < n_records; ++i) {
        QARecord r;
        r.record_id = "r" + std::to_string(i);
        r.question = random_cjk(g, between(5, 15)) + "？";
        r.gold_answers = {random_cjk(g, between(2, 8))};
        r.source = o.source;
        if (o.embeddings) r.question_embedding = random_vector(g, o.dim);
        auto make = [&](const std::string& id) {
            Document d{id, random_cjk(g, between(o.min_doc_chars, o.max_doc_chars)), o.source, std::nullopt};
            if (o.embeddings) d.embedding = random_vector(g, o.dim);
            store.global_docs.emplace(d.doc_id, d);
            return d;
        };
        const std::size_t np = between(o.min_positives, o.max_positives);
        for (std::size_t j = 0; j < np; ++j) r.positive_docs.push_back(make(r.record_id + "-p" + std::to_string(j)));
        const std::size_t nn = between(o.min_negatives, o.max_negatives);
        for (std::size_t j = 0; j < nn; ++j) r.candidate_negatives.push_back(make(r.record_id + "-n" + std::to_string(j)));
        store.records.push_back(std::move(r));
    }
    return store;
}

}  // namespace asmqa::testkit
