#include "asmqa/sample.hpp"

#include "asmqa/error.hpp"

namespace asmqa {

std::string_view to_string(SampleKind kind) {
    switch (kind) {
        case SampleKind::standard: return "standard";
        case SampleKind::relevance_mrc: return "relevance_mrc";
        case SampleKind::synthetic_unknown: return "synthetic_unknown";
    }
    return "standard";
}

std::string_view to_string(StrategyTag tag) {
    switch (tag) {
        case StrategyTag::retrieved_neg: return "retrieved_neg";
        case StrategyTag::random_neg: return "random_neg";
        case StrategyTag::shuffled: return "shuffled";
        case StrategyTag::ordered: return "ordered";
    }
    return "ordered";
}

SampleKind parse_sample_kind(std::string_view tag) {
    if (tag == "standard") return SampleKind::standard;
    if (tag == "relevance_mrc") return SampleKind::relevance_mrc;
    if (tag == "synthetic_unknown") return SampleKind::synthetic_unknown;
    throw Error(ErrorKind::data, "unknown sample kind '" + std::string(tag) + "'");
}

StrategyTag parse_strategy_tag(std::string_view tag) {
    if (tag == "retrieved_neg") return StrategyTag::retrieved_neg;
    if (tag == "random_neg") return StrategyTag::random_neg;
    if (tag == "shuffled") return StrategyTag::shuffled;
    if (tag == "ordered") return StrategyTag::ordered;
    throw Error(ErrorKind::data, "unknown strategy tag '" + std::string(tag) + "'");
}

Json to_json(const AsmSample& s) {
    Json docs = Json::array();
    for (const auto& d : s.arranged_docs) {
        // Embeddings stay in the corpus; samples only carry what renders.
        docs.push_back({{"doc_id", d.doc_id}, {"text", d.text}, {"source", d.source}});
    }
    Json tags = Json::array();
    for (auto t : s.strategy_tags) tags.push_back(to_string(t));
    return {
        {"sample_id", s.sample_id},
        {"kind", to_string(s.kind)},
        {"question", s.question},
        {"arranged_docs", std::move(docs)},
        {"positive_positions", s.positive_positions},
        {"target_question", s.target_question},
        {"target_answer", s.target_answer},
        {"length_budget", s.length_budget},
        {"strategy_tags", std::move(tags)},
    };
}

AsmSample sample_from_json(const Json& j) {
    try {
        AsmSample s;
        s.sample_id = j.at("sample_id").get<std::string>();
        s.kind = parse_sample_kind(j.at("kind").get<std::string>());
        s.question = j.at("question").get<std::string>();
        for (const auto& d : j.at("arranged_docs")) s.arranged_docs.push_back(document_from_json(d));
        s.positive_positions = j.at("positive_positions").get<std::vector<std::size_t>>();
        s.target_question = j.value("target_question", s.question);
        s.target_answer = j.value("target_answer", std::string());
        s.length_budget = j.at("length_budget").get<std::size_t>();
        for (const auto& t : j.value("strategy_tags", Json::array())) s.strategy_tags.insert(parse_strategy_tag(t.get<std::string>()));
        return s;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed sample: ") + e.what());
    }
}

}  // namespace asmqa
