#include "asmqa/quality_filter.hpp"

#include <cmath>

#include "asmqa/error.hpp"
#include "asmqa/http_json.hpp"
#include "asmqa/parallel.hpp"

namespace asmqa {

ScorerMode parse_scorer_mode(std::string_view tag) {
    if (tag == "precomputed_field") return ScorerMode::precomputed_field;
    if (tag == "remote_endpoint") return ScorerMode::remote_endpoint;
    if (tag == "constant") return ScorerMode::constant;
    throw Error(ErrorKind::config, "unknown scorer mode '" + std::string(tag) + "'");
}

std::string_view to_string(ScorerMode mode) {
    switch (mode) {
        case ScorerMode::precomputed_field: return "precomputed_field";
        case ScorerMode::remote_endpoint: return "remote_endpoint";
        case ScorerMode::constant: return "constant";
    }
    return "precomputed_field";
}

void validate(const ScorerSpec& spec) {
    if (spec.batch_size == 0) throw Error(ErrorKind::config, "scorer batch_size must be positive");
    if (spec.mode == ScorerMode::remote_endpoint) {
        if (!spec.endpoint_url || spec.endpoint_url->empty()) {
            throw Error(ErrorKind::config, "remote_endpoint scorer requires endpoint_url");
        }
        parse_endpoint(*spec.endpoint_url);
    }
    if (spec.retries < 0) throw Error(ErrorKind::config, "scorer retries must be >= 0");
}

std::string score_text(const QARecord& record, std::string_view text_template) {
    const std::string answer = record.gold_answers.empty() ? std::string() : record.gold_answers.front();
    std::string out;
    out.reserve(text_template.size() + record.question.size() + answer.size());
    for (std::size_t i = 0; i < text_template.size();) {
        if (text_template.compare(i, 10, "{question}") == 0) {
            out += record.question;
            i += 10;
        } else if (text_template.compare(i, 8, "{answer}") == 0) {
            out += answer;
            i += 8;
        } else {
            out += text_template[i++];
        }
    }
    return out;
}

std::vector<QARecord> attach_scores(std::vector<QARecord> records, const ScorerSpec& scorer) {
    validate(scorer);
    switch (scorer.mode) {
        case ScorerMode::constant:
            for (auto& r : records) r.quality_score = scorer.constant_value;
            return records;
        case ScorerMode::precomputed_field:
            for (const auto& r : records) {
                if (!r.quality_score) throw Error(ErrorKind::data, "record " + r.record_id + " has no precomputed quality_score");
            }
            return records;
        case ScorerMode::remote_endpoint:
            break;
    }

    const HttpEndpoint endpoint = parse_endpoint(*scorer.endpoint_url);
    const HttpOptions http{scorer.retries, scorer.timeout_seconds};
    const std::size_t n_batches = (records.size() + scorer.batch_size - 1) / scorer.batch_size;

    // Each batch writes only its own slice, so reassembly is in input order.
    parallel_for(n_batches, scorer.max_in_flight, [&](std::size_t b) {
        const std::size_t begin = b * scorer.batch_size;
        const std::size_t end = std::min(records.size(), begin + scorer.batch_size);
        Json texts = Json::array();
        for (std::size_t i = begin; i < end; ++i) texts.push_back(score_text(records[i], scorer.text_template));
        const Json response = post_json(endpoint, Json{{"texts", texts}}, http);
        const auto it = response.find("scores");
        if (it == response.end() || !it->is_array()) throw Error(ErrorKind::protocol, "score response lacks a \"scores\" array");
        if (it->size() != end - begin) {
            throw Error(ErrorKind::protocol, "score endpoint returned " + std::to_string(it->size()) + " scores for " +
                                                 std::to_string(end - begin) + " texts");
        }
        for (std::size_t i = begin; i < end; ++i) {
            const Json& s = (*it)[i - begin];
            if (!s.is_number() || !std::isfinite(s.get<double>())) {
                throw Error(ErrorKind::protocol, "score endpoint returned a non-finite score");
            }
            records[i].quality_score = s.get<double>();
        }
    });
    return records;
}

std::vector<QARecord> filter_by_threshold(const std::vector<QARecord>& records, double threshold) {
    std::vector<QARecord> kept;
    for (const auto& r : records) {
        if (!r.quality_score) throw Error(ErrorKind::precondition, "record " + r.record_id + " is unscored");
        if (*r.quality_score >= threshold) kept.push_back(r);
    }
    return kept;
}

}  // namespace asmqa
