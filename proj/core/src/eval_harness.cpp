#include "asmqa/eval_harness.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "asmqa/parallel.hpp"
#include "asmqa/unicode.hpp"

namespace asmqa {

TokenMode parse_token_mode(std::string_view tag) {
    if (tag == "char") return TokenMode::char_units;
    if (tag == "whitespace") return TokenMode::whitespace;
    if (tag == "auto") return TokenMode::auto_detect;
    throw Error(ErrorKind::config, "unknown token mode '" + std::string(tag) + "'");
}

std::string_view to_string(TokenMode mode) {
    switch (mode) {
        case TokenMode::char_units: return "char";
        case TokenMode::whitespace: return "whitespace";
        case TokenMode::auto_detect: return "auto";
    }
    return "auto";
}

namespace {

// Char units drop whitespace so layout differences do not count as misses.
std::u32string char_units(std::string_view text) {
    std::u32string out;
    for (char32_t cp : unicode::decode(text)) {
        if (!unicode::is_space(cp)) out.push_back(cp);
    }
    return out;
}

bool cjk_dominant(std::string_view text) {
    std::size_t cjk = 0;
    std::size_t total = 0;
    for (char32_t cp : unicode::decode(text)) {
        if (unicode::is_space(cp)) continue;
        ++total;
        if (unicode::is_cjk(cp)) ++cjk;
    }
    return total > 0 && cjk * 2 >= total;
}

double f_measure(std::size_t lcs, std::size_t hyp_len, std::size_t ref_len) {
    if (lcs == 0 || hyp_len == 0 || ref_len == 0) return 0.0;
    const double p = static_cast<double>(lcs) / static_cast<double>(hyp_len);
    const double r = static_cast<double>(lcs) / static_cast<double>(ref_len);
    return 2.0 * p * r / (p + r);
}

}  // namespace

double rouge_l(std::string_view hypothesis, std::string_view reference, TokenMode mode) {
    if (mode == TokenMode::auto_detect) mode = cjk_dominant(reference) ? TokenMode::char_units : TokenMode::whitespace;
    if (mode == TokenMode::char_units) {
        const auto h = char_units(hypothesis);
        const auto r = char_units(reference);
        return f_measure(lcs_length(h, r), h.size(), r.size());
    }
    const auto h = unicode::split_whitespace(hypothesis);
    const auto r = unicode::split_whitespace(reference);
    return f_measure(lcs_length(h, r), h.size(), r.size());
}

double rouge_l_max(std::string_view hypothesis, const std::vector<std::string>& references, TokenMode mode) {
    if (references.empty()) throw Error(ErrorKind::precondition, "rouge_l_max needs at least one reference");
    double best = 0.0;
    for (const auto& ref : references) best = std::max(best, rouge_l(hypothesis, ref, mode));
    return best;
}

std::string normalize_for_em(std::string_view text) {
    std::string out;
    for (char32_t cp : unicode::decode(text)) {
        if (unicode::is_space(cp)) continue;
        unicode::append(out, unicode::fold_digit_width(cp));
    }
    return out;
}

int em_retrieval(std::string_view prediction, std::string_view gold_label) {
    const std::string gold = normalize_for_em(gold_label);
    if (gold.empty()) return 0;
    return normalize_for_em(prediction).find(gold) != std::string::npos ? 1 : 0;
}

IndexMetrics index_prediction_metrics(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& gold) {
    const std::set<std::size_t> p(predicted.begin(), predicted.end());
    const std::set<std::size_t> g(gold.begin(), gold.end());
    if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
    if (p.empty() || g.empty()) return {0.0, 0.0, 0.0};
    std::size_t hit = 0;
    for (auto x : p) hit += g.count(x);
    IndexMetrics m;
    m.precision = static_cast<double>(hit) / static_cast<double>(p.size());
    m.recall = static_cast<double>(hit) / static_cast<double>(g.size());
    m.f1 = hit == 0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

// ---------------------------------------------------------------------------

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
    return !suffix.empty() && s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::vector<std::size_t> parse_indices(std::string_view segment) {
    std::vector<std::size_t> out;
    std::size_t value = 0;
    bool in_number = false;
    for (char32_t cp : unicode::decode(segment)) {
        cp = unicode::fold_digit_width(cp);
        if (cp >= U'0' && cp <= U'9') {
            if (value < 1'000'000) value = value * 10 + static_cast<std::size_t>(cp - U'0');
            in_number = true;
        } else if (in_number) {
            out.push_back(value);
            value = 0;
            in_number = false;
        }
    }
    if (in_number) out.push_back(value);
    return out;
}

}  // namespace

ParsedOutput parse_asm_output(std::string_view output, const PromptTemplate& t) {
    constexpr auto npos = std::string_view::npos;
    std::string_view text = output;
    if (ends_with(text, t.eos)) text.remove_suffix(t.eos.size());

    ParsedOutput out;
    const std::size_t p1 = t.prefix1.empty() ? npos : text.find(t.prefix1);
    const std::size_t body = p1 == npos ? 0 : p1 + t.prefix1.size();
    const std::size_t p2 = t.prefix2.empty() ? npos : text.find(t.prefix2, body);
    const std::size_t after_p2 = p2 == npos ? body : p2 + t.prefix2.size();
    std::size_t p3 = t.prefix3.empty() ? npos : text.rfind(t.prefix3);
    if (p3 != npos && p3 < after_p2) p3 = npos;

    if (p1 == npos && p2 == npos && p3 == npos) {
        out.answer = std::string(text);
        return out;
    }

    if (p1 != npos) {
        const std::size_t end = p2 != npos ? p2 : p3;
        if (end != npos) {
            std::string_view echo = text.substr(body, end - body);
            if (ends_with(echo, t.question_close)) echo.remove_suffix(t.question_close.size());
            out.question_echo = std::string(echo);
        } else {
            // Question echo followed directly by the answer (the unknown form).
            std::string_view rest = text.substr(body);
            const std::size_t close = t.question_close.empty() ? npos : rest.rfind(t.question_close);
            if (close == npos) {
                out.question_echo = std::string(rest);
            } else {
                out.question_echo = std::string(rest.substr(0, close));
                out.answer = std::string(rest.substr(close + t.question_close.size()));
            }
        }
    }
    if (p2 != npos) {
        const std::size_t end = p3 != npos ? p3 : text.size();
        out.positions = parse_indices(text.substr(after_p2, end - after_p2));
    }
    if (p3 != npos) out.answer = std::string(text.substr(p3 + t.prefix3.size()));
    return out;
}

// ---------------------------------------------------------------------------

EvalTask parse_eval_task(std::string_view tag) {
    if (tag == "multidoc_qa") return EvalTask::multidoc_qa;
    if (tag == "synthesis") return EvalTask::synthesis;
    if (tag == "summarization") return EvalTask::summarization;
    throw Error(ErrorKind::config, "unknown eval task '" + std::string(tag) + "'");
}

std::string_view to_string(EvalTask task) {
    switch (task) {
        case EvalTask::multidoc_qa: return "multidoc_qa";
        case EvalTask::synthesis: return "synthesis";
        case EvalTask::summarization: return "summarization";
    }
    return "multidoc_qa";
}

Perturbation parse_perturbation(std::string_view tag) {
    if (tag == "none") return Perturbation::none;
    if (tag == "shuffled_first_10") return Perturbation::shuffled_first_10;
    throw Error(ErrorKind::config, "unknown perturbation '" + std::string(tag) + "'");
}

std::string_view to_string(Perturbation p) {
    return p == Perturbation::none ? "none" : "shuffled_first_10";
}

Json to_json(const EvalItem& item) {
    Json docs = Json::array();
    for (const auto& d : item.docs) docs.push_back(to_json(d));
    Json j = {{"item_id", item.item_id}, {"question", item.question}, {"docs", std::move(docs)}, {"gold_answers", item.gold_answers}};
    if (item.gold_positive_positions) j["gold_positive_positions"] = *item.gold_positive_positions;
    if (item.gold_retrieval_label) j["gold_retrieval_label"] = *item.gold_retrieval_label;
    return j;
}

EvalItem eval_item_from_json(const Json& j) {
    try {
        EvalItem item;
        item.item_id = j.at("item_id").is_string() ? j.at("item_id").get<std::string>() : j.at("item_id").dump();
        item.question = j.value("question", std::string());
        for (const auto& d : j.value("docs", Json::array())) item.docs.push_back(document_from_json(d));
        item.gold_answers = j.value("gold_answers", std::vector<std::string>{});
        if (auto it = j.find("gold_positive_positions"); it != j.end() && !it->is_null()) {
            item.gold_positive_positions = it->get<std::vector<std::size_t>>();
        }
        if (auto it = j.find("gold_retrieval_label"); it != j.end() && !it->is_null()) {
            item.gold_retrieval_label = it->get<std::string>();
        }
        return item;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed eval item: ") + e.what());
    }
}

void validate(const EvalItem& item, EvalTask task) {
    if (task == EvalTask::synthesis) {
        if (!item.gold_retrieval_label || item.gold_retrieval_label->empty()) {
            throw Error(ErrorKind::data, "synthesis item " + item.item_id + " lacks gold_retrieval_label");
        }
        return;
    }
    if (item.gold_answers.empty()) throw Error(ErrorKind::data, "item " + item.item_id + " lacks gold_answers");
}

EvalItem shuffle_item(const EvalItem& item, std::size_t k, std::uint64_t seed) {
    RngStream rng = RngStream::derive(seed, item.item_id, "shuffle-eval");
    std::vector<std::size_t> order(item.docs.size());
    std::iota(order.begin(), order.end(), 0);
    order = shuffle_first_k(std::move(order), k, rng);

    EvalItem out = item;
    std::vector<std::size_t> new_position(order.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        out.docs[pos] = item.docs[order[pos]];
        new_position[order[pos]] = pos + 1;
    }
    if (item.gold_positive_positions) {
        std::vector<std::size_t> remapped;
        for (std::size_t p : *item.gold_positive_positions) {
            if (p >= 1 && p <= new_position.size()) remapped.push_back(new_position[p - 1]);
        }
        std::sort(remapped.begin(), remapped.end());
        out.gold_positive_positions = std::move(remapped);
    }
    return out;
}

std::string format_percent(double value) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(1) << value;
    std::string s = ss.str();
    if (s == "-0.0") s = "0.0";
    return s;
}

Json EvalReport::to_json() const {
    Json items = Json::array();
    for (const auto& s : per_item) {
        Json j = {{"item_id", s.item_id}, {"score", s.score}};
        if (s.index_metrics) j["index_f1"] = s.index_metrics->f1;
        items.push_back(std::move(j));
    }
    Json j = {
        {"task", to_string(task)},
        {"perturbation", to_string(perturbation)},
        {"n_items", per_item.size()},
        {"aggregate", aggregate},
        {"per_item", std::move(items)},
    };
    if (delta) j["delta"] = *delta;
    if (index_f1) j["index_f1"] = *index_f1;
    return j;
}

EvalReport EvalReport::from_json(const Json& j) {
    try {
        EvalReport r;
        r.task = parse_eval_task(j.at("task").get<std::string>());
        r.perturbation = parse_perturbation(j.at("perturbation").get<std::string>());
        r.aggregate = j.at("aggregate").get<double>();
        for (const auto& s : j.value("per_item", Json::array())) {
            ItemScore item{s.at("item_id").get<std::string>(), s.at("score").get<double>(), std::nullopt};
            if (auto it = s.find("index_f1"); it != s.end()) item.index_metrics = IndexMetrics{0, 0, it->get<double>()};
            r.per_item.push_back(std::move(item));
        }
        if (auto it = j.find("delta"); it != j.end() && !it->is_null()) r.delta = it->get<double>();
        if (auto it = j.find("index_f1"); it != j.end() && !it->is_null()) r.index_f1 = it->get<double>();
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed report: ") + e.what());
    }
}

namespace {

// Summation over sorted values, so the result ignores item order.
double order_free_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum;
}

}  // namespace

EvalReport evaluate_run(const std::vector<EvalItem>& items, const std::map<std::string, std::string>& predictions,
                        EvalTask task, Perturbation perturbation, const EvalOptions& options) {
    if (items.empty()) throw Error(ErrorKind::data, "evaluation set is empty");
    std::vector<std::string> missing;
    for (const auto& item : items) {
        validate(item, task);
        if (predictions.count(item.item_id) == 0) missing.push_back(item.item_id);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) list += (i ? ", " : "") + missing[i];
        if (missing.size() > 20) list += ", ...";
        throw Error(ErrorKind::data, std::to_string(missing.size()) + " items have no prediction: " + list);
    }

    EvalReport report;
    report.task = task;
    report.perturbation = perturbation;
    report.per_item.resize(items.size());
    parallel_for(items.size(), options.workers, [&](std::size_t i) {
        const EvalItem& item = items[i];
        const std::string& raw = predictions.at(item.item_id);
        ItemScore& out = report.per_item[i];
        out.item_id = item.item_id;
        std::string scored = raw;
        if (options.parse_outputs) {
            ParsedOutput parsed = parse_asm_output(raw, options.tmpl);
            if (item.gold_positive_positions) out.index_metrics = index_prediction_metrics(parsed.positions, *item.gold_positive_positions);
            scored = std::move(parsed.answer);
        }
        out.score = task == EvalTask::synthesis ? em_retrieval(scored, *item.gold_retrieval_label)
                                                : rouge_l_max(scored, item.gold_answers, options.token_mode);
    });

    std::vector<double> scores;
    std::vector<double> f1s;
    for (const auto& s : report.per_item) {
        scores.push_back(s.score);
        if (s.index_metrics) f1s.push_back(s.index_metrics->f1);
    }
    report.aggregate = order_free_sum(scores) / static_cast<double>(scores.size()) * 100.0;
    if (!f1s.empty()) report.index_f1 = order_free_sum(f1s) / static_cast<double>(f1s.size()) * 100.0;
    return report;
}

EvalReport with_delta(const EvalReport& unperturbed, EvalReport perturbed) {
    if (unperturbed.task != perturbed.task) throw Error(ErrorKind::data, "cannot compare reports of different tasks");
    perturbed.delta = unperturbed.aggregate - perturbed.aggregate;
    return perturbed;
}

namespace {

std::string pad(std::string s, std::size_t width) {
    const std::size_t len = unicode::length(s);
    if (len < width) s.append(width - len, ' ');
    return s;
}

}  // namespace

std::string render_report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream ss;
    ss << pad("task", 16) << pad("perturbation", 20) << pad("items", 8) << pad("score", 8) << "delta\n";
    for (const auto& r : reports) {
        ss << pad(std::string(to_string(r.task)), 16) << pad(std::string(to_string(r.perturbation)), 20)
           << pad(std::to_string(r.per_item.size()), 8) << pad(format_percent(r.aggregate), 8)
           << (r.delta ? format_percent(*r.delta) : std::string("-")) << '\n';
    }
    return ss.str();
}

std::string render_score_table(const std::vector<ScoreRow>& rows) {
    std::size_t label_width = 5;
    for (const auto& r : rows) label_width = std::max(label_width, unicode::length(r.label));
    label_width += 2;
    auto cell = [](const std::optional<double>& v) { return v ? format_percent(*v) : std::string("-"); };
    std::ostringstream ss;
    ss << pad("Model", label_width) << pad("Multi-doc QA", 14) << pad("Synthesis", 11) << "Summarization\n";
    for (const auto& r : rows) {
        ss << pad(r.label, label_width) << pad(cell(r.multidoc_qa), 14) << pad(cell(r.synthesis), 11)
           << cell(r.summarization) << '\n';
    }
    return ss.str();
}

}  // namespace asmqa
