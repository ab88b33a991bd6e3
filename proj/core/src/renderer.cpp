#include "asmqa/renderer.hpp"


#include "asmqa/unicode.hpp"

namespace asmqa {

PromptTemplate PromptTemplate::chinese() {
    PromptTemplate t;
    t.question_header = "问题：";
    t.docs_header = "文章：";
    t.doc_marker = "[{i}]";
    t.instruction = "请阅读理解上面多篇文章，正确回答问题。如果搜索结果不相关，请回答不相关。";
    t.prefix1 = "针对问题“";
    t.question_close = "”，";
    t.prefix2 = "根据编号为";
    t.index_separator = ",";
    t.index_close = "的信息，";
    t.prefix3 = "我的答案是：";
    return t;
}

PromptTemplate PromptTemplate::english() {
    PromptTemplate t;
    t.question_header = "Given question: ";
    t.docs_header = "Essays:";
    t.doc_marker = "[{i}] ";
    t.instruction =
        "Please read and understand many of the passages above and answer the questions correctly. "
        "If the search results are not relevant, please answer that they are not relevant.";
    t.prefix1 = "In response to the question \"";
    t.question_close = "\" ";
    t.prefix2 = "Based on the information numbered ";
    t.index_separator = ",";
    t.index_close = " above, ";
    t.prefix3 = "my answer is ";
    t.role_open = "<human>: ";
    t.role_answer = "<bot>: ";
    return t;
}

void validate(const PromptTemplate& t) {
    if (t.prefix1.empty() || t.prefix2.empty() || t.prefix3.empty()) {
        throw Error(ErrorKind::config, "template prefixes must be non-empty");
    }
    if (t.prefix1 == t.prefix2 || t.prefix1 == t.prefix3 || t.prefix2 == t.prefix3) {
        throw Error(ErrorKind::config, "template prefixes must be pairwise distinct");
    }
    if (t.doc_marker.find("{i}") == std::string::npos) throw Error(ErrorKind::config, "doc_marker must contain {i}");
    if (t.index_separator.empty()) throw Error(ErrorKind::config, "index_separator must be non-empty");
}

Json to_json(const PromptTemplate& t) {
    return {
        {"question_header", t.question_header}, {"docs_header", t.docs_header},
        {"doc_marker", t.doc_marker},           {"instruction", t.instruction},
        {"prefix1", t.prefix1},                 {"question_close", t.question_close},
        {"prefix2", t.prefix2},                 {"index_separator", t.index_separator},
        {"index_close", t.index_close},         {"prefix3", t.prefix3},
        {"bos", t.bos},                         {"role_open", t.role_open},
        {"turn_separator", t.turn_separator},   {"role_answer", t.role_answer},
        {"eos", t.eos},
    };
}

PromptTemplate template_from_json(const Json& j, PromptTemplate t) {
    auto take = [&](const char* key, std::string& field) {
        if (auto it = j.find(key); it != j.end()) field = it->get<std::string>();
    };
    take("question_header", t.question_header);
    take("docs_header", t.docs_header);
    take("doc_marker", t.doc_marker);
    take("instruction", t.instruction);
    take("prefix1", t.prefix1);
    take("question_close", t.question_close);
    take("prefix2", t.prefix2);
    take("index_separator", t.index_separator);
    take("index_close", t.index_close);
    take("prefix3", t.prefix3);
    take("bos", t.bos);
    take("role_open", t.role_open);
    take("turn_separator", t.turn_separator);
    take("role_answer", t.role_answer);
    take("eos", t.eos);
    validate(t);
    return t;
}

TargetVariant parse_target_variant(std::string_view tag) {
    if (tag == "full") return TargetVariant::full;
    if (tag == "no_qr") return TargetVariant::no_qr;
    if (tag == "no_qr_no_ip") return TargetVariant::no_qr_no_ip;
    throw Error(ErrorKind::config, "unknown target variant '" + std::string(tag) + "'");
}

std::string_view to_string(TargetVariant variant) {
    switch (variant) {
        case TargetVariant::full: return "full";
        case TargetVariant::no_qr: return "no_qr";
        case TargetVariant::no_qr_no_ip: return "no_qr_no_ip";
    }
    return "full";
}

std::size_t CharCounter::count(std::string_view text) const { return unicode::length(text); }

std::unique_ptr<LengthCounter> make_counter(std::string_view name) {
    if (name == "char") return std::make_unique<CharCounter>();
    if (name == "byte") return std::make_unique<ByteCounter>();
    throw Error(ErrorKind::config, "unknown length counter '" + std::string(name) + "'");
}

std::size_t count_units(std::string_view text, const LengthCounter& counter) { return counter.count(text); }

namespace {

std::string marker(const std::string& pattern, std::size_t i) {
    std::string out = pattern;
    const auto pos = out.find("{i}");
    if (pos != std::string::npos) out.replace(pos, 3, std::to_string(i));
    return out;
}

}  // namespace

std::string render_prompt_layout(std::string_view question, const std::vector<std::string_view>& doc_texts,
                                 const PromptTemplate& tmpl) {
    std::string out;
    out += tmpl.question_header;
    out += question;
    out += '\n';
    out += tmpl.docs_header;
    out += '\n';
    for (std::size_t i = 0; i < doc_texts.size(); ++i) {
        out += marker(tmpl.doc_marker, i + 1);
        out += doc_texts[i];
        out += '\n';
    }
    out += tmpl.instruction;
    return out;
}

std::string render_prompt(const AsmSample& sample, const PromptTemplate& tmpl) {
    std::vector<std::string_view> texts;
    texts.reserve(sample.arranged_docs.size());
    for (const auto& d : sample.arranged_docs) texts.emplace_back(d.text);
    return render_prompt_layout(sample.question, texts, tmpl);
}

std::string join_positions(const std::vector<std::size_t>& positions, std::string_view separator) {
    std::string out;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (i) out += separator;
        out += std::to_string(positions[i]);
    }
    return out;
}

std::string render_target(const AsmSample& s, TargetVariant variant, const PromptTemplate& t) {
    if (variant == TargetVariant::no_qr_no_ip) {
        if (s.kind == SampleKind::relevance_mrc) {
            throw Error(ErrorKind::precondition, "no_qr_no_ip leaves a relevance_mrc target empty");
        }
        return s.target_answer;
    }
    std::string out;
    if (variant == TargetVariant::full) out += t.prefix1 + s.target_question + t.question_close;
    switch (s.kind) {
        case SampleKind::synthetic_unknown:
            out += s.target_answer;
            break;
        case SampleKind::relevance_mrc:
            out += t.prefix2 + join_positions(s.positive_positions, t.index_separator) + t.index_close;
            break;
        case SampleKind::standard:
            out += t.prefix2 + join_positions(s.positive_positions, t.index_separator) + t.index_close;
            out += t.prefix3 + s.target_answer;
            break;
    }
    return out;
}

Json to_json(const TrainingExample& e) {
    Json spans = Json::array();
    for (const auto& [b, end] : e.loss_spans) spans.push_back({b, end});
    return {
        {"text", e.full_text},
        {"loss_spans", std::move(spans)},
        {"length_units", e.length_units},
        {"meta", {{"sample_id", e.meta.sample_id}, {"kind", e.meta.kind}, {"strategy_tags", e.meta.strategy_tags}}},
    };
}

TrainingExample example_from_json(const Json& j) {
    try {
        TrainingExample e;
        e.full_text = j.at("text").get<std::string>();
        for (const auto& s : j.value("loss_spans", Json::array())) e.loss_spans.emplace_back(s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>());
        e.length_units = j.value("length_units", std::size_t{0});
        if (auto it = j.find("meta"); it != j.end() && it->is_object()) {
            e.meta.sample_id = it->value("sample_id", std::string());
            e.meta.kind = it->value("kind", std::string());
            e.meta.strategy_tags = it->value("strategy_tags", std::vector<std::string>{});
        }
        return e;
    } catch (const Json::exception& ex) {
        throw Error(ErrorKind::data, std::string("malformed training example: ") + ex.what());
    }
}

TrainingExample pack_example(std::string_view prompt, std::string_view target, const PromptTemplate& tmpl,
                             std::size_t budget, const LengthCounter& counter, ExampleMeta meta) {
    TrainingExample e;
    e.full_text.reserve(prompt.size() + target.size() + 64);
    e.full_text += tmpl.bos;
    e.full_text += tmpl.role_open;
    e.full_text += prompt;
    e.full_text += tmpl.turn_separator;
    e.full_text += tmpl.role_answer;
    const std::size_t span_begin = unicode::length(e.full_text);
    e.full_text += target;
    e.full_text += tmpl.eos;
    const std::size_t span_end = unicode::length(e.full_text);

    e.length_units = counter.count(e.full_text);
    if (e.length_units > budget) throw BudgetExceeded(e.length_units, budget);
    e.loss_spans.emplace_back(span_begin, span_end);
    e.meta = std::move(meta);
    return e;
}

ExampleMeta meta_of(const AsmSample& s) {
    ExampleMeta m;
    m.sample_id = s.sample_id;
    m.kind = std::string(to_string(s.kind));
    for (auto tag : s.strategy_tags) m.strategy_tags.emplace_back(to_string(tag));
    return m;
}

}  // namespace asmqa
