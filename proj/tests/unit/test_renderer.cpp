#include <gtest/gtest.h>

#include <random>

#include "asmqa/error.hpp"
#include "asmqa/renderer.hpp"
#include "asmqa/unicode.hpp"
#include "fixtures.hpp"

using namespace asmqa;

namespace {

AsmSample sample_with(std::size_t n_docs, std::vector<std::size_t> positions, SampleKind kind = SampleKind::standard) {
    AsmSample s;
    s.sample_id = "s";
    s.kind = kind;
    s.question = "天气怎么样";
    s.target_question = s.question;
    s.target_answer = kind == SampleKind::synthetic_unknown ? "我不知道。" : "晴天";
    for (std::size_t i = 0; i < n_docs; ++i) s.arranged_docs.push_back({"d" + std::to_string(i), "文档" + std::to_string(i), "x", {}});
    s.positive_positions = std::move(positions);
    s.length_budget = 10000;
    return s;
}

// Code-point slice, counted independently of the library.
std::string slice_chars(const std::string& s, std::size_t begin, std::size_t end) {
    std::string out;
    std::size_t idx = 0;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        const std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        if (idx >= begin && idx < end) out += s.substr(i, len);
        i += len;
        ++idx;
    }
    return out;
}

}  // namespace

TEST(RenderPrompt, SingleDocMarkerOnce) {
    const auto p = render_prompt(sample_with(1, {1}), PromptTemplate::chinese());
    const auto first = p.find("[1]");
    ASSERT_NE(first, std::string::npos);
    EXPECT_EQ(p.find("[1]", first + 1), std::string::npos);
    EXPECT_LT(first, p.find(PromptTemplate::chinese().instruction));
}

TEST(RenderPrompt, MarkersInOrder) {
    for (std::size_t n : {2u, 5u, 12u, 30u}) {
        const auto p = render_prompt(sample_with(n, {1}), PromptTemplate::chinese());
        std::size_t last = 0;
        for (std::size_t i = 1; i <= n; ++i) {
            const std::string m = "[" + std::to_string(i) + "]";
            const auto at = p.find(m);
            ASSERT_NE(at, std::string::npos) << m;
            EXPECT_EQ(p.find(m, at + 1), std::string::npos) << m;
            EXPECT_GT(at, last);
            last = at;
        }
        EXPECT_EQ(p.find("[" + std::to_string(n + 1) + "]"), std::string::npos);
    }
}

TEST(RenderPrompt, EnglishFiveDocLayout) {
    const auto t = PromptTemplate::english();
    const auto p = render_prompt(sample_with(5, {1, 2, 3}), t);
    EXPECT_EQ(p.rfind("Given question: ", 0), 0u);
    const auto essays = p.find("\nEssays:\n");
    ASSERT_NE(essays, std::string::npos);
    EXPECT_LT(essays, p.find("[1] "));
    EXPECT_LT(p.find("[5] "), p.find(t.instruction));
    EXPECT_EQ(p.substr(p.size() - t.instruction.size()), t.instruction);
}

TEST(RenderTarget, FullShapeEnglish) {
    const auto t = PromptTemplate::english();
    auto s = sample_with(5, {1, 2, 3});
    s.target_question = "Q?";
    s.target_answer = "A";
    EXPECT_EQ(render_target(s, TargetVariant::full, t),
              "In response to the question \"Q?\" Based on the information numbered 1,2,3 above, my answer is A");
}

TEST(RenderTarget, Variants) {
    const auto t = PromptTemplate::chinese();
    const auto s = sample_with(3, {2, 3});
    const auto full = render_target(s, TargetVariant::full, t);
    const auto no_qr = render_target(s, TargetVariant::no_qr, t);
    EXPECT_EQ(full, "针对问题“天气怎么样”，根据编号为2,3的信息，我的答案是：晴天");
    EXPECT_EQ(no_qr, "根据编号为2,3的信息，我的答案是：晴天");
    EXPECT_EQ(render_target(s, TargetVariant::no_qr_no_ip, t), "晴天");
}

TEST(RenderTarget, UnknownHasNoIndexSegment) {
    const auto t = PromptTemplate::chinese();
    const auto s = sample_with(4, {}, SampleKind::synthetic_unknown);
    const auto full = render_target(s, TargetVariant::full, t);
    EXPECT_NE(full.find("我不知道。"), std::string::npos);
    EXPECT_EQ(full.find(t.prefix2), std::string::npos);
    EXPECT_EQ(full.find(t.prefix3), std::string::npos);
}

TEST(RenderTarget, RelevanceEndsAfterIndices) {
    const auto t = PromptTemplate::chinese();
    const auto s = sample_with(4, {3}, SampleKind::relevance_mrc);
    const auto full = render_target(s, TargetVariant::full, t);
    EXPECT_EQ(full.substr(full.size() - t.index_close.size()), t.index_close);
    EXPECT_EQ(full.find(t.prefix3), std::string::npos);
    try {
        render_target(s, TargetVariant::no_qr_no_ip, t);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}

TEST(Template, Validation) {
    auto t = PromptTemplate::chinese();
    EXPECT_NO_THROW(validate(t));
    t.prefix3 = t.prefix2;
    EXPECT_THROW(validate(t), Error);
    t = PromptTemplate::english();
    t.prefix1.clear();
    EXPECT_THROW(validate(t), Error);
    t = PromptTemplate::english();
    t.doc_marker = "<doc>";
    EXPECT_THROW(validate(t), Error);
}

TEST(Template, JsonOverrides) {
    const auto t = template_from_json(Json{{"prefix3", "答："}});
    EXPECT_EQ(t.prefix3, "答：");
    EXPECT_EQ(t.prefix1, PromptTemplate::chinese().prefix1);
    EXPECT_EQ(template_from_json(to_json(PromptTemplate::english())), PromptTemplate::english());
    EXPECT_THROW(template_from_json(Json{{"prefix1", ""}}), Error);
}

TEST(Counter, Units) {
    const auto chars = make_counter("char");
    const auto bytes = make_counter("byte");
    EXPECT_EQ(count_units("", *chars), 0u);
    EXPECT_EQ(count_units("天气好", *chars), 3u);
    EXPECT_EQ(count_units("天气好", *bytes), 9u);
    EXPECT_THROW(make_counter("bpe"), Error);
}

TEST(Pack, SpanCoversTargetAndEos) {
    const auto t = PromptTemplate::chinese();
    const auto chars = make_counter("char");
    const auto e = pack_example("提示", "目标", t, 1000, *chars);
    ASSERT_EQ(e.loss_spans.size(), 1u);
    const auto [b, end] = e.loss_spans[0];
    EXPECT_EQ(slice_chars(e.full_text, b, end), "目标" + t.eos);
    EXPECT_EQ(slice_chars(e.full_text, 0, b), t.bos + t.role_open + "提示" + t.turn_separator + t.role_answer);
    EXPECT_EQ(end, unicode::length(e.full_text));
    EXPECT_EQ(e.length_units, unicode::length(e.full_text));
}

TEST(Pack, EnglishScaffoldOutsideSpan) {
    const auto t = PromptTemplate::english();
    const auto chars = make_counter("char");
    auto s = sample_with(5, {1, 2, 3});
    const auto e = pack_example(render_prompt(s, t), render_target(s, TargetVariant::full, t), t, 100000, *chars);
    EXPECT_EQ(e.full_text.rfind("<s><human>: Given question", 0), 0u);
    const auto [b, end] = e.loss_spans[0];
    const auto outside = slice_chars(e.full_text, 0, b);
    EXPECT_EQ(outside.substr(outside.size() - t.role_answer.size()), t.role_answer);
    EXPECT_EQ(slice_chars(e.full_text, b, end).rfind(t.prefix1, 0), 0u);
}

TEST(Pack, BudgetExceededCarriesOverflow) {
    const auto t = PromptTemplate::chinese();
    const auto chars = make_counter("char");
    const std::size_t need = pack_example("abc", "de", t, 1000, *chars).length_units;
    EXPECT_NO_THROW(pack_example("abc", "de", t, need, *chars));
    try {
        pack_example("abc", "de", t, need - 3, *chars);
        FAIL();
    } catch (const BudgetExceeded& e) {
        EXPECT_EQ(e.overflow(), 3u);
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

TEST(Pack, JsonRoundTrip) {
    const auto chars = make_counter("char");
    const auto e = pack_example("p", "t", PromptTemplate::chinese(), 100, *chars, {"id", "standard", {"ordered"}});
    EXPECT_EQ(example_from_json(to_json(e)), e);
    EXPECT_THROW(example_from_json(Json{{"loss_spans", Json::array()}}), Error);
}
