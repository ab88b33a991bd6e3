#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "asmqa/error.hpp"
#include "asmqa/eval_harness.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace asmqa;

namespace {

EvalItem item(const std::string& id, std::vector<std::string> answers, std::size_t n_docs = 3) {
    EvalItem it;
    it.item_id = id;
    it.question = "q" + id;
    it.gold_answers = std::move(answers);
    for (std::size_t i = 0; i < n_docs; ++i) it.docs.push_back({id + "-" + std::to_string(i), "doc", "x", {}});
    return it;
}

EvalItem synth_item(const std::string& id, const std::string& label) {
    EvalItem it = item(id, {label});
    it.gold_retrieval_label = label;
    return it;
}

// `correct` out of `n` synthesis items answered.
EvalReport synthesis_run(std::size_t n, std::size_t correct, Perturbation p) {
    std::vector<EvalItem> items;
    std::map<std::string, std::string> preds;
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = "i" + std::to_string(i);
        items.push_back(synth_item(id, "段落" + std::to_string(i % 30 + 1)));
        preds[id] = i < correct ? "答案是" + *items.back().gold_retrieval_label : "不知道";
    }
    return evaluate_run(items, preds, EvalTask::synthesis, p);
}

}  // namespace

TEST(RougeL, HandValues) {
    EXPECT_DOUBLE_EQ(rouge_l("abc", "abc"), 1.0);
    EXPECT_DOUBLE_EQ(rouge_l("abc", "xyz"), 0.0);
    EXPECT_NEAR(rouge_l("今天天气好", "天气很好"), 2.0 / 3.0, 1e-4);
    EXPECT_NEAR(rouge_l("abfde", "abcde"), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_l("", "abc"), 0.0);
    EXPECT_DOUBLE_EQ(rouge_l("abc", ""), 0.0);
}

TEST(RougeL, WhitespaceTokens) {
    EXPECT_NEAR(rouge_l("the cat sat", "the cat sat down", TokenMode::whitespace), 2 * 3.0 / 7.0, 1e-12);
    EXPECT_NEAR(rouge_l("a b  c", "a c", TokenMode::whitespace), testkit::oracle_rouge_tokens("a b  c", "a c"), 1e-12);
}

TEST(RougeL, AutoModePicksUnitsFromReference) {
    EXPECT_NEAR(rouge_l("今天天气好", "天气很好", TokenMode::auto_detect), 2.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_l("abc def", "abc xyz", TokenMode::auto_detect), 0.5);
}

TEST(RougeL, MaxOverReferences) {
    EXPECT_NEAR(rouge_l_max("abfde", {"abcde", "vwxyz"}, TokenMode::char_units), 0.8, 1e-12);
    EXPECT_DOUBLE_EQ(rouge_l_max("hello", {"hello", "other"}), 1.0);
    EXPECT_DOUBLE_EQ(rouge_l_max("ab", {"abc"}, TokenMode::char_units), rouge_l("ab", "abc"));
    EXPECT_THROW(rouge_l_max("x", {}), Error);
}

TEST(RougeL, MatchesOracleAndIsSymmetric) {
    std::mt19937_64 g(21);
    for (int i = 0; i < 2000; ++i) {
        const auto a = testkit::random_cjk(g, g() % 40, 8);
        const auto b = testkit::random_cjk(g, g() % 40, 8);
        const double s = rouge_l(a, b);
        EXPECT_NEAR(s, testkit::oracle_rouge_chars(a, b), 1e-12);
        EXPECT_NEAR(s, rouge_l(b, a), 1e-12);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, 1.0);
        if (!a.empty()) {
            EXPECT_DOUBLE_EQ(rouge_l(a, a), 1.0);
        }
    }
}

TEST(Em, Normalization) {
    EXPECT_EQ(em_retrieval("段落3", "段落3"), 1);
    EXPECT_EQ(em_retrieval("", "段落3"), 0);
    EXPECT_EQ(em_retrieval("答案是段落３。", "段落3"), 1);
    EXPECT_EQ(em_retrieval("段 落 3", "段落3"), 1);
    EXPECT_EQ(em_retrieval("段落30", "段落3"), 1);  // containment, as specified
    EXPECT_EQ(em_retrieval("段落4", "段落3"), 0);
    EXPECT_EQ(normalize_for_em(" ０１２ ab "), "012ab");
}

TEST(IndexMetrics, SetArithmetic) {
    auto m = index_prediction_metrics({1, 2}, {1, 2});
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
    m = index_prediction_metrics({1, 4}, {1, 2});
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 0.5);
    EXPECT_DOUBLE_EQ(m.f1, 0.5);
    m = index_prediction_metrics({}, {2});
    EXPECT_DOUBLE_EQ(m.precision + m.recall + m.f1, 0.0);
    m = index_prediction_metrics({}, {});
    EXPECT_DOUBLE_EQ(m.precision + m.recall + m.f1, 3.0);
}

TEST(ShuffleFirstK, Edges) {
    RngStream rng(1);
    EXPECT_EQ(shuffle_first_k(std::vector<int>{7}, 10, rng), std::vector<int>{7});
    EXPECT_EQ(shuffle_first_k(std::vector<int>{1, 2, 3}, 0, rng), (std::vector<int>{1, 2, 3}));
}

TEST(ShuffleFirstK, SuffixFixedPrefixPermuted) {
    std::vector<int> v(15);
    std::iota(v.begin(), v.end(), 0);
    bool moved = false;
    for (int seed = 0; seed < 20; ++seed) {
        RngStream rng(seed);
        const auto out = shuffle_first_k(v, 10, rng);
        EXPECT_TRUE(std::equal(out.begin() + 10, out.end(), v.begin() + 10));
        EXPECT_TRUE(std::is_permutation(out.begin(), out.begin() + 10, v.begin()));
        moved |= !std::equal(out.begin(), out.begin() + 10, v.begin());
        RngStream again(seed);
        EXPECT_EQ(shuffle_first_k(v, 10, again), out);
    }
    EXPECT_TRUE(moved);
}

TEST(ShuffleItem, GoldPositionsFollowDocs) {
    EvalItem it = item("a", {"x"}, 15);
    it.gold_positive_positions = std::vector<std::size_t>{2, 5, 12};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = shuffle_item(it, 10, seed);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < s.docs.size(); ++i) {
            for (auto p : *it.gold_positive_positions) {
                if (s.docs[i].doc_id == it.docs[p - 1].doc_id) want.push_back(i + 1);
            }
        }
        EXPECT_EQ(*s.gold_positive_positions, want);
        EXPECT_TRUE(std::is_sorted(want.begin(), want.end()));
        EXPECT_EQ(shuffle_item(it, 10, seed).docs, s.docs);
    }
}

TEST(ParseOutput, TableFourShape) {
    const auto t = PromptTemplate::english();
    const std::string out =
        "In response to the question \"What is the expected peak?\" Based on the information numbered 1,2,3 above, "
        "my answer is that the population peaks at about 10.4 billion.</s>";
    const auto p = parse_asm_output(out, t);
    EXPECT_EQ(p.question_echo, "What is the expected peak?");
    EXPECT_EQ(p.positions, (std::vector<std::size_t>{1, 2, 3}));
    EXPECT_EQ(p.answer, "that the population peaks at about 10.4 billion.");
}

TEST(ParseOutput, PlainAnswer) {
    const auto p = parse_asm_output("只是一个答案", PromptTemplate::chinese());
    EXPECT_FALSE(p.question_echo);
    EXPECT_TRUE(p.positions.empty());
    EXPECT_EQ(p.answer, "只是一个答案");
}

TEST(ParseOutput, Degrades) {
    const auto t = PromptTemplate::chinese();
    const auto p = parse_asm_output("根据编号为2,x,7的信息，", t);
    EXPECT_EQ(p.positions, (std::vector<std::size_t>{2, 7}));
    EXPECT_NO_THROW(parse_asm_output("我的答案是：", t));
    EXPECT_NO_THROW(parse_asm_output("针对问题“", t));
    EXPECT_EQ(parse_asm_output("我的答案是：甲我的答案是：乙", t).answer, "乙");
}

TEST(EvaluateRun, PerfectPredictionsAndOrder) {
    std::vector<EvalItem> items;
    std::map<std::string, std::string> preds;
    for (int i = 0; i < 20; ++i) {
        items.push_back(item("i" + std::to_string(i), {"答案" + std::to_string(i), "别的"}));
        preds[items.back().item_id] = items.back().gold_answers.front();
    }
    const auto r = evaluate_run(items, preds, EvalTask::multidoc_qa, Perturbation::none);
    EXPECT_DOUBLE_EQ(r.aggregate, 100.0);
    std::reverse(items.begin(), items.end());
    preds["i3"] = "完全不同";
    const auto a = evaluate_run(items, preds, EvalTask::multidoc_qa, Perturbation::none);
    std::shuffle(items.begin(), items.end(), std::mt19937_64(2));
    const auto b = evaluate_run(items, preds, EvalTask::multidoc_qa, Perturbation::none);
    EXPECT_DOUBLE_EQ(a.aggregate, b.aggregate);
    EXPECT_LT(a.aggregate, 100.0);
}

TEST(EvaluateRun, MissingPredictionListsIds) {
    std::vector<EvalItem> items = {item("a", {"x"}), item("b", {"y"})};
    try {
        evaluate_run(items, {{"a", "x"}}, EvalTask::multidoc_qa, Perturbation::none);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
        EXPECT_NE(std::string(e.what()).find("b"), std::string::npos);
    }
}

TEST(EvaluateRun, SynthesisNeedsLabel) {
    EXPECT_THROW(evaluate_run({item("a", {"x"})}, {{"a", "x"}}, EvalTask::synthesis, Perturbation::none), Error);
}

TEST(EvaluateRun, IndexF1FromParsedOutputs) {
    EvalItem it = item("a", {"晴"});
    it.gold_positive_positions = std::vector<std::size_t>{1, 2};
    EvalOptions o;
    const auto r = evaluate_run({it}, {{"a", "根据编号为1,4的信息，我的答案是：晴"}}, EvalTask::multidoc_qa, Perturbation::none, o);
    EXPECT_DOUBLE_EQ(r.aggregate, 100.0);
    ASSERT_TRUE(r.index_f1);
    EXPECT_DOUBLE_EQ(*r.index_f1, 50.0);
}

TEST(Delta, ShuffledGap) {
    const auto base = synthesis_run(1000, 376, Perturbation::none);
    const auto shuffled = synthesis_run(1000, 203, Perturbation::shuffled_first_10);
    EXPECT_NEAR(base.aggregate, 37.6, 1e-9);
    EXPECT_NEAR(shuffled.aggregate, 20.3, 1e-9);
    const auto d = with_delta(base, shuffled);
    ASSERT_TRUE(d.delta);
    EXPECT_NEAR(*d.delta, 17.3, 1e-9);
    EXPECT_EQ(format_percent(*d.delta), "17.3");
    const auto table = render_report_table({base, d});
    EXPECT_NE(table.find("17.3"), std::string::npos);
    EXPECT_NE(table.find("37.6"), std::string::npos);
}

TEST(Report, JsonRoundTrip) {
    auto r = with_delta(synthesis_run(10, 4, Perturbation::none), synthesis_run(10, 1, Perturbation::shuffled_first_10));
    const auto back = EvalReport::from_json(r.to_json());
    EXPECT_DOUBLE_EQ(back.aggregate, r.aggregate);
    EXPECT_EQ(back.delta, r.delta);
    EXPECT_EQ(back.per_item.size(), r.per_item.size());
    EXPECT_EQ(back.perturbation, Perturbation::shuffled_first_10);
}

TEST(Report, ScoreTable) {
    const auto table = render_score_table({{"model", 44.7, 98.5, 15.6}, {"other", std::nullopt, 1.0, 2.26}});
    for (const char* v : {"44.7", "98.5", "15.6", "1.0", "2.3"}) EXPECT_NE(table.find(v), std::string::npos) << v;
    EXPECT_LT(table.find("44.7"), table.find("98.5"));
    EXPECT_LT(table.find("98.5"), table.find("15.6"));
    EXPECT_EQ(format_percent(0.0), "0.0");
}
