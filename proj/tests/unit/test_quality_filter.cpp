#include <gtest/gtest.h>

#include <cstdlib>
#include <limits>

#include "asmqa/error.hpp"
#include "asmqa/quality_filter.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "stub_server.hpp"

using namespace asmqa;

namespace {

std::vector<QARecord> scored(const std::vector<double>& scores) {
    std::vector<QARecord> out;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        QARecord r;
        r.record_id = "r" + std::to_string(i);
        r.quality_score = scores[i];
        out.push_back(r);
    }
    return out;
}

// Stub formula: score = (code points of the text mod 10) / 10.
nlohmann::json length_scores(const nlohmann::json& req) {
    nlohmann::json scores = nlohmann::json::array();
    for (const auto& t : req.at("texts")) {
        scores.push_back(static_cast<double>(testkit::oracle_decode(t.get<std::string>()).size() % 10) / 10.0);
    }
    return {{"scores", scores}};
}

ScorerSpec remote(const std::string& url) {
    ScorerSpec s;
    s.mode = ScorerMode::remote_endpoint;
    s.endpoint_url = url;
    s.text_template = "{question}";
    s.batch_size = 7;
    s.retries = 1;
    s.timeout_seconds = 5;
    return s;
}

}  // namespace

TEST(AttachScores, ConstantMode) {
    ScorerSpec s;
    s.mode = ScorerMode::constant;
    s.constant_value = 0.5;
    const auto out = attach_scores(testkit::toy_store(3, 1).records, s);
    ASSERT_EQ(out.size(), 3u);
    for (const auto& r : out) EXPECT_EQ(r.quality_score, 0.5);
}

TEST(AttachScores, PrecomputedIsIdentity) {
    ScorerSpec s;
    const auto in = scored({0.1, 0.9, 0.4});
    EXPECT_EQ(attach_scores(in, s), in);
    auto missing = in;
    missing[1].quality_score.reset();
    try {
        attach_scores(missing, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

TEST(AttachScores, RemoteMatchesStubFormula) {
    testkit::StubServer server(length_scores);
    const auto records = testkit::toy_store(40, 2).records;
    const auto out = attach_scores(records, remote(server.url()));
    ASSERT_EQ(out.size(), records.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        EXPECT_EQ(out[i].record_id, records[i].record_id);
        const double expected = static_cast<double>(testkit::oracle_decode(records[i].question).size() % 10) / 10.0;
        EXPECT_DOUBLE_EQ(*out[i].quality_score, expected);
    }
    EXPECT_EQ(server.calls(), 6);  // ceil(40 / 7)
}

TEST(AttachScores, RemoteSendsBearerToken) {
    testkit::StubServer server(length_scores);
    ::setenv("ASMQA_AUTH_TOKEN", "secret", 1);
    attach_scores(testkit::toy_store(2, 2).records, remote(server.url()));
    ::unsetenv("ASMQA_AUTH_TOKEN");
    EXPECT_EQ(server.last_auth(), "Bearer secret");
}

TEST(AttachScores, RemoteRetriesTransientFailures) {
    testkit::StubServer server(length_scores);
    server.fail_next(1);
    auto spec = remote(server.url());
    spec.batch_size = 100;
    const auto out = attach_scores(testkit::toy_store(5, 2).records, spec);
    EXPECT_TRUE(out[0].quality_score.has_value());
    EXPECT_EQ(server.calls(), 2);
}

TEST(AttachScores, RemoteErrorsAreClassified) {
    testkit::StubServer misaligned([](const nlohmann::json&) { return nlohmann::json{{"scores", {0.5}}}; });
    try {
        attach_scores(testkit::toy_store(3, 2).records, remote(misaligned.url()));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }

    testkit::StubServer down(length_scores);
    down.set_status(500);
    try {
        attach_scores(testkit::toy_store(3, 2).records, remote(down.url()));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }

    testkit::StubServer bad_request(length_scores);
    bad_request.set_status(400);
    try {
        attach_scores(testkit::toy_store(3, 2).records, remote(bad_request.url()));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::protocol);
    }
}

TEST(AttachScores, InvalidSpecIsConfigError) {
    ScorerSpec s;
    s.mode = ScorerMode::remote_endpoint;
    EXPECT_THROW(attach_scores({}, s), Error);
    s.endpoint_url = "https://example.com/x";
    EXPECT_THROW(attach_scores({}, s), Error);
}

TEST(ScoreText, SubstitutesPlaceholders) {
    QARecord r;
    r.question = "Q";
    r.gold_answers = {"A", "B"};
    EXPECT_EQ(score_text(r, "{question}\n{answer}"), "Q\nA");
    EXPECT_EQ(score_text(r, "[{answer}]"), "[A]");
}

TEST(FilterByThreshold, InclusiveComparison) {
    EXPECT_EQ(filter_by_threshold(scored({0.2, 0.8, 0.8}), 0.8).size(), 2u);
    EXPECT_EQ(filter_by_threshold(scored({0.2, 0.8, -5.0}), std::numeric_limits<double>::lowest()).size(), 3u);
}

TEST(FilterByThreshold, HundredRecordsAt063) {
    std::vector<double> s;
    for (int i = 0; i < 100; ++i) s.push_back(i / 100.0);
    // Independent count: i/100 >= 0.63 in double arithmetic.
    std::size_t expected = 0;
    for (int i = 0; i < 100; ++i) expected += (i / 100.0 >= 0.63) ? 1 : 0;
    EXPECT_EQ(expected, 37u);
    EXPECT_EQ(filter_by_threshold(scored(s), 0.63).size(), expected);
}

TEST(FilterByThreshold, UnscoredIsPrecondition) {
    auto rs = scored({0.5});
    rs[0].quality_score.reset();
    try {
        filter_by_threshold(rs, 0.0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::precondition);
    }
}
