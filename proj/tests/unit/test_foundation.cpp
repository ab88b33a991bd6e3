#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <set>

#include "asmqa/digest.hpp"
#include "asmqa/error.hpp"
#include "asmqa/jsonl.hpp"
#include "asmqa/parallel.hpp"
#include "asmqa/rng.hpp"
#include "asmqa/unicode.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace asmqa;

TEST(Unicode, LengthCountsCodePoints) {
    EXPECT_EQ(unicode::length("天气好"), 3u);
    EXPECT_EQ(std::string("天气好").size(), 9u);  // 3 bytes per ideograph
    EXPECT_EQ(unicode::length(""), 0u);
    EXPECT_EQ(unicode::length("a天b"), 3u);
}

TEST(Unicode, DecodeMatchesOracle) {
    std::mt19937_64 g(5);
    for (int i = 0; i < 200; ++i) {
        const std::string s = testkit::random_cjk(g, 20, 20000) + "ab😀c";
        EXPECT_EQ(unicode::decode(s), testkit::oracle_decode(s));
        EXPECT_EQ(unicode::encode(unicode::decode(s)), s);
    }
}

TEST(Unicode, MalformedBytesBecomeReplacement) {
    const std::string bad = std::string("a") + '\xff' + "b";
    EXPECT_EQ(unicode::decode(bad), (std::u32string{U'a', 0xFFFD, U'b'}));
}

TEST(Unicode, SubstrAndOffsets) {
    const std::string s = "问题：x";
    EXPECT_EQ(unicode::substr(s, 1, 3), "题：");
    EXPECT_EQ(unicode::byte_offset(s, 3), 9u);
    EXPECT_EQ(unicode::byte_offset(s, 10), s.size());
}

TEST(Unicode, Classification) {
    EXPECT_TRUE(unicode::is_cjk(U'天'));
    EXPECT_FALSE(unicode::is_cjk(U'a'));
    EXPECT_TRUE(unicode::is_space(U' '));
    EXPECT_TRUE(unicode::is_space(0x3000));
    EXPECT_EQ(unicode::fold_digit_width(0xFF13), U'3');
    EXPECT_EQ(unicode::fold_digit_width(U'x'), U'x');
    EXPECT_EQ(unicode::split_whitespace("  a b　c "), (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Digest, KnownVectors) {
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Digest, IncrementalEqualsOneShot) {
    Sha256 h;
    h.update("ab");
    h.update("c");
    EXPECT_EQ(h.hex_digest(), sha256_hex("abc"));
}

TEST(Digest, FileDigest) {
    testkit::TempDir dir;
    write_text_file(dir / "f.txt", "abc");
    EXPECT_EQ(sha256_file(dir / "f.txt"), sha256_hex("abc"));
    EXPECT_THROW(sha256_file(dir / "missing"), Error);
}

TEST(Rng, DeriveIsDeterministicAndSeparated) {
    auto a = RngStream::derive(7, "r1", "plan");
    auto b = RngStream::derive(7, "r1", "plan");
    auto c = RngStream::derive(7, "r1", "mine");
    auto d = RngStream::derive(8, "r1", "plan");
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
}

TEST(Rng, UniformIndexInRangeAndCoversAll) {
    RngStream r(1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const auto v = r.uniform_index(7);
        ASSERT_LT(v, 7u);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 7u);
    for (int i = 0; i < 1000; ++i) {
        const auto v = r.uniform_int(-3, 3);
        ASSERT_GE(v, -3);
        ASSERT_LE(v, 3);
    }
}

TEST(Rng, BernoulliEdgesAndRate) {
    RngStream r(2);
    int hits = 0;
    for (int i = 0; i < 100; ++i) {
        EXPECT_FALSE(r.bernoulli(0.0));
        EXPECT_TRUE(r.bernoulli(1.0));
    }
    for (int i = 0; i < 20000; ++i) hits += r.bernoulli(0.3) ? 1 : 0;
    EXPECT_NEAR(hits / 20000.0, 0.3, 0.015);
}

TEST(Rng, ShuffleReplaysDurstenfeld) {
    std::vector<int> v(12);
    std::iota(v.begin(), v.end(), 0);
    RngStream r(9);
    RngStream replay = r;
    auto shuffled = v;
    r.shuffle(std::span<int>(shuffled));

    auto expected = v;
    for (std::size_t i = expected.size(); i > 1; --i) std::swap(expected[i - 1], expected[replay.uniform_index(i)]);
    EXPECT_EQ(shuffled, expected);
    EXPECT_TRUE(std::is_permutation(shuffled.begin(), shuffled.end(), v.begin()));
}

TEST(Jsonl, RoundTripAndCrlf) {
    testkit::TempDir dir;
    {
        JsonlWriter w(dir / "a.jsonl");
        w.write({{"x", 1}});
        w.write({{"y", "天"}});
        w.close();
    }
    const auto rows = read_jsonl(dir / "a.jsonl");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1]["y"], "天");

    write_text_file(dir / "b.jsonl", "{\"a\":1}\r\n\r\n{\"a\":2}\r\n");
    const auto crlf = read_jsonl(dir / "b.jsonl");
    ASSERT_EQ(crlf.size(), 2u);
    EXPECT_EQ(crlf[1]["a"], 2);
}

TEST(Jsonl, BadLineIsDataError) {
    testkit::TempDir dir;
    write_text_file(dir / "c.jsonl", "{\"a\":1}\n{oops\n");
    try {
        read_jsonl(dir / "c.jsonl");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::data);
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
    EXPECT_THROW(read_jsonl(dir / "none.jsonl"), Error);
}

TEST(Parallel, VisitsEveryIndexOnce) {
    for (std::size_t workers : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(500);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) EXPECT_EQ(h.load(), 1);
    }
}

TEST(Parallel, RethrowsLowestFailingIndex) {
    for (std::size_t workers : {1u, 4u}) {
        try {
            parallel_for(100, workers, [](std::size_t i) {
                if (i == 17 || i == 60) throw std::runtime_error("fail " + std::to_string(i));
            });
            FAIL();
        } catch (const std::runtime_error& e) {
            EXPECT_STREQ(e.what(), "fail 17");
        }
    }
}
