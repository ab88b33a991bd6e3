#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace asmqa::testkit {

std::u32string oracle_decode(std::string_view s) {
    std::u32string out;
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
        for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
        out.push_back(cp);
        i += static_cast<std::size_t>(len);
    }
    return out;
}

namespace {

double f1_from(std::size_t lcs, std::size_t m, std::size_t n) {
    if (lcs == 0) return 0.0;
    return 2.0 * static_cast<double>(lcs) / static_cast<double>(m + n);
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    for (std::string t; in >> t;) out.push_back(t);
    return out;
}

}  // namespace

double oracle_rouge_chars(std::string_view hyp, std::string_view ref) {
    auto strip = [](std::u32string s) {
        s.erase(std::remove_if(s.begin(), s.end(), [](char32_t c) { return c == ' ' || c == '\t' || c == '\n'; }), s.end());
        return s;
    };
    const auto h = strip(oracle_decode(hyp));
    const auto r = strip(oracle_decode(ref));
    return f1_from(oracle_lcs(h, r), h.size(), r.size());
}

double oracle_rouge_tokens(std::string_view hyp, std::string_view ref) {
    const auto h = tokens(hyp);
    const auto r = tokens(ref);
    return f1_from(oracle_lcs(h, r), h.size(), r.size());
}

std::vector<OracleHit> oracle_top_k(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& vectors,
                                    const std::vector<double>& query, std::size_t k, const std::set<std::string>& exclude) {
    auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    const double qn = norm(query);
    std::vector<OracleHit> all;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        double dot = 0;
        for (std::size_t d = 0; d < query.size(); ++d) dot += query[d] * vectors[i][d];
        all.push_back({ids[i], dot / (qn * norm(vectors[i]))});
    }
    std::sort(all.begin(), all.end(), [](const OracleHit& a, const OracleHit& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    std::vector<OracleHit> out;
    for (const auto& h : all) {
        if (out.size() == k) break;
        if (exclude.count(h.doc_id) == 0) out.push_back(h);
    }
    return out;
}

}  // namespace asmqa::testkit
