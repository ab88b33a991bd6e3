#include "asmqa/attention_probe.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "asmqa/error.hpp"

namespace asmqa {

void validate(const AttentionDump& dump) {
    if (dump.tokens.size() != dump.scores.size()) {
        throw Error(ErrorKind::data, "attention dump has " + std::to_string(dump.tokens.size()) + " tokens but " +
                                         std::to_string(dump.scores.size()) + " scores");
    }
    for (std::size_t i = 0; i < dump.scores.size(); ++i) {
        if (!std::isfinite(dump.scores[i]) || dump.scores[i] < 0.0) {
            throw Error(ErrorKind::data, "attention score at position " + std::to_string(i) + " is negative or non-finite");
        }
    }
}

AttentionDump dump_from_json(const Json& j) {
    AttentionDump d;
    try {
        d.model_tag = j.value("model_tag", std::string());
        d.reduction = j.value("reduction", std::string());
        d.tokens = j.at("tokens").get<std::vector<std::string>>();
        for (const auto& s : j.at("scores")) {
            if (!s.is_number()) throw Error(ErrorKind::data, "attention scores must be numbers");
            d.scores.push_back(s.get<double>());
        }
        if (auto it = j.find("prompt_meta"); it != j.end() && !it->is_null()) d.prompt_meta = *it;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::data, std::string("malformed attention dump: ") + e.what());
    }
    validate(d);
    return d;
}

Json to_json(const AttentionDump& d) {
    return {{"model_tag", d.model_tag}, {"reduction", d.reduction}, {"tokens", d.tokens},
            {"scores", d.scores},       {"prompt_meta", d.prompt_meta}};
}

AttentionDump load_dump(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return dump_from_json(Json::parse(text));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::data, path.string() + ": " + e.what());
    }
}

std::string build_repeat_probe(std::string_view answer_sentence, std::string_view question, std::size_t n_repeats,
                               const PromptTemplate& tmpl) {
    if (answer_sentence.empty()) throw Error(ErrorKind::precondition, "probe sentence must be non-empty");
    if (n_repeats == 0) throw Error(ErrorKind::precondition, "n_repeats must be >= 1");
    std::string body;
    body.reserve(answer_sentence.size() * n_repeats);
    for (std::size_t i = 0; i < n_repeats; ++i) body += answer_sentence;
    return render_prompt_layout(question, {body}, tmpl);
}

std::vector<std::size_t> detect_peaks(const std::vector<double>& scores, std::size_t min_separation,
                                      double threshold_sigmas) {
    if (min_separation == 0) throw Error(ErrorKind::precondition, "min_separation must be >= 1");
    const std::size_t n = scores.size();
    if (n < 3) return {};

    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    const double stdev = std::sqrt(var / static_cast<double>(n));
    const double threshold = mean + threshold_sigmas * stdev;

    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n; ++i) {
        const bool left = i == 0 || scores[i] > scores[i - 1];
        const bool right = i + 1 == n || scores[i] > scores[i + 1];
        if (left && right && scores[i] > threshold) candidates.push_back(i);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<std::size_t> peaks;
    for (std::size_t c : candidates) {
        const bool clear = std::all_of(peaks.begin(), peaks.end(), [&](std::size_t p) {
            return (c > p ? c - p : p - c) >= min_separation;
        });
        if (clear) peaks.push_back(c);
    }
    std::sort(peaks.begin(), peaks.end());
    return peaks;
}

PositionalMass positional_mass(const std::vector<double>& scores, std::size_t n_bins) {
    if (n_bins == 0) throw Error(ErrorKind::precondition, "n_bins must be >= 1");
    if (scores.empty()) throw Error(ErrorKind::precondition, "positional_mass needs a non-empty signal");
    const std::size_t n = scores.size();
    const std::size_t width = n / n_bins;

    PositionalMass out;
    const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
    out.zero_total = total <= 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        MassBin bin;
        bin.begin = std::min(n, b * width);
        bin.end = b + 1 == n_bins ? n : std::min(n, (b + 1) * width);
        if (out.zero_total) {
            bin.share = 1.0 / static_cast<double>(n_bins);
        } else {
            const double sum = std::accumulate(scores.begin() + static_cast<std::ptrdiff_t>(bin.begin),
                                               scores.begin() + static_cast<std::ptrdiff_t>(bin.end), 0.0);
            bin.share = sum / total;
        }
        out.bins.push_back(bin);
    }
    return out;
}

ProbeReport probe_report(const AttentionDump& dump, const ProbeParams& params) {
    validate(dump);
    ProbeReport r;
    r.model_tag = dump.model_tag;
    r.peak_positions = detect_peaks(dump.scores, params.min_separation, params.threshold_sigmas);
    r.peak_count = r.peak_positions.size();
    if (!dump.scores.empty()) {
        r.mass = positional_mass(dump.scores, params.n_bins);
        r.head_tail_share = {r.mass.bins.front().share, r.mass.bins.back().share};
    } else {
        r.mass.zero_total = true;
    }
    return r;
}

Json ProbeReport::to_json() const {
    Json bins = Json::array();
    for (const auto& b : mass.bins) bins.push_back({{"begin", b.begin}, {"end", b.end}, {"share", b.share}});
    return {
        {"model_tag", model_tag},
        {"peak_count", peak_count},
        {"peak_positions", peak_positions},
        {"positional_mass", std::move(bins)},
        {"zero_total", mass.zero_total},
        {"head_share", head_tail_share.first},
        {"tail_share", head_tail_share.second},
    };
}

std::string scores_csv(const AttentionDump& dump) {
    std::ostringstream ss;
    ss << "position,token,score\n";
    ss << std::setprecision(17);
    for (std::size_t i = 0; i < dump.scores.size(); ++i) {
        std::string token = i < dump.tokens.size() ? dump.tokens[i] : std::string();
        // RFC 4180 quoting.
        std::string quoted = "\"";
        for (char c : token) {
            if (c == '"') quoted += '"';
            quoted += c;
        }
        quoted += '"';
        ss << i << ',' << quoted << ',' << dump.scores[i] << '\n';
    }
    return ss.str();
}

}  // namespace asmqa
