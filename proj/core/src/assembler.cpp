#include "asmqa/assembler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "asmqa/parallel.hpp"

namespace asmqa {

void validate(const AssemblyConfig& c) {
    auto fraction = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::config, std::string(name) + " must lie in [0, 1]");
    };
    fraction(c.retrieved_fraction, "retrieved_fraction");
    fraction(c.shuffle_fraction, "shuffle_fraction");
    fraction(c.unknown_fraction, "unknown_fraction");
    fraction(c.replay_ratio, "replay_ratio");
    if (c.replay_ratio >= 1.0) throw Error(ErrorKind::config, "replay_ratio must be < 1");
    if (c.min_budget == 0 || c.min_budget >= c.max_budget) {
        throw Error(ErrorKind::config, "budgets must satisfy 0 < min_budget < max_budget");
    }
    if (c.unknown_answer.empty()) throw Error(ErrorKind::config, "unknown_answer must be non-empty");
}

Strategy plan_sample(const QARecord&, const AssemblyConfig& config, RngStream& rng) {
    Strategy s;
    s.use_retrieved = rng.bernoulli(config.retrieved_fraction);
    s.do_shuffle = rng.bernoulli(config.shuffle_fraction);
    s.make_unknown = rng.bernoulli(config.unknown_fraction);
    s.budget = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(config.min_budget), static_cast<std::int64_t>(config.max_budget)));
    return s;
}

std::string_view to_string(RejectReason reason) {
    switch (reason) {
        case RejectReason::positives_exceed_budget: return "positives_exceed_budget";
        case RejectReason::no_negatives: return "no_negatives";
        case RejectReason::negatives_exceed_budget: return "negatives_exceed_budget";
    }
    return "unknown";
}

Json to_json(const Rejection& r) {
    return {{"record_id", r.record_id}, {"reason", to_string(r.reason)}, {"detail", r.detail}};
}

std::size_t rendered_length(const AsmSample& sample, const RenderContext& ctx) {
    const auto& t = ctx.tmpl;
    std::string text = t.bos + t.role_open;
    text += render_prompt(sample, t);
    text += t.turn_separator + t.role_answer;
    text += render_target(sample, ctx.variant, t);
    text += t.eos;
    return ctx.counter.count(text);
}

namespace {

struct Candidate {
    const Document* doc;
    std::optional<double> score;  // retrieval score when known
};

std::optional<double> cosine(const std::optional<Embedding>& a, const std::optional<Embedding>& b) {
    if (!a || !b || a->size() != b->size()) return std::nullopt;
    try {
        const auto ua = normalized(*a);
        const auto ub = normalized(*b);
        double s = 0.0;
        for (std::size_t i = 0; i < ua.size(); ++i) s += ua[i] * ub[i];
        return s;
    } catch (const Error&) {
        return std::nullopt;
    }
}

/// Lays out `positives` plus the first `n_negatives` candidates.
///
/// Shuffled: a permutation drawn from a copy of `shuffle_rng` (the copy's
/// final state is reported through `rng_after`). Ordered: by retrieval score
/// when every document has one, otherwise positives first then negatives in
/// rank order.
std::vector<Document> arrange(const std::vector<Candidate>& positives, const std::vector<Candidate>& negatives,
                              std::size_t n_negatives, bool shuffle, const RngStream& shuffle_rng, RngStream* rng_after) {
    std::vector<Candidate> chosen(positives);
    chosen.insert(chosen.end(), negatives.begin(), negatives.begin() + static_cast<std::ptrdiff_t>(n_negatives));

    if (shuffle) {
        RngStream rng = shuffle_rng;
        rng.shuffle(std::span<Candidate>(chosen));
        if (rng_after != nullptr) *rng_after = rng;
    } else {
        const bool ranked = std::all_of(chosen.begin(), chosen.end(), [](const Candidate& c) { return c.score.has_value(); });
        if (ranked) {
            std::stable_sort(chosen.begin(), chosen.end(), [](const Candidate& a, const Candidate& b) {
                return *a.score != *b.score ? *a.score > *b.score : a.doc->doc_id < b.doc->doc_id;
            });
        }
    }
    std::vector<Document> docs;
    docs.reserve(chosen.size());
    for (const auto& c : chosen) docs.push_back(*c.doc);
    return docs;
}

std::vector<std::size_t> positions_of(const std::vector<Document>& arranged, const std::vector<Candidate>& positives) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < arranged.size(); ++i) {
        for (const auto& p : positives) {
            if (p.doc->doc_id == arranged[i].doc_id) {
                out.push_back(i + 1);
                break;
            }
        }
    }
    return out;
}

std::set<StrategyTag> tags_for(bool retrieved, bool shuffled) {
    return {retrieved ? StrategyTag::retrieved_neg : StrategyTag::random_neg,
            shuffled ? StrategyTag::shuffled : StrategyTag::ordered};
}

/// Largest n in [min_negatives, candidates] whose sample fits the budget,
/// found by bisection (rendered length grows with every added document).
/// Returns nullopt if even `min_negatives` does not fit.
template <typename Build>
std::optional<std::size_t> fit_negatives(std::size_t min_negatives, std::size_t candidates, std::size_t budget,
                                         const RenderContext& ctx, Build&& build) {
    auto fits = [&](std::size_t n) { return rendered_length(build(n, nullptr), ctx) <= budget; };
    if (!fits(min_negatives)) return std::nullopt;
    std::size_t lo = min_negatives;  // fits
    std::size_t hi = candidates;
    if (fits(hi)) return hi;
    while (hi - lo > 1) {  // invariant: lo fits, hi does not
        const std::size_t mid = lo + (hi - lo) / 2;
        (fits(mid) ? lo : hi) = mid;
    }
    return lo;
}

std::vector<Candidate> positive_candidates(const QARecord& record, bool with_scores) {
    std::vector<Candidate> out;
    for (const auto& d : record.positive_docs) {
        out.push_back({&d, with_scores ? cosine(record.question_embedding, d.embedding) : std::nullopt});
    }
    return out;
}

std::vector<Candidate> negative_candidates(const MiningResult& negatives) {
    std::vector<Candidate> out;
    for (std::size_t i = 0; i < negatives.docs.size(); ++i) {
        std::optional<double> score;
        if (i < negatives.scores.size()) score = negatives.scores[i];
        out.push_back({&negatives.docs[i], score});
    }
    return out;
}

AssembleOutcome build_with_positives(const QARecord& record, SampleKind kind, const MiningResult& negatives,
                                     const Strategy& strategy, bool retrieved, RngStream& shuffle_rng,
                                     const RenderContext& ctx) {
    const auto positives = positive_candidates(record, retrieved);
    const auto candidates = negative_candidates(negatives);

    auto build = [&](std::size_t n, RngStream* rng_after) {
        AsmSample s;
        s.sample_id = record.record_id;
        s.kind = kind;
        s.question = record.question;
        s.arranged_docs = arrange(positives, candidates, n, strategy.do_shuffle, shuffle_rng, rng_after);
        s.positive_positions = positions_of(s.arranged_docs, positives);
        s.target_question = record.question;
        if (kind == SampleKind::standard) s.target_answer = record.gold_answers.front();
        s.length_budget = strategy.budget;
        s.strategy_tags = tags_for(retrieved, strategy.do_shuffle);
        return s;
    };

    AssembleOutcome out;
    const auto n = fit_negatives(0, candidates.size(), strategy.budget, ctx, build);
    if (!n) {
        out.rejection = Rejection{record.record_id, RejectReason::positives_exceed_budget,
                                  "positives alone render to " + std::to_string(rendered_length(build(0, nullptr), ctx)) +
                                      " units, budget " + std::to_string(strategy.budget)};
        return out;
    }
    out.sample = build(*n, &shuffle_rng);
    return out;
}

}  // namespace

AssembleOutcome assemble_standard(const QARecord& record, const MiningResult& negatives, const Strategy& strategy,
                                  RngStream& shuffle_rng, const RenderContext& ctx) {
    return build_with_positives(record, SampleKind::standard, negatives, strategy, strategy.use_retrieved, shuffle_rng, ctx);
}

AssembleOutcome assemble_unknown(const QARecord& record, const MiningResult& negatives, const Strategy& strategy,
                                 RngStream& shuffle_rng, const AssemblyConfig& config, const RenderContext& ctx) {
    AssembleOutcome out;
    std::set<std::string> positive_ids;
    for (const auto& d : record.positive_docs) positive_ids.insert(d.doc_id);
    std::vector<Candidate> candidates;
    for (const auto& c : negative_candidates(negatives)) {
        if (positive_ids.count(c.doc->doc_id) == 0) candidates.push_back(c);
    }
    if (candidates.empty()) {
        out.rejection = Rejection{record.record_id, RejectReason::no_negatives, "synthetic unknown needs at least one negative"};
        return out;
    }

    auto build = [&](std::size_t n, RngStream* rng_after) {
        AsmSample s;
        s.sample_id = record.record_id;
        s.kind = SampleKind::synthetic_unknown;
        s.question = record.question;
        s.arranged_docs = arrange({}, candidates, n, strategy.do_shuffle, shuffle_rng, rng_after);
        s.target_question = record.question;
        s.target_answer = config.unknown_answer;
        s.length_budget = strategy.budget;
        s.strategy_tags = tags_for(strategy.use_retrieved, strategy.do_shuffle);
        return s;
    };
    const auto n = fit_negatives(1, candidates.size(), strategy.budget, ctx, build);
    if (!n) {
        out.rejection = Rejection{record.record_id, RejectReason::negatives_exceed_budget,
                                  "a single negative exceeds budget " + std::to_string(strategy.budget)};
        return out;
    }
    out.sample = build(*n, &shuffle_rng);
    return out;
}

AssembleOutcome assemble_relevance(const QARecord& record, const Strategy& strategy, const MiningPlan& plan,
                                   RngStream& mining_rng, RngStream& shuffle_rng, const RenderContext& ctx) {
    if (record.positive_docs.empty() || record.candidate_negatives.empty()) {
        AssembleOutcome out;
        out.rejection = Rejection{record.record_id, RejectReason::no_negatives, "relevance sample needs a hard-negative collection"};
        return out;
    }
    static const CorpusStore kNoStore;
    const MiningResult negatives = mine_negatives(record, nullptr, kNoStore, plan, false, mining_rng);
    Strategy random_branch = strategy;
    random_branch.use_retrieved = false;
    return build_with_positives(record, SampleKind::relevance_mrc, negatives, random_branch, false, shuffle_rng, ctx);
}

MixResult mix_replay(const std::vector<TrainingExample>& asm_examples, const std::vector<TrainingExample>& replay,
                     double ratio, RngStream& rng) {
    if (!(ratio >= 0.0 && ratio < 1.0)) throw Error(ErrorKind::config, "replay ratio must lie in [0, 1)");
    if (ratio > 0.0 && replay.empty()) throw Error(ErrorKind::precondition, "replay ratio > 0 but the replay stream is empty");
    MixResult out;
    out.items.reserve(asm_examples.size() + static_cast<std::size_t>(asm_examples.size() * ratio * 1.5) + 1);
    std::size_t next_asm = 0;
    std::size_t next_replay = 0;
    while (next_asm < asm_examples.size()) {
        if (rng.bernoulli(ratio)) {
            if (next_replay == replay.size()) {
                next_replay = 0;
                ++out.recycled;
            }
            out.items.push_back({replay[next_replay++], true});
            ++out.replay_count;
        } else {
            out.items.push_back({asm_examples[next_asm++], false});
        }
    }
    return out;
}

Json AssemblyStats::to_json() const {
    return {
        {"records", records},
        {"accepted", accepted},
        {"rejected", rejected},
        {"exhausted_warnings", exhausted_warnings},
        {"by_kind", by_kind},
        {"by_tag", by_tag},
        {"by_reject_reason", by_reject_reason},
        {"replay_items", replay_items},
        {"replay_recycled", replay_recycled},
    };
}

namespace {

struct RecordOutcome {
    AssembleOutcome outcome;
    std::optional<TrainingExample> example;
    bool exhausted = false;
    bool skipped = false;
};

std::vector<bool> select_relevance(const CorpusStore& store, const AssemblyConfig& config) {
    std::vector<bool> keep(store.records.size(), true);
    if (!config.relevance_sample_size) return keep;
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    for (std::size_t i = 0; i < store.records.size(); ++i) {
        const auto& r = store.records[i];
        if (config.relevance_sources.count(r.source) == 0) continue;
        keyed.emplace_back(RngStream::derive(config.seed, r.record_id, "relevance-pick").next_u64(), i);
    }
    std::sort(keyed.begin(), keyed.end());
    for (std::size_t k = *config.relevance_sample_size; k < keyed.size(); ++k) keep[keyed[k].second] = false;
    return keep;
}

}  // namespace

AssemblyResult assemble_corpus(const CorpusStore& store, const AssemblyInputs& in) {
    validate(in.config);
    validate(in.plan);
    validate(in.tmpl);
    const auto counter = make_counter(in.counter);
    const RenderContext ctx{in.tmpl, *counter, in.variant};
    const auto& cfg = in.config;
    const auto keep = select_relevance(store, cfg);

    std::vector<RecordOutcome> slots(store.records.size());
    parallel_for(store.records.size(), in.workers, [&](std::size_t i) {
        const QARecord& record = store.records[i];
        RecordOutcome& slot = slots[i];
        if (!keep[i]) {
            slot.skipped = true;
            return;
        }
        RngStream plan_rng = RngStream::derive(cfg.seed, record.record_id, "plan");
        RngStream mining_rng = RngStream::derive(cfg.seed, record.record_id, "mine");
        RngStream shuffle_rng = RngStream::derive(cfg.seed, record.record_id, "shuffle");
        const Strategy strategy = plan_sample(record, cfg, plan_rng);

        if (cfg.relevance_sources.count(record.source) != 0) {
            slot.outcome = assemble_relevance(record, strategy, in.plan, mining_rng, shuffle_rng, ctx);
        } else {
            const EmbeddingIndex* index = nullptr;
            if (strategy.use_retrieved && in.indices != nullptr) {
                auto it = in.indices->find(record.source);
                if (it == in.indices->end()) it = in.indices->find("*");
                if (it != in.indices->end()) index = &it->second;
            }
            MiningPlan plan = in.plan;
            if (strategy.make_unknown && plan.negatives_per_sample) {
                // Unknown samples lose their positives; mine replacements for them.
                *plan.negatives_per_sample += record.positive_docs.size();
            }
            const MiningResult negatives = mine_negatives(record, index, store, plan, strategy.use_retrieved, mining_rng);
            slot.exhausted = negatives.exhausted;
            if (strategy.make_unknown) {
                slot.outcome = assemble_unknown(record, negatives, strategy, shuffle_rng, cfg, ctx);
            } else if (negatives.docs.empty() && !cfg.allow_positives_only) {
                slot.outcome.rejection = Rejection{record.record_id, RejectReason::no_negatives, "no candidate negatives"};
            } else {
                slot.outcome = assemble_standard(record, negatives, strategy, shuffle_rng, ctx);
            }
        }
        if (slot.outcome.sample) {
            const AsmSample& s = *slot.outcome.sample;
            slot.example = pack_example(render_prompt(s, in.tmpl), render_target(s, in.variant, in.tmpl), in.tmpl,
                                        s.length_budget, *counter, meta_of(s));
        }
    });

    AssemblyResult result;
    auto& st = result.stats;
    for (auto& slot : slots) {
        if (slot.skipped) continue;
        ++st.records;
        if (slot.exhausted) ++st.exhausted_warnings;
        if (slot.outcome.sample) {
            ++st.accepted;
            ++st.by_kind[std::string(to_string(slot.outcome.sample->kind))];
            for (auto tag : slot.outcome.sample->strategy_tags) ++st.by_tag[std::string(to_string(tag))];
            result.samples.push_back(std::move(*slot.outcome.sample));
            result.examples.push_back(std::move(*slot.example));
        } else if (slot.outcome.rejection) {
            ++st.rejected;
            ++st.by_reject_reason[std::string(to_string(slot.outcome.rejection->reason))];
            result.rejections.push_back(std::move(*slot.outcome.rejection));
        }
    }

    if (cfg.replay_ratio > 0.0 && !in.replay.empty()) {
        RngStream mix_rng = RngStream::derive(cfg.seed, "", "replay-mix");
        MixResult mixed = mix_replay(result.examples, in.replay, cfg.replay_ratio, mix_rng);
        st.replay_items = mixed.replay_count;
        st.replay_recycled = mixed.recycled;
        result.mixed = std::move(mixed.items);
    } else {
        result.mixed.reserve(result.examples.size());
        for (const auto& e : result.examples) result.mixed.push_back({e, false});
    }
    return result;
}

}  // namespace asmqa
