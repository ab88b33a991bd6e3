#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "asmqa/digest.hpp"
#include "asmqa/error.hpp"
#include "asmqa/jsonl.hpp"
#include "asmqa/parallel.hpp"
#include "asmqa/rng.hpp"
#include "asmqa/unicode.hpp"
#include "run_config.hpp"

namespace asmqa::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    // global
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;

    // inputs
    std::optional<std::string> input;
    std::vector<std::string> inputs;
    std::optional<std::string> format;
    std::optional<std::string> source_name;
    std::optional<std::string> category;
    bool single_answer = false;
    std::optional<std::size_t> embedding_dim;

    // quality
    std::optional<double> threshold;
    std::optional<std::string> scorer;
    std::optional<std::string> scorer_url;
    std::optional<double> constant_score;

    // mining
    std::optional<std::string> negatives;
    std::optional<double> retrieved_fraction;
    std::optional<std::string> index_scope;
    std::optional<std::string> vector_url;

    // assembly and rendering
    std::optional<double> shuffle_fraction;
    std::optional<double> unknown_fraction;
    std::optional<double> replay_ratio;
    std::optional<std::size_t> max_budget;
    std::optional<std::size_t> min_budget;
    std::optional<std::string> replay;
    std::optional<std::string> language;
    std::optional<std::string> variant;
    std::optional<std::string> counter;

    // eval
    std::string eval_set;
    std::optional<std::string> predictions;
    std::string task = "multidoc_qa";
    std::string perturbation = "none";
    std::optional<std::string> token_mode;
    bool raw_output = false;
    std::string name = "report";
    std::optional<std::size_t> k;

    // probe
    std::string sentence;
    std::string question;
    std::optional<std::size_t> repeats;
    std::string dump;
    std::optional<std::size_t> bins;
    std::optional<std::size_t> min_separation;
    std::optional<double> sigmas;

    // report
    std::vector<std::string> compare;
    std::optional<std::string> table;
};

void apply_overrides(const Options& o, RunConfig& c) {
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.out_dir) c.out_dir = *o.out_dir;

    if (!o.inputs.empty()) {
        c.sources.clear();
        for (const auto& p : o.inputs) {
            SourceSpec s;
            s.path = p;
            if (o.format) s.format = parse_corpus_format(*o.format);
            s.name = o.source_name;
            s.filter.category = o.category;
            s.filter.single_answer_only = o.single_answer;
            c.sources.push_back(std::move(s));
        }
    }
    if (o.embedding_dim) c.embedding_dim = *o.embedding_dim;

    if (o.threshold) c.threshold = *o.threshold;
    if (o.scorer) c.scorer.mode = parse_scorer_mode(*o.scorer);
    if (o.scorer_url) c.scorer.endpoint_url = *o.scorer_url;
    if (o.constant_score) c.scorer.constant_value = *o.constant_score;

    if (o.negatives) {
        if (*o.negatives == "fill") {
            c.plan.negatives_per_sample.reset();
        } else {
            try {
                c.plan.negatives_per_sample = static_cast<std::size_t>(std::stoul(*o.negatives));
            } catch (const std::exception&) {
                throw Error(ErrorKind::config, "--negatives expects an integer or \"fill\"");
            }
        }
    }
    if (o.retrieved_fraction) c.assembly.retrieved_fraction = *o.retrieved_fraction;
    if (o.index_scope) {
        if (*o.index_scope != "per_source" && *o.index_scope != "global") {
            throw Error(ErrorKind::config, "--index-scope must be per_source or global");
        }
        c.per_source_index = *o.index_scope == "per_source";
    }
    if (o.vector_url) c.vector_endpoint = VectorEndpointSpec{*o.vector_url};

    if (o.shuffle_fraction) c.assembly.shuffle_fraction = *o.shuffle_fraction;
    if (o.unknown_fraction) c.assembly.unknown_fraction = *o.unknown_fraction;
    if (o.replay_ratio) c.assembly.replay_ratio = *o.replay_ratio;
    if (o.max_budget) c.assembly.max_budget = *o.max_budget;
    if (o.min_budget) c.assembly.min_budget = *o.min_budget;
    if (o.replay) c.replay_path = *o.replay;
    if (o.language) {
        if (*o.language == "zh") {
            c.tmpl = PromptTemplate::chinese();
        } else if (*o.language == "en") {
            c.tmpl = PromptTemplate::english();
        } else {
            throw Error(ErrorKind::config, "--language must be zh or en");
        }
        c.language = *o.language;
    }
    if (o.variant) c.variant = parse_target_variant(*o.variant);
    if (o.counter) c.counter = *o.counter;

    if (o.token_mode) c.token_mode = parse_token_mode(*o.token_mode);
    if (o.raw_output) c.parse_outputs = false;
    if (o.k) c.shuffle_k = *o.k;

    if (o.repeats) c.probe_repeats = *o.repeats;
    if (o.bins) c.probe.n_bins = *o.bins;
    if (o.min_separation) c.probe.min_separation = *o.min_separation;
    if (o.sigmas) c.probe.threshold_sigmas = *o.sigmas;

    c.propagate_seed();
}

/// Run manifest: config, seed and content digests of every file read or written.
class Manifest {
public:
    Manifest(std::string subcommand, const RunConfig& config) : subcommand_(std::move(subcommand)), config_(config) {}

    void input(const fs::path& path) {
        inputs_.push_back({{"name", path.filename().string()}, {"sha256", sha256_file(path)}});
    }
    void output(const fs::path& path) {
        outputs_.push_back({{"name", path.filename().string()}, {"sha256", sha256_file(path)}});
    }
    Json& counts() { return counts_; }

    fs::path write() const {
        const Json doc = {
            {"subcommand", subcommand_},
            {"config_hash", config_hash(config_)},
            {"seed", config_.seed},
            {"config", to_json(config_)},
            {"inputs", inputs_},
            {"outputs", outputs_},
            {"counts", counts_},
        };
        const fs::path path = config_.out_dir / ("manifest_" + subcommand_ + ".json");
        write_text_file(path, doc.dump(2) + "\n");
        return path;
    }

private:
    std::string subcommand_;
    const RunConfig& config_;
    Json inputs_ = Json::array();
    Json outputs_ = Json::array();
    Json counts_ = Json::object();
};

struct Context {
    RunConfig config;
    Options options;
    std::ostream& out;
};

fs::path out_path(const RunConfig& c, const std::string& name) { return c.out_dir / name; }

fs::path default_input(const Context& ctx, std::initializer_list<const char*> candidates) {
    if (ctx.options.input) return *ctx.options.input;
    for (const char* name : candidates) {
        const fs::path p = out_path(ctx.config, name);
        if (fs::exists(p)) return p;
    }
    throw Error(ErrorKind::config, "no --input given and no " + std::string(*candidates.begin()) + " in " +
                                       ctx.config.out_dir.string());
}

template <typename Range, typename ToJson>
void write_jsonl(const fs::path& path, const Range& items, ToJson to, Manifest& m) {
    JsonlWriter w(path);
    for (const auto& item : items) w.write(to(item));
    w.close();
    m.output(path);
}

CorpusStore read_canonical(const fs::path& path, const RunConfig& c, Manifest& m) {
    m.input(path);
    IngestOptions o;
    o.embedding_dim = c.embedding_dim;
    o.workers = c.workers;
    IngestResult r = ingest_corpus(path, CorpusFormat::canonical, o);
    if (!r.stats.skipped.empty()) {
        const auto& first = r.stats.skipped.front();
        throw Error(ErrorKind::data, path.string() + ":" + std::to_string(first.line_number) + ": " + first.reason);
    }
    return std::move(r.store);
}

struct Ingested {
    CorpusStore store;
    Json skipped = Json::array();
    Json counts = Json::object();
};

Ingested ingest_sources(const RunConfig& c, Manifest& m) {
    if (c.sources.empty()) throw Error(ErrorKind::config, "no corpus sources configured");
    Ingested out;
    std::vector<CorpusStore> stores;
    std::size_t lines = 0, kept = 0, invalid = 0, filtered = 0;
    for (const auto& s : c.sources) {
        m.input(s.path);
        IngestOptions o;
        o.filter = s.filter;
        o.source_name = s.name;
        o.embedding_dim = c.embedding_dim;
        o.workers = c.workers;
        IngestResult r = ingest_corpus(s.path, s.format, o);
        lines += r.stats.lines;
        kept += r.stats.kept;
        invalid += r.stats.invalid;
        filtered += r.stats.filtered;
        for (const auto& sk : r.stats.skipped) {
            out.skipped.push_back({{"file", s.path.filename().string()}, {"line", sk.line_number}, {"reason", sk.reason}});
        }
        stores.push_back(std::move(r.store));
    }
    out.store = merge_stores(std::move(stores));
    out.counts = {{"lines", lines}, {"kept", kept}, {"invalid", invalid}, {"filtered", filtered},
                  {"documents", out.store.global_docs.size()}};
    return out;
}

CorpusStore score_and_filter(CorpusStore store, const RunConfig& c, Json& counts) {
    const std::size_t before = store.records.size();
    store.records = filter_by_threshold(attach_scores(std::move(store.records), c.scorer), c.threshold);
    counts["scored"] = before;
    counts["kept"] = store.records.size();
    counts["dropped"] = before - store.records.size();
    return store;
}

std::vector<TrainingExample> read_replay(const RunConfig& c, Manifest& m) {
    std::vector<TrainingExample> replay;
    if (!c.replay_path) return replay;
    m.input(*c.replay_path);
    for (const auto& j : read_jsonl(*c.replay_path)) replay.push_back(example_from_json(j));
    return replay;
}

std::map<std::string, EmbeddingIndex> indices_for(CorpusStore& store, const RunConfig& c, Json& counts) {
    if (c.vector_endpoint) store = with_embeddings(std::move(store), *c.vector_endpoint);
    std::map<std::string, EmbeddingIndex> indices;
    if (c.assembly.retrieved_fraction > 0.0) indices = build_indices(store, c.per_source_index);
    Json fps = Json::object();
    for (const auto& [source, index] : indices) fps[source] = index.fingerprint();
    counts["index_fingerprints"] = fps;
    return indices;
}

Json mixed_to_json(const MixedItem& item) {
    Json j = to_json(item.example);
    if (item.replay) j["replay"] = true;
    return j;
}

void print_counts(std::ostream& out, const std::string& subcommand, const Json& counts) {
    out << dump_line({{"subcommand", subcommand}, {"counts", counts}}) << '\n';
}

// ---- subcommands ----

void cmd_ingest(Context& ctx) {
    Manifest m("ingest", ctx.config);
    Ingested in = ingest_sources(ctx.config, m);
    export_canonical(in.store, out_path(ctx.config, "corpus.jsonl"));
    m.output(out_path(ctx.config, "corpus.jsonl"));
    write_jsonl(out_path(ctx.config, "ingest_skipped.jsonl"), in.skipped, [](const Json& j) { return j; }, m);
    m.counts() = in.counts;
    m.write();
    print_counts(ctx.out, "ingest", m.counts());
}

void cmd_filter(Context& ctx) {
    Manifest m("filter", ctx.config);
    CorpusStore store = read_canonical(default_input(ctx, {"corpus.jsonl"}), ctx.config, m);
    store = score_and_filter(std::move(store), ctx.config, m.counts());
    export_canonical(store, out_path(ctx.config, "filtered.jsonl"));
    m.output(out_path(ctx.config, "filtered.jsonl"));
    m.write();
    print_counts(ctx.out, "filter", m.counts());
}

void cmd_mine(Context& ctx) {
    const RunConfig& c = ctx.config;
    Manifest m("mine", c);
    CorpusStore store = read_canonical(default_input(ctx, {"filtered.jsonl", "corpus.jsonl"}), c, m);
    const auto indices = indices_for(store, c, m.counts());

    struct Row {
        Json line;
        bool exhausted = false;
    };
    std::vector<Row> rows(store.records.size());
    parallel_for(store.records.size(), c.workers, [&](std::size_t i) {
        const QARecord& record = store.records[i];
        RngStream plan_rng = RngStream::derive(c.assembly.seed, record.record_id, "plan");
        RngStream mining_rng = RngStream::derive(c.assembly.seed, record.record_id, "mine");
        const Strategy strategy = plan_sample(record, c.assembly, plan_rng);
        const bool relevance = c.assembly.relevance_sources.count(record.source) != 0;
        const bool retrieved = strategy.use_retrieved && !relevance;
        const EmbeddingIndex* index = nullptr;
        if (retrieved) {
            auto it = indices.find(record.source);
            if (it == indices.end()) it = indices.find("*");
            if (it != indices.end()) index = &it->second;
        }
        MiningPlan plan = c.plan;
        if (!relevance && strategy.make_unknown && plan.negatives_per_sample) {
            *plan.negatives_per_sample += record.positive_docs.size();
        }
        const MiningResult r = mine_negatives(record, index, store, plan, retrieved, mining_rng);
        Json negs = Json::array();
        for (std::size_t n = 0; n < r.docs.size(); ++n) {
            Json d = {{"doc_id", r.docs[n].doc_id}};
            if (n < r.scores.size()) d["score"] = r.scores[n];
            negs.push_back(std::move(d));
        }
        rows[i].line = {{"record_id", record.record_id},
                        {"strategy", retrieved ? "retrieved_neg" : "random_neg"},
                        {"negatives", std::move(negs)},
                        {"exhausted", r.exhausted}};
        rows[i].exhausted = r.exhausted;
    });

    std::size_t exhausted = 0;
    for (const auto& r : rows) exhausted += r.exhausted ? 1 : 0;
    write_jsonl(out_path(c, "negatives.jsonl"), rows, [](const Row& r) { return r.line; }, m);
    m.counts()["records"] = rows.size();
    m.counts()["exhausted"] = exhausted;
    m.write();
    print_counts(ctx.out, "mine", m.counts());
}

void cmd_assemble(Context& ctx) {
    const RunConfig& c = ctx.config;
    Manifest m("assemble", c);
    CorpusStore store;
    if (ctx.options.input) {
        store = read_canonical(*ctx.options.input, c, m);
    } else {
        Ingested in = ingest_sources(c, m);
        m.counts()["ingest"] = in.counts;
        store = std::move(in.store);
    }
    Json filter_counts = Json::object();
    store = score_and_filter(std::move(store), c, filter_counts);
    m.counts()["filter"] = filter_counts;

    Json mining_counts = Json::object();
    const auto indices = indices_for(store, c, mining_counts);
    m.counts()["mining"] = mining_counts;

    AssemblyInputs in;
    in.config = c.assembly;
    in.plan = c.plan;
    in.tmpl = c.tmpl;
    in.counter = c.counter;
    in.variant = c.variant;
    in.indices = &indices;
    in.replay = read_replay(c, m);
    in.workers = c.workers;
    const AssemblyResult result = assemble_corpus(store, in);

    write_jsonl(out_path(c, "samples.jsonl"), result.samples, [](const AsmSample& s) { return to_json(s); }, m);
    write_jsonl(out_path(c, "rejections.jsonl"), result.rejections, [](const Rejection& r) { return to_json(r); }, m);
    write_jsonl(out_path(c, "train.jsonl"), result.mixed, mixed_to_json, m);
    m.counts()["assembly"] = result.stats.to_json();
    m.write();
    print_counts(ctx.out, "assemble", m.counts());
}

void cmd_render(Context& ctx) {
    const RunConfig& c = ctx.config;
    Manifest m("render", c);
    const fs::path input = default_input(ctx, {"samples.jsonl"});
    m.input(input);
    std::vector<AsmSample> samples;
    for (const auto& j : read_jsonl(input)) samples.push_back(sample_from_json(j));
    validate(c.tmpl);
    const auto counter = make_counter(c.counter);

    std::vector<std::optional<TrainingExample>> slots(samples.size());
    std::vector<std::size_t> overflow(samples.size(), 0);
    parallel_for(samples.size(), c.workers, [&](std::size_t i) {
        const AsmSample& s = samples[i];
        try {
            slots[i] = pack_example(render_prompt(s, c.tmpl), render_target(s, c.variant, c.tmpl), c.tmpl, s.length_budget,
                                    *counter, meta_of(s));
        } catch (const BudgetExceeded& e) {
            overflow[i] = e.overflow();
        }
    });

    std::vector<TrainingExample> examples;
    Json over = Json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (slots[i]) {
            examples.push_back(std::move(*slots[i]));
        } else {
            over.push_back({{"sample_id", samples[i].sample_id}, {"reason", "exceeds_budget"}, {"overflow", overflow[i]}});
        }
    }
    std::vector<MixedItem> mixed;
    const auto replay = read_replay(c, m);
    if (c.assembly.replay_ratio > 0.0 && !replay.empty()) {
        RngStream mix_rng = RngStream::derive(c.assembly.seed, "", "replay-mix");
        MixResult r = mix_replay(examples, replay, c.assembly.replay_ratio, mix_rng);
        m.counts()["replay_items"] = r.replay_count;
        mixed = std::move(r.items);
    } else {
        for (auto& e : examples) mixed.push_back({std::move(e), false});
    }
    write_jsonl(out_path(c, "train.jsonl"), mixed, mixed_to_json, m);
    write_jsonl(out_path(c, "render_rejections.jsonl"), over, [](const Json& j) { return j; }, m);
    m.counts()["samples"] = samples.size();
    m.counts()["rendered"] = samples.size() - over.size();
    m.counts()["over_budget"] = over.size();
    m.write();
    print_counts(ctx.out, "render", m.counts());
}

std::vector<EvalItem> read_eval_set(const fs::path& path, Manifest& m) {
    m.input(path);
    std::vector<EvalItem> items;
    for (const auto& j : read_jsonl(path)) items.push_back(eval_item_from_json(j));
    return items;
}

std::map<std::string, std::string> read_predictions(const fs::path& path, Manifest& m) {
    m.input(path);
    std::map<std::string, std::string> preds;
    for (const auto& j : read_jsonl(path)) {
        // A line without item_id is a header (decoding parameters and such).
        if (!j.is_object() || !j.contains("item_id")) continue;
        try {
            const auto id = j.at("item_id").get<std::string>();
            if (!preds.emplace(id, j.value("output", std::string())).second) {
                throw Error(ErrorKind::data, path.string() + ": duplicate prediction for item " + id);
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::data, path.string() + ": " + e.what());
        }
    }
    return preds;
}

EvalOptions eval_options(const RunConfig& c) {
    EvalOptions o;
    o.token_mode = c.token_mode;
    o.parse_outputs = c.parse_outputs;
    o.tmpl = c.tmpl;
    o.workers = c.workers;
    return o;
}

void write_report(const EvalReport& report, const std::string& name, const RunConfig& c, Manifest& m) {
    write_text_file(out_path(c, name + ".json"), report.to_json().dump(2) + "\n");
    m.output(out_path(c, name + ".json"));
    write_text_file(out_path(c, name + ".txt"), render_report_table({report}));
    m.output(out_path(c, name + ".txt"));
}

void require_path(const std::string& value, const char* flag) {
    if (value.empty()) throw Error(ErrorKind::config, std::string(flag) + " is required");
}

void cmd_eval(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Options& o = ctx.options;
    require_path(o.eval_set, "--eval-set");
    if (!o.predictions) throw Error(ErrorKind::config, "--predictions is required");
    Manifest m("eval", c);
    const auto items = read_eval_set(o.eval_set, m);
    const auto preds = read_predictions(*o.predictions, m);
    const EvalReport report =
        evaluate_run(items, preds, parse_eval_task(o.task), parse_perturbation(o.perturbation), eval_options(c));
    write_report(report, o.name, c, m);
    m.counts() = {{"items", items.size()}, {"aggregate", report.aggregate}};
    m.write();
    ctx.out << render_report_table({report});
}

void cmd_shuffle_eval(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Options& o = ctx.options;
    require_path(o.eval_set, "--eval-set");
    Manifest m("shuffle-eval", c);
    const auto items = read_eval_set(o.eval_set, m);
    std::vector<EvalItem> shuffled(items.size());
    parallel_for(items.size(), c.workers, [&](std::size_t i) { shuffled[i] = shuffle_item(items[i], c.shuffle_k, c.seed); });
    write_jsonl(out_path(c, "eval_shuffled.jsonl"), shuffled, [](const EvalItem& it) { return to_json(it); }, m);
    m.counts() = {{"items", items.size()}, {"k", c.shuffle_k}};
    if (o.predictions) {
        const auto preds = read_predictions(*o.predictions, m);
        const EvalReport report =
            evaluate_run(shuffled, preds, parse_eval_task(o.task), Perturbation::shuffled_first_10, eval_options(c));
        write_report(report, "report_shuffled", c, m);
        m.counts()["aggregate"] = report.aggregate;
        ctx.out << render_report_table({report});
    }
    m.write();
    print_counts(ctx.out, "shuffle-eval", m.counts());
}

void cmd_probe_build(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Options& o = ctx.options;
    require_path(o.sentence, "--sentence");
    require_path(o.question, "--question");
    Manifest m("probe-build", c);
    const std::string prompt = build_repeat_probe(o.sentence, o.question, c.probe_repeats, c.tmpl);
    write_text_file(out_path(c, "probe_prompt.txt"), prompt);
    m.output(out_path(c, "probe_prompt.txt"));
    const Json meta = {{"prompt", prompt},
                       {"sentence", o.sentence},
                       {"question", o.question},
                       {"repeats", c.probe_repeats},
                       {"language", c.language}};
    write_text_file(out_path(c, "probe_prompt.json"), meta.dump(2) + "\n");
    m.output(out_path(c, "probe_prompt.json"));
    m.counts() = {{"repeats", c.probe_repeats}, {"prompt_chars", unicode::length(prompt)}};
    m.write();
    print_counts(ctx.out, "probe-build", m.counts());
}

void cmd_probe_analyze(Context& ctx) {
    const RunConfig& c = ctx.config;
    require_path(ctx.options.dump, "--dump");
    Manifest m("probe-analyze", c);
    m.input(ctx.options.dump);
    const AttentionDump dump = load_dump(ctx.options.dump);
    const ProbeReport report = probe_report(dump, c.probe);
    write_text_file(out_path(c, "probe_report.json"), report.to_json().dump(2) + "\n");
    m.output(out_path(c, "probe_report.json"));
    write_text_file(out_path(c, "attention.csv"), scores_csv(dump));
    m.output(out_path(c, "attention.csv"));
    if (dump.reduction != kCanonicalReduction) m.counts()["reduction_warning"] = dump.reduction;
    m.counts()["tokens"] = dump.scores.size();
    m.counts()["peak_count"] = report.peak_count;
    m.write();
    print_counts(ctx.out, "probe-analyze", m.counts());
}

EvalReport load_report(const fs::path& path, Manifest& m) {
    m.input(path);
    try {
        return EvalReport::from_json(Json::parse(read_text_file(path)));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::data, path.string() + ": " + e.what());
    }
}

void cmd_report(Context& ctx) {
    const RunConfig& c = ctx.config;
    const Options& o = ctx.options;
    Manifest m("report", c);
    if (!o.compare.empty()) {
        if (o.compare.size() != 2) throw Error(ErrorKind::config, "--compare takes BASE and PERTURBED report paths");
        const EvalReport base = load_report(o.compare[0], m);
        const EvalReport perturbed = with_delta(base, load_report(o.compare[1], m));
        const Json comparison = {{"base", base.to_json()},
                                 {"perturbed", perturbed.to_json()},
                                 {"delta", *perturbed.delta},
                                 {"delta_text", format_percent(*perturbed.delta)}};
        write_text_file(out_path(c, "comparison.json"), comparison.dump(2) + "\n");
        m.output(out_path(c, "comparison.json"));
        const std::string table = render_report_table({base, perturbed});
        write_text_file(out_path(c, "comparison.txt"), table);
        m.output(out_path(c, "comparison.txt"));
        m.counts()["delta"] = *perturbed.delta;
        ctx.out << table;
    } else if (o.table) {
        m.input(*o.table);
        std::vector<ScoreRow> rows;
        try {
            for (const auto& j : Json::parse(read_text_file(*o.table))) {
                ScoreRow r;
                r.label = j.at("label").get<std::string>();
                if (j.contains("multidoc_qa")) r.multidoc_qa = j.at("multidoc_qa").get<double>();
                if (j.contains("synthesis")) r.synthesis = j.at("synthesis").get<double>();
                if (j.contains("summarization")) r.summarization = j.at("summarization").get<double>();
                rows.push_back(std::move(r));
            }
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::data, *o.table + ": " + e.what());
        }
        const std::string table = render_score_table(rows);
        write_text_file(out_path(c, "score_table.txt"), table);
        m.output(out_path(c, "score_table.txt"));
        m.counts()["rows"] = rows.size();
        ctx.out << table;
    } else {
        throw Error(ErrorKind::config, "report needs --compare BASE PERTURBED or --table ROWS");
    }
    m.write();
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return kExitConfig;
        case ErrorKind::io: return kExitIo;
        case ErrorKind::data:
        case ErrorKind::protocol:
        case ErrorKind::precondition: return kExitData;
    }
    return kExitInternal;
}

void report_error(std::ostream& err, std::string_view kind, std::string_view message) {
    err << dump_line({{"error", kind}, {"message", message}}) << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"asmqa: multi-document QA data construction and evaluation"};
    app.fallthrough();
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--seed", o.seed, "Global seed");
    app.add_option("--workers", o.workers, "Worker threads (outputs do not depend on it)");
    app.add_option("--out-dir", o.out_dir, "Output directory");

    auto input_flags = [&](CLI::App* sub) {
        sub->add_option("--input", o.input, "Canonical JSON-lines corpus");
        sub->add_option("--embedding-dim", o.embedding_dim, "Declared embedding dimension");
    };
    auto filter_flags = [&](CLI::App* sub) {
        sub->add_option("--threshold", o.threshold, "Minimum quality score");
        sub->add_option("--scorer", o.scorer, "precomputed_field | remote_endpoint | constant");
        sub->add_option("--scorer-url", o.scorer_url, "Score endpoint URL");
        sub->add_option("--constant-score", o.constant_score, "Score assigned in constant mode");
    };
    auto mine_flags = [&](CLI::App* sub) {
        sub->add_option("--negatives", o.negatives, "Negatives per sample, or fill");
        sub->add_option("--retrieved-fraction", o.retrieved_fraction, "Share of samples with retrieved negatives");
        sub->add_option("--index-scope", o.index_scope, "per_source | global");
        sub->add_option("--vector-url", o.vector_url, "Embedding endpoint for docs without vectors");
    };
    auto render_flags = [&](CLI::App* sub) {
        sub->add_option("--language", o.language, "zh | en (resets the template)");
        sub->add_option("--variant", o.variant, "full | no_qr | no_qr_no_ip");
        sub->add_option("--counter", o.counter, "char | byte");
        sub->add_option("--replay", o.replay, "Replay examples (JSON-lines)");
        sub->add_option("--replay-ratio", o.replay_ratio, "Replay interleave ratio");
    };

    auto* ingest = app.add_subcommand("ingest", "Normalise source corpora into canonical JSON-lines");
    ingest->add_option("--input", o.inputs, "Source corpus file (repeatable; replaces configured sources)");
    ingest->add_option("--format", o.format, "canonical | dureader | webcpm | t2rank");
    ingest->add_option("--source-name", o.source_name, "Source name recorded on records");
    ingest->add_option("--category", o.category, "Keep only this category");
    ingest->add_flag("--single-answer", o.single_answer, "Keep only single-answer records");
    ingest->add_option("--embedding-dim", o.embedding_dim, "Declared embedding dimension");

    auto* filter = app.add_subcommand("filter", "Score records and drop those below the threshold");
    input_flags(filter);
    filter_flags(filter);

    auto* mine = app.add_subcommand("mine", "Mine negatives per record");
    input_flags(mine);
    mine_flags(mine);

    auto* assemble = app.add_subcommand("assemble", "ingest, filter, mine, assemble and render in one pass");
    input_flags(assemble);
    filter_flags(assemble);
    mine_flags(assemble);
    render_flags(assemble);
    assemble->add_option("--shuffle-fraction", o.shuffle_fraction, "Share of shuffled samples");
    assemble->add_option("--unknown-fraction", o.unknown_fraction, "Share of synthetic unknown samples");
    assemble->add_option("--max-budget", o.max_budget, "Largest length budget");
    assemble->add_option("--min-budget", o.min_budget, "Smallest length budget");

    auto* render = app.add_subcommand("render", "Render samples into training examples");
    render->add_option("--input", o.input, "samples.jsonl");
    render_flags(render);

    auto eval_flags = [&](CLI::App* sub) {
        sub->add_option("--eval-set", o.eval_set, "Eval items (JSON-lines)");
        sub->add_option("--task", o.task, "multidoc_qa | synthesis | summarization");
        sub->add_option("--token-mode", o.token_mode, "char | whitespace | auto");
        sub->add_flag("--raw-output", o.raw_output, "Score the raw output instead of the parsed answer");
        sub->add_option("--language", o.language, "zh | en (template used to parse outputs)");
    };
    auto* eval = app.add_subcommand("eval", "Score predictions against an eval set");
    eval_flags(eval);
    eval->add_option("--predictions", o.predictions, "Predictions (JSON-lines)");
    eval->add_option("--perturbation", o.perturbation, "none | shuffled_first_10");
    eval->add_option("--name", o.name, "Report file stem");

    auto* shuffle_eval = app.add_subcommand("shuffle-eval", "Shuffle the leading documents of each eval item");
    eval_flags(shuffle_eval);
    shuffle_eval->add_option("--k", o.k, "Number of leading documents to permute");
    shuffle_eval->add_option("--predictions", o.predictions, "Predictions on the shuffled set");

    auto* probe_build = app.add_subcommand("probe-build", "Build a repeated-sentence probe prompt");
    probe_build->add_option("--sentence", o.sentence, "Sentence to repeat");
    probe_build->add_option("--question", o.question, "Probe question");
    probe_build->add_option("--repeats", o.repeats, "Repetitions");
    probe_build->add_option("--language", o.language, "zh | en");

    auto* probe_analyze = app.add_subcommand("probe-analyze", "Peaks and positional mass of an attention dump");
    probe_analyze->add_option("--dump", o.dump, "Attention dump (JSON)");
    probe_analyze->add_option("--bins", o.bins, "Positional mass bins");
    probe_analyze->add_option("--min-separation", o.min_separation, "Minimum distance between peaks");
    probe_analyze->add_option("--sigmas", o.sigmas, "Peak threshold in standard deviations above the mean");

    auto* report = app.add_subcommand("report", "Compare reports or render a score table");
    report->add_option("--compare", o.compare, "BASE PERTURBED report.json paths")->expected(2);
    report->add_option("--table", o.table, "JSON array of score rows");

    const std::map<const CLI::App*, void (*)(Context&)> handlers = {
        {ingest, cmd_ingest},         {filter, cmd_filter},
        {mine, cmd_mine},             {assemble, cmd_assemble},
        {render, cmd_render},         {eval, cmd_eval},
        {shuffle_eval, cmd_shuffle_eval}, {probe_build, cmd_probe_build},
        {probe_analyze, cmd_probe_analyze}, {report, cmd_report},
    };

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(err, "config", e.what());
        return kExitConfig;
    }

    try {
        RunConfig config = o.config.empty() ? RunConfig{} : load_config(o.config);
        apply_overrides(o, config);
        validate(config);
        fs::create_directories(config.out_dir);
        Context ctx{std::move(config), o, out};
        const CLI::App* chosen = app.get_subcommands().front();
        handlers.at(chosen)(ctx);
        return kExitOk;
    } catch (const Error& e) {
        report_error(err, to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        report_error(err, "io", e.what());
        return kExitIo;
    } catch (const Json::exception& e) {
        report_error(err, "data", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        report_error(err, "internal", e.what());
        return kExitInternal;
    }
}

}  // namespace asmqa::cli
