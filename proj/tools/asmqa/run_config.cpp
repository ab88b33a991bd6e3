#include "run_config.hpp"

#include "asmqa/digest.hpp"
#include "asmqa/error.hpp"

namespace asmqa::cli {

RunConfig::RunConfig() {
    // Without a configured reward model every record passes the default threshold.
    scorer.mode = ScorerMode::constant;
    scorer.constant_value = 0.0;
}

void RunConfig::propagate_seed() {
    assembly.seed = seed;
    plan.seed = seed;
    plan.retrieved_fraction = assembly.retrieved_fraction;
}

namespace {

template <typename T>
void read(const Json& j, const char* key, T& into) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            into = it->get<T>();
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::config, std::string("config key '") + key + "': " + e.what());
        }
    }
}

template <typename T>
void read(const Json& j, const char* key, std::optional<T>& into) {
    T value{};
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        read(j, key, value);
        into = value;
    }
}

const Json& section(const Json& j, const char* key) {
    static const Json kEmpty = Json::object();
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return kEmpty;
    if (!it->is_object()) throw Error(ErrorKind::config, std::string("config section '") + key + "' must be an object");
    return *it;
}

}  // namespace

RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
    RunConfig c;
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);
    if (auto it = j.find("out_dir"); it != j.end()) c.out_dir = it->get<std::string>();
    read(j, "embedding_dim", c.embedding_dim);

    if (auto it = j.find("sources"); it != j.end()) {
        for (const auto& s : *it) {
            SourceSpec src;
            src.path = s.at("path").get<std::string>();
            src.format = parse_corpus_format(s.value("format", std::string("canonical")));
            if (s.contains("name")) src.name = s.at("name").get<std::string>();
            if (s.contains("category")) src.filter.category = s.at("category").get<std::string>();
            read(s, "single_answer", src.filter.single_answer_only);
            c.sources.push_back(std::move(src));
        }
    }

    const Json& q = section(j, "quality");
    if (q.contains("mode")) c.scorer.mode = parse_scorer_mode(q.at("mode").get<std::string>());
    if (q.contains("endpoint_url")) c.scorer.endpoint_url = q.at("endpoint_url").get<std::string>();
    read(q, "batch_size", c.scorer.batch_size);
    read(q, "constant_value", c.scorer.constant_value);
    read(q, "retries", c.scorer.retries);
    read(q, "timeout_seconds", c.scorer.timeout_seconds);
    read(q, "max_in_flight", c.scorer.max_in_flight);
    read(q, "text_template", c.scorer.text_template);
    read(q, "threshold", c.threshold);

    const Json& m = section(j, "mining");
    if (auto it = m.find("negatives_per_sample"); it != m.end()) {
        if (it->is_string()) {
            if (it->get<std::string>() != "fill") throw Error(ErrorKind::config, "negatives_per_sample must be an integer or \"fill\"");
            c.plan.negatives_per_sample.reset();
        } else {
            c.plan.negatives_per_sample = it->get<std::size_t>();
        }
    }
    read(m, "candidate_pool", c.plan.candidate_pool);
    if (m.contains("index_scope")) {
        const auto scope = m.at("index_scope").get<std::string>();
        if (scope != "per_source" && scope != "global") throw Error(ErrorKind::config, "index_scope must be per_source or global");
        c.per_source_index = scope == "per_source";
    }
    if (auto it = m.find("vector_endpoint"); it != m.end() && !it->is_null()) {
        VectorEndpointSpec v;
        v.url = it->at("url").get<std::string>();
        read(*it, "batch_size", v.batch_size);
        read(*it, "retries", v.retries);
        read(*it, "timeout_seconds", v.timeout_seconds);
        c.vector_endpoint = v;
    }

    const Json& a = section(j, "assembly");
    read(a, "retrieved_fraction", c.assembly.retrieved_fraction);
    read(a, "shuffle_fraction", c.assembly.shuffle_fraction);
    read(a, "unknown_fraction", c.assembly.unknown_fraction);
    read(a, "replay_ratio", c.assembly.replay_ratio);
    read(a, "max_budget", c.assembly.max_budget);
    read(a, "min_budget", c.assembly.min_budget);
    read(a, "unknown_answer", c.assembly.unknown_answer);
    read(a, "relevance_sources", c.assembly.relevance_sources);
    read(a, "relevance_sample_size", c.assembly.relevance_sample_size);
    read(a, "allow_positives_only", c.assembly.allow_positives_only);

    const Json& r = section(j, "render");
    read(r, "language", c.language);
    if (c.language == "zh") {
        c.tmpl = PromptTemplate::chinese();
    } else if (c.language == "en") {
        c.tmpl = PromptTemplate::english();
    } else {
        throw Error(ErrorKind::config, "render.language must be zh or en");
    }
    if (auto it = r.find("template"); it != r.end()) c.tmpl = template_from_json(*it, c.tmpl);
    read(r, "counter", c.counter);
    if (r.contains("variant")) c.variant = parse_target_variant(r.at("variant").get<std::string>());

    const Json& rp = section(j, "replay");
    if (rp.contains("path")) c.replay_path = rp.at("path").get<std::string>();

    const Json& e = section(j, "eval");
    if (e.contains("token_mode")) c.token_mode = parse_token_mode(e.at("token_mode").get<std::string>());
    read(e, "parse_outputs", c.parse_outputs);
    read(e, "shuffle_k", c.shuffle_k);

    const Json& p = section(j, "probe");
    read(p, "n_bins", c.probe.n_bins);
    read(p, "min_separation", c.probe.min_separation);
    read(p, "threshold_sigmas", c.probe.threshold_sigmas);
    read(p, "repeats", c.probe_repeats);

    c.propagate_seed();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw Error(ErrorKind::config, "config file not found: " + path.string());
    Json j;
    try {
        j = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::config, path.string() + ": " + e.what());
    }
    RunConfig c;
    try {
        c = config_from_json(j);
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::config, path.string() + ": " + e.what());
    }
    // Relative input paths are relative to the config file.
    const auto base = path.parent_path();
    for (auto& s : c.sources) {
        if (s.path.is_relative()) s.path = base / s.path;
    }
    if (c.replay_path && c.replay_path->is_relative()) c.replay_path = base / *c.replay_path;
    return c;
}

Json to_json(const RunConfig& c) {
    Json sources = Json::array();
    for (const auto& s : c.sources) {
        Json js = {{"path", s.path.string()}, {"format", to_string(s.format)}, {"single_answer", s.filter.single_answer_only}};
        if (s.name) js["name"] = *s.name;
        if (s.filter.category) js["category"] = *s.filter.category;
        sources.push_back(std::move(js));
    }
    Json quality = {
        {"mode", to_string(c.scorer.mode)},
        {"batch_size", c.scorer.batch_size},
        {"constant_value", c.scorer.constant_value},
        {"retries", c.scorer.retries},
        {"text_template", c.scorer.text_template},
        {"threshold", c.threshold},
    };
    if (c.scorer.endpoint_url) quality["endpoint_url"] = *c.scorer.endpoint_url;
    Json mining = {
        {"negatives_per_sample", c.plan.negatives_per_sample ? Json(*c.plan.negatives_per_sample) : Json("fill")},
        {"candidate_pool", c.plan.candidate_pool},
        {"index_scope", c.per_source_index ? "per_source" : "global"},
    };
    if (c.vector_endpoint) mining["vector_endpoint"] = {{"url", c.vector_endpoint->url}, {"batch_size", c.vector_endpoint->batch_size}};
    Json assembly = {
        {"retrieved_fraction", c.assembly.retrieved_fraction},
        {"shuffle_fraction", c.assembly.shuffle_fraction},
        {"unknown_fraction", c.assembly.unknown_fraction},
        {"replay_ratio", c.assembly.replay_ratio},
        {"max_budget", c.assembly.max_budget},
        {"min_budget", c.assembly.min_budget},
        {"unknown_answer", c.assembly.unknown_answer},
        {"relevance_sources", c.assembly.relevance_sources},
        {"allow_positives_only", c.assembly.allow_positives_only},
    };
    if (c.assembly.relevance_sample_size) assembly["relevance_sample_size"] = *c.assembly.relevance_sample_size;
    Json out = {
        {"seed", c.seed},
        {"sources", std::move(sources)},
        {"quality", std::move(quality)},
        {"mining", std::move(mining)},
        {"assembly", std::move(assembly)},
        {"render", {{"language", c.language}, {"template", to_json(c.tmpl)}, {"counter", c.counter}, {"variant", to_string(c.variant)}}},
        {"eval", {{"token_mode", to_string(c.token_mode)}, {"parse_outputs", c.parse_outputs}, {"shuffle_k", c.shuffle_k}}},
        {"probe", {{"n_bins", c.probe.n_bins}, {"min_separation", c.probe.min_separation}, {"threshold_sigmas", c.probe.threshold_sigmas}, {"repeats", c.probe_repeats}}},
    };
    if (c.embedding_dim) out["embedding_dim"] = *c.embedding_dim;
    if (c.replay_path) out["replay"] = {{"path", c.replay_path->string()}};
    return out;
}

std::string config_hash(const RunConfig& config) { return sha256_hex(to_json(config).dump()); }

void validate(const RunConfig& c) {
    validate(c.scorer);
    validate(c.plan);
    validate(c.assembly);
    validate(c.tmpl);
    make_counter(c.counter);
    if (c.workers == 0) throw Error(ErrorKind::config, "workers must be >= 1");
    if (c.probe.n_bins == 0 || c.probe.min_separation == 0) throw Error(ErrorKind::config, "probe n_bins and min_separation must be >= 1");
    if (c.probe_repeats == 0) throw Error(ErrorKind::config, "probe repeats must be >= 1");
}

}  // namespace asmqa::cli
