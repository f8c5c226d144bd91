#include "sysarch/config.hpp"

#include <cmath>
#include <set>

#include "sysarch/util.hpp"

namespace sysarch {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& path, const std::string& message)
{
    throw Error(ErrorCode::InvalidConfig, path + ": " + message, path);
}

// Reads fields of one object and rejects keys nobody asked for.
class Reader {
public:
    Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            invalid(path_, "expected an object");
        }
    }

    ~Reader() noexcept(false)
    {
        if (std::uncaught_exceptions() > 0) {
            return;
        }
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.contains(key)) {
                invalid(path_ + "." + key, "unknown configuration key");
            }
        }
    }

    const json* get(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out)
    {
        if (const json* v = get(key)) {
            if (!v->is_number()) {
                invalid(child(key), "expected a number");
            }
            out = v->get<double>();
            if (!std::isfinite(out)) {
                invalid(child(key), "must be finite");
            }
        }
    }

    void integer(const std::string& key, int& out)
    {
        if (const json* v = get(key)) {
            if (!v->is_number_integer()) {
                invalid(child(key), "expected an integer");
            }
            out = v->get<int>();
        }
    }

    void count(const std::string& key, std::size_t& out)
    {
        if (const json* v = get(key)) {
            if (!v->is_number_unsigned() || v->get<std::size_t>() == 0) {
                invalid(child(key), "expected a positive integer");
            }
            out = v->get<std::size_t>();
        }
    }

    void text(const std::string& key, std::string& out)
    {
        if (const json* v = get(key)) {
            if (!v->is_string()) {
                invalid(child(key), "expected a string");
            }
            out = v->get<std::string>();
        }
    }

    template <typename T>
    void optional(const std::string& key, std::optional<T>& out)
    {
        if (const json* v = get(key)) {
            try {
                if constexpr (std::is_same_v<T, std::string>) {
                    if (!v->is_string()) {
                        throw std::invalid_argument("type");
                    }
                } else if constexpr (std::is_same_v<T, int>) {
                    if (!v->is_number_integer()) {
                        throw std::invalid_argument("type");
                    }
                } else {
                    if (!v->is_number()) {
                        throw std::invalid_argument("type");
                    }
                }
                out = v->get<T>();
            } catch (const std::exception&) {
                invalid(child(key), "wrong type");
            }
        }
    }

    [[nodiscard]] std::string child(const std::string& key) const { return path_ + "." + key; }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_weights(Reader& parent, const std::string& key, SimWeights& w)
{
    if (const json* v = parent.get(key)) {
        Reader r(*v, parent.child(key));
        r.number("text", w.text);
        r.number("degree", w.degree);
        r.number("ancestor", w.ancestor);
        r.number("neighbor", w.neighbor);
        r.number("threshold", w.threshold);
    }
}

void read_agent(const json& v, const std::string& path, AgentOverrides& a)
{
    Reader r(v, path);
    r.optional("endpoint", a.endpoint);
    r.optional("model", a.model);
    r.optional("temperature", a.temperature);
    r.optional("max_retries", a.max_retries);
    r.optional("credential_env", a.credential_env);
    r.optional("backoff_ms", a.backoff_ms);
    r.optional("timeout_s", a.timeout_s);
    if (a.temperature && *a.temperature < 0) {
        invalid(path + ".temperature", "must be >= 0");
    }
    if (a.max_retries && *a.max_retries < 0) {
        invalid(path + ".max_retries", "must be >= 0");
    }
}

ordered_json weights_json(const SimWeights& w)
{
    return {{"text", w.text}, {"degree", w.degree}, {"ancestor", w.ancestor}, {"neighbor", w.neighbor},
            {"threshold", w.threshold}};
}

ordered_json agent_json(const AgentOverrides& a)
{
    ordered_json out = ordered_json::object();
    if (a.endpoint) {
        out["endpoint"] = *a.endpoint;
    }
    if (a.model) {
        out["model"] = *a.model;
    }
    if (a.temperature) {
        out["temperature"] = *a.temperature;
    }
    if (a.max_retries) {
        out["max_retries"] = *a.max_retries;
    }
    if (a.credential_env) {
        out["credential_env"] = *a.credential_env;
    }
    if (a.backoff_ms) {
        out["backoff_ms"] = *a.backoff_ms;
    }
    if (a.timeout_s) {
        out["timeout_s"] = *a.timeout_s;
    }
    return out;
}

void apply(const AgentOverrides& o, AgentHandle& h)
{
    if (o.endpoint) {
        h.endpoint = *o.endpoint;
    }
    if (o.model) {
        h.model = *o.model;
    }
    if (o.temperature) {
        h.temperature = *o.temperature;
    }
    if (o.max_retries) {
        h.max_retries = *o.max_retries;
    }
    if (o.credential_env) {
        h.credential_env = *o.credential_env;
    }
    if (o.backoff_ms) {
        h.backoff_ms = *o.backoff_ms;
    }
    if (o.timeout_s) {
        h.timeout_s = *o.timeout_s;
    }
}

}  // namespace

RunConfig parse_config(const nlohmann::json& doc)
{
    RunConfig cfg;
    {
        Reader root(doc, "$");
        if (const json* v = root.get("similarity")) {
            Reader r(*v, "$.similarity");
            r.text("provider", cfg.similarity.provider);
            r.text("endpoint", cfg.similarity.endpoint);
            r.text("model", cfg.similarity.model);
            r.text("credential_env", cfg.similarity.credential_env);
            if (cfg.similarity.provider != "tf-cosine" && cfg.similarity.provider != "embedding") {
                invalid("$.similarity.provider", "must be `tf-cosine` or `embedding`");
            }
        }
        if (const json* v = root.get("match")) {
            Reader r(*v, "$.match");
            read_weights(r, "round1", cfg.match.round1);
            read_weights(r, "round2", cfg.match.round2);
            r.number("ancestor_decay", cfg.match.ancestor_decay);
            if (const json* p = r.get("parallel")) {
                if (!p->is_boolean()) {
                    invalid("$.match.parallel", "expected a boolean");
                }
                cfg.match.parallel = p->get<bool>();
            }
        }
        if (const json* v = root.get("penalties")) {
            Reader r(*v, "$.penalties");
            r.number("layout_delta", cfg.layout_delta);
            r.number("legibility_delta", cfg.legibility_delta);
        }
        if (const json* v = root.get("weights")) {
            Reader r(*v, "$.weights");
            r.number("semantic", cfg.tiers.semantic);
            r.number("layout", cfg.tiers.layout);
            r.number("visual", cfg.tiers.visual);
        }
        if (const json* v = root.get("semantic_weights")) {
            Reader r(*v, "$.semantic_weights");
            r.number("node", cfg.semantic.node);
            r.number("edge", cfg.semantic.edge);
            r.number("hierarchy", cfg.semantic.hierarchy);
        }
        if (const json* v = root.get("agents")) {
            if (!v->is_object()) {
                invalid("$.agents", "expected an object");
            }
            for (const auto& [key, value] : v->items()) {
                const std::string path = "$.agents." + key;
                if (key == "default") {
                    read_agent(value, path, cfg.agent_defaults);
                } else if (auto role = parse_agent_role(key)) {
                    read_agent(value, path, cfg.agents[*role]);
                } else {
                    invalid(path, "unknown agent role");
                }
            }
        }
        if (const json* v = root.get("concurrency")) {
            Reader r(*v, "$.concurrency");
            r.count("samples", cfg.sample_concurrency);
            r.count("drafts", cfg.pipeline.draft_concurrency);
        }
        if (const json* v = root.get("pipeline")) {
            Reader r(*v, "$.pipeline");
            r.count("char_budget", cfg.pipeline.char_budget);
        }
        if (const json* v = root.get("layout")) {
            Reader r(*v, "$.layout");
            r.count("chars_per_line", cfg.layout.chars_per_line);
            r.number("char_width", cfg.layout.char_width);
            r.number("line_height", cfg.layout.line_height);
            r.number("font_size", cfg.layout.font_size);
            r.number("text_padding", cfg.layout.text_padding);
            r.number("min_box_w", cfg.layout.min_box_w);
            r.number("min_box_h", cfg.layout.min_box_h);
            r.number("container_padding", cfg.layout.container_padding);
            r.number("gap", cfg.layout.gap);
            r.number("margin", cfg.layout.margin);
            r.number("icon_size", cfg.layout.icon_size);
            r.number("aspect", cfg.layout.aspect);
            r.number("units_per_inch", cfg.layout.units_per_inch);
            r.text("asset_dir", cfg.layout.asset_dir);
        }
        if (const json* v = root.get("filter")) {
            Reader r(*v, "$.filter");
            r.number("threshold", cfg.filter_threshold);
        }
    }

    const double tier_sum = cfg.tiers.semantic + cfg.tiers.layout + cfg.tiers.visual;
    if (cfg.tiers.semantic < 0 || cfg.tiers.layout < 0 || cfg.tiers.visual < 0 || std::abs(tier_sum - 1.0) > 1e-9) {
        invalid("$.weights", "tier weights must be non-negative and sum to 1");
    }
    (void)cfg.match.round1.normalized();
    (void)cfg.match.round2.normalized();
    if (cfg.match.ancestor_decay <= 0 || cfg.match.ancestor_decay > 1) {
        invalid("$.match.ancestor_decay", "must lie in (0,1]");
    }
    if (cfg.layout_delta < 0 || cfg.legibility_delta < 0) {
        invalid("$.penalties", "penalties must be >= 0");
    }
    if (cfg.filter_threshold < 0 || cfg.filter_threshold > 1) {
        invalid("$.filter.threshold", "must lie in [0,1]");
    }
    if (cfg.layout.char_width <= 0 || cfg.layout.line_height <= 0 || cfg.layout.aspect <= 0 ||
        cfg.layout.units_per_inch <= 0 || cfg.layout.min_box_w <= 0 || cfg.layout.min_box_h <= 0 ||
        cfg.layout.gap < 0 || cfg.layout.container_padding < 0 || cfg.layout.text_padding < 0 ||
        cfg.layout.margin < 0 || cfg.layout.icon_size <= 0) {
        invalid("$.layout", "sizes must be positive");
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::InvalidConfig, "config is not valid JSON: " + std::string(e.what()), path);
    }
    return parse_config(doc);
}

ordered_json to_json(const RunConfig& cfg)
{
    ordered_json out;
    out["similarity"] = {{"provider", cfg.similarity.provider},
                         {"endpoint", cfg.similarity.endpoint},
                         {"model", cfg.similarity.model},
                         {"credential_env", cfg.similarity.credential_env}};
    out["match"] = {{"round1", weights_json(cfg.match.round1)},
                    {"round2", weights_json(cfg.match.round2)},
                    {"ancestor_decay", cfg.match.ancestor_decay}};
    out["penalties"] = {{"layout_delta", cfg.layout_delta}, {"legibility_delta", cfg.legibility_delta}};
    out["weights"] = {{"semantic", cfg.tiers.semantic}, {"layout", cfg.tiers.layout}, {"visual", cfg.tiers.visual}};
    out["semantic_weights"] = {
        {"node", cfg.semantic.node}, {"edge", cfg.semantic.edge}, {"hierarchy", cfg.semantic.hierarchy}};
    ordered_json agents;
    agents["default"] = agent_json(cfg.agent_defaults);
    for (const auto& [role, o] : cfg.agents) {
        agents[std::string(to_string(role))] = agent_json(o);
    }
    out["agents"] = std::move(agents);
    out["concurrency"] = {{"samples", cfg.sample_concurrency}, {"drafts", cfg.pipeline.draft_concurrency}};
    out["pipeline"] = {{"char_budget", cfg.pipeline.char_budget}};
    const auto& l = cfg.layout;
    out["layout"] = {{"chars_per_line", l.chars_per_line}, {"char_width", l.char_width},
                     {"line_height", l.line_height},       {"font_size", l.font_size},
                     {"text_padding", l.text_padding},     {"min_box_w", l.min_box_w},
                     {"min_box_h", l.min_box_h},           {"container_padding", l.container_padding},
                     {"gap", l.gap},                       {"margin", l.margin},
                     {"icon_size", l.icon_size},           {"aspect", l.aspect},
                     {"units_per_inch", l.units_per_inch}, {"asset_dir", l.asset_dir}};
    out["filter"] = {{"threshold", cfg.filter_threshold}};
    return out;
}

std::string config_hash(const RunConfig& cfg)
{
    return sha256_hex(to_json(cfg).dump()).substr(0, 16);
}

AgentHandle make_handle(const RunConfig& cfg, AgentRole role, TransportKind transport)
{
    AgentHandle h = AgentHandle::for_role(role);
    apply(cfg.agent_defaults, h);
    if (auto it = cfg.agents.find(role); it != cfg.agents.end()) {
        apply(it->second, h);
    }
    h.transport = transport;
    return h;
}

std::shared_ptr<SimilarityProvider> make_provider(const RunConfig& cfg, bool offline)
{
    if (offline || cfg.similarity.provider == "tf-cosine") {
        return std::make_shared<TfCosineProvider>();
    }
    return std::make_shared<FallbackProvider>(std::make_shared<EmbeddingProvider>(
        cfg.similarity.endpoint, cfg.similarity.model, cfg.similarity.credential_env));
}

}  // namespace sysarch
