#pragma once

// Run configuration shared by every CLI command. Loaded from a JSON file;
// every field is optional and unknown keys are rejected.

#include <map>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "sysarch/agent.hpp"
#include "sysarch/layout.hpp"
#include "sysarch/matcher.hpp"
#include "sysarch/pipeline.hpp"
#include "sysarch/scorer.hpp"
#include "sysarch/similarity.hpp"

namespace sysarch {

struct SimilarityConfig {
    std::string provider = "tf-cosine";  // tf-cosine | embedding
    std::string endpoint = "https://api.openai.com/v1/embeddings";
    std::string model = "text-embedding-3-small";
    std::string credential_env = "OPENAI_API_KEY";
};

struct AgentOverrides {
    std::optional<std::string> endpoint;
    std::optional<std::string> model;
    std::optional<double> temperature;
    std::optional<int> max_retries;
    std::optional<std::string> credential_env;
    std::optional<int> backoff_ms;
    std::optional<int> timeout_s;
};

struct RunConfig {
    SimilarityConfig similarity;
    MatchConfig match;
    double layout_delta = 0.1;
    double legibility_delta = 0.1;
    TierWeights tiers;
    SemanticWeights semantic;
    AgentOverrides agent_defaults;
    std::map<AgentRole, AgentOverrides> agents;
    std::size_t sample_concurrency = 4;
    PipelineConfig pipeline;
    LayoutStyle layout;
    double filter_threshold = 0.75;
};

/// Parses and validates a configuration document. Throws Error(InvalidConfig).
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Effective configuration with every field spelled out (stable key order).
nlohmann::ordered_json to_json(const RunConfig& cfg);

/// First 16 hex digits of the SHA-256 of the effective configuration.
std::string config_hash(const RunConfig& cfg);

/// Handle for a role after applying defaults and overrides.
AgentHandle make_handle(const RunConfig& cfg, AgentRole role, TransportKind transport);

/// Builds the configured similarity provider. `offline` forces word-frequency cosine.
std::shared_ptr<SimilarityProvider> make_provider(const RunConfig& cfg, bool offline);

}  // namespace sysarch
