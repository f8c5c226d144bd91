#pragma once

// Topological regularization: repairs edges declared on the wrong parent,
// applies agent-proposed reroutes that land legal, and deletes whatever
// still violates the sibling-edge rule.

#include <string>
#include <vector>

#include <json.hpp>

#include "sysarch/graph.hpp"

namespace sysarch {

class AgentGateway;
struct AgentHandle;

struct DeletedEdge {
    std::string id;
    ViolationCode code;
};

struct RerouteSuggestion {
    std::string edge_id;
    std::string source;
    std::string target;
};

struct RejectedSuggestion {
    RerouteSuggestion suggestion;
    // Malformed: unparseable entry or unknown edge. Otherwise the reroute was
    // well-formed but would not land on two distinct siblings.
    bool malformed = false;
    std::string reason;
};

struct RegularizationReport {
    std::vector<std::string> rehomed;
    std::vector<DeletedEdge> deleted;
    std::vector<RerouteSuggestion> reroute_suggestions;  // accepted ones
    std::vector<RejectedSuggestion> rejected_suggestions;
    bool semantic_pass_skipped = false;
    std::string skip_reason;

    [[nodiscard]] bool empty() const noexcept
    {
        return rehomed.empty() && deleted.empty() && reroute_suggestions.empty() && rejected_suggestions.empty();
    }
};

nlohmann::ordered_json to_json(const RegularizationReport& r);

struct Regularized {
    HierGraph graph;
    RegularizationReport report;
};

/// Moves every edge whose endpoints share a direct parent onto that parent.
Regularized rehome_edges(const HierGraph& g);

/// Rehomes, then deletes NON_SIBLING_EDGE, SELF_LOOP and DANGLING_REF edges in
/// document order. Nodes are never removed. Input ids must be unique.
Regularized prune_violations(const HierGraph& g);

/// Applies a reroute list: only suggestions naming an existing edge whose new
/// endpoints are distinct siblings are accepted. Does not prune.
Regularized apply_reroutes(const HierGraph& g, const std::vector<RerouteSuggestion>& suggestions,
                           std::vector<RejectedSuggestion> already_rejected = {});

/// Asks the agent for reroutes, applies the legal ones, then prunes. Throws
/// Error(AgentUnavailable) when the agent cannot be reached.
Regularized semantic_filter(const HierGraph& g, AgentGateway& gateway, const AgentHandle& handle);

}  // namespace sysarch
