#include "sysarch/regularizer.hpp"

#include <set>

#include "graph/graph_internal.hpp"
#include "sysarch/agent.hpp"

namespace sysarch {

using nlohmann::ordered_json;

ordered_json to_json(const RegularizationReport& r)
{
    ordered_json out;
    out["rehomed"] = r.rehomed;
    ordered_json deleted = ordered_json::array();
    for (const auto& d : r.deleted) {
        deleted.push_back({{"id", d.id}, {"code", to_string(d.code)}});
    }
    out["deleted"] = std::move(deleted);
    ordered_json accepted = ordered_json::array();
    for (const auto& s : r.reroute_suggestions) {
        accepted.push_back({{"edge_id", s.edge_id}, {"source", s.source}, {"target", s.target}});
    }
    out["reroute_suggestions"] = std::move(accepted);
    ordered_json rejected = ordered_json::array();
    for (const auto& s : r.rejected_suggestions) {
        rejected.push_back({{"edge_id", s.suggestion.edge_id},
                            {"source", s.suggestion.source},
                            {"target", s.suggestion.target},
                            {"code", s.malformed ? "MALFORMED_SUGGESTION" : "ILLEGAL_REROUTE"},
                            {"reason", s.reason}});
    }
    out["rejected_suggestions"] = std::move(rejected);
    out["semantic_pass_skipped"] = r.semantic_pass_skipped;
    if (!r.skip_reason.empty()) {
        out["skip_reason"] = r.skip_reason;
    }
    return out;
}

namespace {

// Removes the edges selected by `take` from every node (document order) and
// returns them together with the id of the node each was declared on.
template <typename Pred>
std::vector<std::pair<HierEdge, std::string>> extract_edges(HierNode& node, Pred&& take)
{
    std::vector<std::pair<HierEdge, std::string>> out;
    if (!node.has_payload()) {
        for (auto& child : node.child_nodes()) {
            auto sub = extract_edges(child, take);
            out.insert(out.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
        }
    }
    std::vector<HierEdge> keep;
    for (auto& e : node.edges) {
        if (take(e, node)) {
            out.emplace_back(std::move(e), node.id);
        } else {
            keep.push_back(std::move(e));
        }
    }
    node.edges = std::move(keep);
    return out;
}

}  // namespace

Regularized rehome_edges(const HierGraph& g)
{
    Regularized out{g, {}};
    const auto parents = parent_map(g);
    const auto ids = node_id_set(g);
    auto moved = extract_edges(out.graph.root, [&](const HierEdge& e, const HierNode& owner) {
        return classify_edge(e, owner.id, parents, ids) == ViolationCode::MisdeclaredEdge;
    });
    for (auto& [edge, from] : moved) {
        HierNode* host = find_node(out.graph.root, parents.at(edge.source));
        out.report.rehomed.push_back(edge.id);
        edge.violating = false;
        host->edges.push_back(std::move(edge));
    }
    return out;
}

Regularized prune_violations(const HierGraph& g)
{
    Regularized out = rehome_edges(g);
    const auto parents = parent_map(out.graph);
    const auto ids = node_id_set(out.graph);
    auto removed = extract_edges(out.graph.root, [&](const HierEdge& e, const HierNode& owner) {
        return classify_edge(e, owner.id, parents, ids).has_value();
    });
    for (const auto& [edge, owner] : removed) {
        out.report.deleted.push_back({edge.id, *classify_edge(edge, owner, parents, ids)});
    }
    return out;
}

Regularized apply_reroutes(const HierGraph& g, const std::vector<RerouteSuggestion>& suggestions,
                           std::vector<RejectedSuggestion> already_rejected)
{
    Regularized out{g, {}};
    out.report.rejected_suggestions = std::move(already_rejected);
    const auto parents = parent_map(g);
    const auto ids = node_id_set(g);
    std::set<std::string> edge_ids;
    visit_edges_in_document_order(g.root, [&](const HierEdge& e, const HierNode&, const std::string&) {
        edge_ids.insert(e.id);
    });

    std::set<std::string> handled;
    for (const auto& s : suggestions) {
        auto reject = [&](bool malformed, std::string why) {
            out.report.rejected_suggestions.push_back({s, malformed, std::move(why)});
        };
        if (s.edge_id.empty() || s.source.empty() || s.target.empty()) {
            reject(true, "suggestion is missing edge_id, source or target");
            continue;
        }
        if (!edge_ids.contains(s.edge_id)) {
            reject(true, "no edge with id `" + s.edge_id + "`");
            continue;
        }
        if (!handled.insert(s.edge_id).second) {
            reject(true, "edge `" + s.edge_id + "` already rerouted");
            continue;
        }
        if (!ids.contains(s.source) || !ids.contains(s.target)) {
            reject(false, "reroute names an unknown node");
            continue;
        }
        if (s.source == s.target) {
            reject(false, "reroute would create a self loop");
            continue;
        }
        auto ps = parents.find(s.source);
        auto pt = parents.find(s.target);
        if (ps == parents.end() || pt == parents.end() || ps->second != pt->second) {
            reject(false, "rerouted endpoints `" + s.source + "` and `" + s.target + "` are not siblings");
            continue;
        }
        auto taken = extract_edges(out.graph.root, [&](const HierEdge& e, const HierNode&) { return e.id == s.edge_id; });
        for (auto& [edge, owner] : taken) {
            edge.source = s.source;
            edge.target = s.target;
            edge.violating = false;
            find_node(out.graph.root, ps->second)->edges.push_back(std::move(edge));
        }
        out.report.reroute_suggestions.push_back(s);
    }
    return out;
}

namespace {

std::vector<RerouteSuggestion> parse_suggestions(const nlohmann::json& payload, std::vector<RejectedSuggestion>& rejected)
{
    std::vector<RerouteSuggestion> out;
    for (const auto& item : payload.at("reroutes")) {
        RerouteSuggestion s;
        if (!item.is_object()) {
            rejected.push_back({s, true, "reroute entry is not an object"});
            continue;
        }
        auto str = [&](const char* key) {
            auto it = item.find(key);
            return (it != item.end() && it->is_string()) ? it->get<std::string>() : std::string{};
        };
        s.edge_id = str("edge_id");
        s.source = str("source");
        s.target = str("target");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

Regularized semantic_filter(const HierGraph& g, AgentGateway& gateway, const AgentHandle& handle)
{
    // Misdeclared edges are repaired losslessly first; the agent only sees what remains.
    Regularized base = rehome_edges(g);
    const auto violations = validate(base.graph);
    if (violations.empty()) {
        base.report.skip_reason = "no violations to reroute";
        return base;
    }

    AgentTask task;
    task.prompt = "reroute";
    task.slots["graph"] = canonical_serialize(base.graph);
    task.slots["violations"] = to_json(violations).dump(2);
    task.validator = [](const nlohmann::json& payload) {
        if (!payload.is_object() || !payload.contains("reroutes") || !payload["reroutes"].is_array()) {
            throw Error(ErrorCode::SchemaViolation, "expected an object with a `reroutes` list");
        }
    };
    const nlohmann::json payload = gateway.run_agent(task, handle);

    std::vector<RejectedSuggestion> rejected;
    auto suggestions = parse_suggestions(payload, rejected);
    Regularized rerouted = apply_reroutes(base.graph, suggestions, std::move(rejected));
    Regularized pruned = prune_violations(rerouted.graph);
    base.report.rehomed.insert(base.report.rehomed.end(), pruned.report.rehomed.begin(), pruned.report.rehomed.end());
    pruned.report.rehomed = std::move(base.report.rehomed);
    pruned.report.reroute_suggestions = std::move(rerouted.report.reroute_suggestions);
    pruned.report.rejected_suggestions = std::move(rerouted.report.rejected_suggestions);
    return pruned;
}

}  // namespace sysarch
