#include <cmath>

#include "sysarch/evaluation.hpp"

namespace sysarch {

namespace {

[[noreturn]] void violation(const std::string& message)
{
    throw Error(ErrorCode::SchemaViolation, message);
}

// Sums `count` per issue type; a missing count falls back to the number of details.
std::map<std::string, int> issue_counts(const nlohmann::json& payload, const std::string& field,
                                        const std::vector<std::string>& allowed)
{
    if (!payload.is_object() || !payload.contains(field) || !payload[field].is_array()) {
        violation("expected an object with a `" + field + "` list");
    }
    std::map<std::string, int> counts;
    for (const auto& t : allowed) {
        counts[t] = 0;
    }
    for (std::size_t i = 0; i < payload[field].size(); ++i) {
        const auto& item = payload[field][i];
        const std::string where = field + "[" + std::to_string(i) + "]";
        if (!item.is_object() || !item.contains("type") || !item["type"].is_string()) {
            violation(where + " needs a string `type`");
        }
        const std::string type = item["type"].get<std::string>();
        if (!counts.contains(type)) {
            violation(where + ".type `" + type + "` is not one of the allowed issue types");
        }
        int n = 0;
        if (item.contains("count")) {
            if (!item["count"].is_number_integer() || item["count"].get<long>() < 0) {
                violation(where + ".count must be a non-negative integer");
            }
            n = item["count"].get<int>();
        } else if (item.contains("details") && item["details"].is_array()) {
            n = static_cast<int>(item["details"].size());
        } else {
            violation(where + " needs a `count`");
        }
        counts[type] += n;
    }
    return counts;
}

std::string graph_slot(const FlatGraph& graph)
{
    nlohmann::ordered_json g = to_json(graph);
    if (g.contains("explain")) {
        g.erase("explain");
    }
    return g.dump(2);
}

}  // namespace

FlatGraph parse_extracted_graph(const nlohmann::json& payload)
{
    if (!payload.is_object() || !payload.contains("graph")) {
        violation("expected top-level fields `graph` and `explain`");
    }
    try {
        return parse_flat(payload);
    } catch (const Error& e) {
        violation(std::string("extracted graph is invalid: ") + e.what());
    }
}

DefectCounts parse_layout_issues(const nlohmann::json& payload)
{
    auto c = issue_counts(payload, "layout_issues", {"line_crossing", "image_overlap", "text_overflow"});
    return {c["line_crossing"], c["image_overlap"], c["text_overflow"]};
}

LegibilityCounts parse_legibility_issues(const nlohmann::json& payload)
{
    auto c = issue_counts(payload, "text_legibility_issues", {"Blurry", "Incomplete", "Ambiguous"});
    return {c["Blurry"], c["Incomplete"], c["Ambiguous"]};
}

std::map<std::string, std::string> parse_icon_descriptions(const nlohmann::json& payload, const FlatGraph& graph)
{
    if (!payload.is_object()) {
        violation("expected an object mapping node ids to icon descriptions");
    }
    std::map<std::string, std::string> out;
    for (const auto& [key, value] : payload.items()) {
        if (graph.index_of(key) < 0) {
            violation("key `" + key + "` is not a node id of the provided graph");
        }
        if (!value.is_string()) {
            violation("icon description for `" + key + "` must be a string");
        }
        out[key] = value.get<std::string>();
    }
    return out;
}

std::string parse_system_understanding(const nlohmann::json& payload)
{
    if (!payload.is_object() || !payload.contains("system_understanding") ||
        !payload["system_understanding"].is_string()) {
        violation("expected a string field `system_understanding`");
    }
    return payload["system_understanding"].get<std::string>();
}

double parse_filter_confidence(const nlohmann::json& payload)
{
    if (!payload.is_object() || !payload.contains("confidence") || !payload["confidence"].is_number()) {
        violation("expected a numeric field `confidence`");
    }
    const double c = payload["confidence"].get<double>();
    if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
        violation("confidence must lie in [0,1]");
    }
    return c;
}

FlatGraph extract_graph(AgentGateway& gateway, const ImagePart& image, const std::string& paper_text)
{
    AgentTask task{"graph_extract", {{"paper_text", paper_text}}, {image},
                   [](const nlohmann::json& p) { (void)parse_extracted_graph(p); }};
    return parse_extracted_graph(gateway.run_agent(task, gateway.handle(AgentRole::GraphExtract)));
}

DefectCounts examine_layout(AgentGateway& gateway, const ImagePart& image)
{
    AgentTask task{"layout_examine", {}, {image}, [](const nlohmann::json& p) { (void)parse_layout_issues(p); }};
    return parse_layout_issues(gateway.run_agent(task, gateway.handle(AgentRole::LayoutExamine)));
}

LegibilityCounts examine_legibility(AgentGateway& gateway, const ImagePart& image)
{
    AgentTask task{"text_legibility", {}, {image}, [](const nlohmann::json& p) { (void)parse_legibility_issues(p); }};
    return parse_legibility_issues(gateway.run_agent(task, gateway.handle(AgentRole::TextLegibility)));
}

std::map<std::string, std::string> examine_icons(AgentGateway& gateway, const ImagePart& image, const std::string& desc,
                                                 const FlatGraph& graph)
{
    AgentTask task{"icon_examine", {{"desc", desc}, {"graph", graph_slot(graph)}}, {image},
                   [&graph](const nlohmann::json& p) { (void)parse_icon_descriptions(p, graph); }};
    return parse_icon_descriptions(gateway.run_agent(task, gateway.handle(AgentRole::IconExamine)), graph);
}

std::string understand_system(AgentGateway& gateway, const ImagePart& image, const std::string& desc,
                              const FlatGraph& graph)
{
    AgentTask task{"system_understand", {{"desc", desc}, {"graph", graph_slot(graph)}}, {image},
                   [](const nlohmann::json& p) { (void)parse_system_understanding(p); }};
    return parse_system_understanding(gateway.run_agent(task, gateway.handle(AgentRole::SystemUnderstand)));
}

}  // namespace sysarch
