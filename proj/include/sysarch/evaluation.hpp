#pragma once

// Evaluation-side agents (graph extraction, icon / layout / legibility
// inspection, system understanding) and the dataset-filter discriminator.
// Each `parse_*` function doubles as the role's schema validator: it throws
// Error(SchemaViolation) when the payload does not fit.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysarch/agent.hpp"
#include "sysarch/graph.hpp"
#include "sysarch/scorer.hpp"

namespace sysarch {

FlatGraph parse_extracted_graph(const nlohmann::json& payload);
DefectCounts parse_layout_issues(const nlohmann::json& payload);
LegibilityCounts parse_legibility_issues(const nlohmann::json& payload);
/// Keys must be node ids of `graph`; values are descriptions ("" = no icon).
std::map<std::string, std::string> parse_icon_descriptions(const nlohmann::json& payload, const FlatGraph& graph);
std::string parse_system_understanding(const nlohmann::json& payload);
/// `{"confidence": x}` with x in [0,1].
double parse_filter_confidence(const nlohmann::json& payload);

FlatGraph extract_graph(AgentGateway& gateway, const ImagePart& image, const std::string& paper_text);
DefectCounts examine_layout(AgentGateway& gateway, const ImagePart& image);
LegibilityCounts examine_legibility(AgentGateway& gateway, const ImagePart& image);
std::map<std::string, std::string> examine_icons(AgentGateway& gateway, const ImagePart& image, const std::string& desc,
                                                 const FlatGraph& graph);
std::string understand_system(AgentGateway& gateway, const ImagePart& image, const std::string& desc,
                              const FlatGraph& graph);

struct CandidateImage {
    std::string id;
    std::string path;
    std::string caption;
};

struct FilterDecision {
    std::string image_id;
    std::optional<double> confidence;
    bool kept = false;
    bool selected = false;
    bool undetermined = false;
    std::string error;
};

/// Orders ids so that embedded numbers compare numerically ("img2" < "img10").
bool natural_less(const std::string& a, const std::string& b);

/// Applies the keep/select rule to decisions whose confidences are already
/// known: kept = confidence > threshold; the highest-confidence kept image is
/// selected (ties -> smallest id). Returns decisions ranked by confidence
/// (descending, ties by id), undetermined ones last.
std::vector<FilterDecision> decide_filter(std::vector<FilterDecision> decisions, double threshold = 0.75);

/// Asks the discriminator for a confidence per image, then applies decide_filter.
/// A failing image is marked undetermined; the others are still decided.
std::vector<FilterDecision> filter_candidate_images(const std::string& abstract,
                                                   const std::vector<CandidateImage>& images, AgentGateway& gateway,
                                                   const AgentHandle& handle, double threshold = 0.75);

nlohmann::ordered_json to_json(const FilterDecision& d);

}  // namespace sysarch
