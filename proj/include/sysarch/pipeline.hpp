#pragma once

// Generation Steps 1-5: paper summary, top-level topology, parallel module
// drafts, sequential refinement, and regularization.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysarch/agent.hpp"
#include "sysarch/graph.hpp"
#include "sysarch/regularizer.hpp"

namespace sysarch {

struct PaperSummary {
    std::string system_name;
    std::string task_goal;
    std::string modules_and_responsibilities;
    std::string data_flow;
    std::string core_algorithms;
    std::string constraints;

    bool operator==(const PaperSummary&) const = default;
};

nlohmann::ordered_json to_json(const PaperSummary& s);
/// Throws SchemaViolation when a field is missing or not a string.
PaperSummary parse_summary(const nlohmann::json& payload);
/// Plain-text rendering handed to the Architect and Designer agents.
std::string summary_text(const PaperSummary& s);

struct PipelineConfig {
    std::size_t char_budget = 60000;
    std::size_t draft_concurrency = 4;
};

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Keeps the text unchanged when it fits. Otherwise keeps whole sections in
/// priority order (abstract, then method-like sections, then the rest, with
/// references/appendices last) up to `budget` characters, emitted in their
/// original order. The first section that does not fit is cut at a line
/// break and every lower-priority section is dropped.
Truncation truncate_paper(const std::string& text, std::size_t budget);

PaperSummary extract_summary(const std::string& paper_text, AgentGateway& gateway, const AgentHandle& handle,
                             const PipelineConfig& cfg = {});

/// Root module with module-only children. Warnings receive DEGENERATE_TOPOLOGY
/// when the root has no modules.
HierGraph design_top(const PaperSummary& summary, AgentGateway& gateway, const AgentHandle& handle,
                     std::vector<std::string>* warnings = nullptr);

struct DraftOutcome {
    std::map<std::string, HierNode> fragments;  // module id -> populated module
    std::map<std::string, std::string> failures;
};

DraftOutcome draft_modules(const HierGraph& top, const PaperSummary& summary, AgentGateway& gateway,
                           const AgentHandle& handle, std::size_t concurrency = 4);

/// Replaces each L1 module of `top` by its fragment (modules without one stay empty).
HierGraph merge_drafts(const HierGraph& top, const std::map<std::string, HierNode>& fragments);

struct IdRename {
    std::string from;
    std::string to;
    bool edge = false;
};

struct DedupResult {
    HierGraph graph;
    std::vector<IdRename> renamed;
};

/// Suffixes repeated ids with `_2`, `_3`, ... The root and the L1 modules keep
/// their ids; every other node is renamed in document (pre-order) order. Edge
/// endpoints are rewritten preferring the occurrence that is a direct child of
/// the declaring node, then one inside its subtree, then the first. Repeated
/// edge ids are suffixed the same way. Idempotent.
DedupResult deduplicate_ids(const HierGraph& g);

struct RefineOutcome {
    HierGraph graph;
    std::map<std::string, std::string> failures;
    std::vector<IdRename> renamed;
};

/// Revisits modules one at a time in ascending id order, each call seeing the
/// current graph; a failing module keeps its draft. Ends with deduplicate_ids.
RefineOutcome refine_sequential(const HierGraph& merged, const PaperSummary& summary, AgentGateway& gateway,
                                const AgentHandle& handle, const PipelineConfig& cfg = {});

struct PipelineArtifacts {
    bool input_truncated = false;
    std::optional<PaperSummary> summary;
    std::optional<HierGraph> top_graph;
    std::map<std::string, HierNode> drafts;
    std::optional<HierGraph> refined;
    std::optional<HierGraph> regularized;
    RegularizationReport regularization;
    std::vector<std::string> warnings;
    std::map<std::string, std::string> draft_failures;
    std::map<std::string, std::string> refine_failures;
    std::vector<IdRename> renamed;
    std::vector<Violation> final_violations;
    std::string aborted;  // error text when a step could not complete

    [[nodiscard]] bool degraded() const noexcept
    {
        return !draft_failures.empty() || !refine_failures.empty() || regularization.semantic_pass_skipped;
    }
};

nlohmann::ordered_json report_json(const PipelineArtifacts& a);

/// Writes every artifact that exists (01_summary.json ... report.json).
void write_artifacts(const PipelineArtifacts& a, const std::filesystem::path& dir);

/// Runs Steps 1-5. Throws on an unrecoverable step; when `out_dir` is given the
/// artifacts produced so far are written before the error propagates.
PipelineArtifacts generate(const std::string& paper_text, AgentGateway& gateway, const PipelineConfig& cfg = {},
                           const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace sysarch
