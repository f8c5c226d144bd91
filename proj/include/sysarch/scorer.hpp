#pragma once

// Three-tier scoring: semantic (node / edge / hierarchy consistency), layout
// (defect penalty) and visual (icon relevance, understanding, legibility),
// combined into one overall number.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysarch/graph.hpp"
#include "sysarch/matcher.hpp"
#include "sysarch/similarity.hpp"

namespace sysarch {

struct DefectCounts {
    int crossings = 0;
    int overlaps = 0;
    int overflows = 0;

    [[nodiscard]] int total() const noexcept { return crossings + overlaps + overflows; }
    bool operator==(const DefectCounts&) const = default;
};

struct LegibilityCounts {
    int blurry = 0;
    int incomplete = 0;
    int ambiguous = 0;

    [[nodiscard]] int total() const noexcept { return blurry + incomplete + ambiguous; }
    bool operator==(const LegibilityCounts&) const = default;
};

struct TierWeights {
    double semantic = 0.3;
    double layout = 0.3;
    double visual = 0.4;
};

/// Sum of matched-pair text scores divided by the reference node count.
/// `pair_text_scores[k]` belongs to `m.pairs[k]`. Throws EmptyReference.
double node_consistency(const MatchResult& m, const FlatGraph& f_gt, const std::vector<double>& pair_text_scores);
/// Same, reading the text scores stored on the pairs.
double node_consistency(const MatchResult& m, const FlatGraph& f_gt);

/// F1 of directed edges preserved under the matching. Both edgeless -> 1.
double edge_consistency(const MatchResult& m, const FlatGraph& f_gen, const FlatGraph& f_gt);

/// F1 of direct parent-child pairs preserved under the matching. Both flat -> 1.
double hierarchy_consistency(const MatchResult& m, const FlatGraph& f_gen, const FlatGraph& f_gt);

struct SemanticWeights {
    double node = 1.0;
    double edge = 1.0;
    double hierarchy = 1.0;
};

double semantic_combined(double node, double edge, double hierarchy, const SemanticWeights& w = {});

/// max(0, 1 - delta * (crossings + overlaps + overflows))
double layout_score(const DefectCounts& c, double delta = 0.1);

/// Mean similarity between each non-empty icon description and its module
/// text. No icons at all -> 0.5.
double icon_relevance(const std::map<std::string, std::string>& icon_descriptions,
                      const std::map<std::string, std::string>& module_texts, const SimilarityProvider& p);

double understanding_similarity(const std::string& summary_gen, const std::string& summary_gt,
                                const SimilarityProvider& p);

/// max(0, 1 - delta * (blurry + incomplete + ambiguous))
double text_legibility_score(const LegibilityCounts& c, double delta = 0.1);

/// Weighted sum; scale-agnostic (works on [0,1] or 0-100 inputs alike).
double overall(double semantic, double layout, double visual, const TierWeights& w = {});

struct ScoreReport {
    std::string sample_id;
    std::optional<double> node;
    std::optional<double> edge;
    std::optional<double> hierarchy;
    std::optional<double> semantic;
    std::optional<DefectCounts> counts;
    std::optional<double> layout;
    std::optional<double> icon;
    std::optional<double> understanding;
    std::optional<double> legibility;
    std::optional<double> visual;
    std::optional<double> overall;
    std::vector<std::string> undetermined;
    std::vector<std::string> notes;
    std::string provider_id;
    std::string config_hash;

    [[nodiscard]] bool partial() const noexcept { return !undetermined.empty(); }
};

/// Mean of the determined components (weights renormalized over them);
/// nullopt when none is determined.
std::optional<double> weighted_mean(const std::vector<std::optional<double>>& values,
                                    const std::vector<double>& weights);

/// Fills semantic/visual/overall from the sub-scores that are present.
void finalize_report(ScoreReport& r, const SemanticWeights& sw, const TierWeights& tw);

/// Report JSON with 0-100 values (one decimal) and a `raw` block in [0,1].
nlohmann::ordered_json to_json(const ScoreReport& r);

}  // namespace sysarch
