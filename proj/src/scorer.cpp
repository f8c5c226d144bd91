#include "sysarch/scorer.hpp"

#include <algorithm>
#include <set>

#include "sysarch/error.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

namespace {

using Arc = std::pair<std::string, std::string>;

double f1(std::size_t preserved_gen, std::size_t gen_total, std::size_t preserved_gt, std::size_t gt_total)
{
    if (gen_total == 0 && gt_total == 0) {
        return 1.0;
    }
    if (gen_total == 0 || gt_total == 0) {
        return 0.0;
    }
    const double precision = static_cast<double>(preserved_gen) / static_cast<double>(gen_total);
    const double recall = static_cast<double>(preserved_gt) / static_cast<double>(gt_total);
    if (precision + recall == 0.0) {
        return 0.0;
    }
    return 2.0 * precision * recall / (precision + recall);
}

// Arcs of `from` mapped through `mapping` that land on an arc of `to`.
std::size_t preserved(const std::set<Arc>& from, const std::set<Arc>& to, const std::map<std::string, std::string>& mapping)
{
    std::size_t n = 0;
    for (const auto& [u, v] : from) {
        auto mu = mapping.find(u);
        auto mv = mapping.find(v);
        if (mu != mapping.end() && mv != mapping.end() && to.contains({mu->second, mv->second})) {
            ++n;
        }
    }
    return n;
}

std::set<Arc> edge_arcs(const FlatGraph& f)
{
    std::set<Arc> arcs;
    for (const auto& e : f.edges) {
        arcs.insert({e.source, e.target});
    }
    return arcs;
}

std::set<Arc> containment_arcs(const FlatGraph& f)
{
    std::set<Arc> arcs;
    for (const auto& n : f.nodes) {
        for (const auto& c : n.children) {
            arcs.insert({n.id, c});
        }
    }
    return arcs;
}

double arc_f1(const std::set<Arc>& gen, const std::set<Arc>& gt, const MatchResult& m)
{
    const auto g2t = m.gen_to_gt();
    const auto t2g = m.gt_to_gen();
    return f1(preserved(gen, gt, g2t), gen.size(), preserved(gt, gen, t2g), gt.size());
}

}  // namespace

double node_consistency(const MatchResult& m, const FlatGraph& f_gt, const std::vector<double>& pair_text_scores)
{
    if (f_gt.nodes.empty()) {
        throw Error(ErrorCode::EmptyReference, "reference graph has no nodes");
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < m.pairs.size() && k < pair_text_scores.size(); ++k) {
        sum += std::clamp(pair_text_scores[k], 0.0, 1.0);
    }
    return std::clamp(sum / static_cast<double>(f_gt.nodes.size()), 0.0, 1.0);
}

double node_consistency(const MatchResult& m, const FlatGraph& f_gt)
{
    std::vector<double> scores;
    for (const auto& p : m.pairs) {
        scores.push_back(p.text);
    }
    return node_consistency(m, f_gt, scores);
}

double edge_consistency(const MatchResult& m, const FlatGraph& f_gen, const FlatGraph& f_gt)
{
    return arc_f1(edge_arcs(f_gen), edge_arcs(f_gt), m);
}

double hierarchy_consistency(const MatchResult& m, const FlatGraph& f_gen, const FlatGraph& f_gt)
{
    return arc_f1(containment_arcs(f_gen), containment_arcs(f_gt), m);
}

double semantic_combined(double node, double edge, double hierarchy, const SemanticWeights& w)
{
    const double den = w.node + w.edge + w.hierarchy;
    if (den <= 0) {
        throw Error(ErrorCode::InvalidConfig, "semantic weights must not all be zero");
    }
    return (w.node * node + w.edge * edge + w.hierarchy * hierarchy) / den;
}

double layout_score(const DefectCounts& c, double delta)
{
    return std::max(0.0, 1.0 - delta * static_cast<double>(c.total()));
}

double icon_relevance(const std::map<std::string, std::string>& icon_descriptions,
                      const std::map<std::string, std::string>& module_texts, const SimilarityProvider& p)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& [id, description] : icon_descriptions) {
        if (description.empty()) {
            continue;
        }
        auto it = module_texts.find(id);
        const std::string target = it == module_texts.end() ? std::string{} : it->second;
        sum += text_similarity(description, target, p);
        ++n;
    }
    if (n == 0) {
        return 0.5;
    }
    return sum / static_cast<double>(n);
}

double understanding_similarity(const std::string& summary_gen, const std::string& summary_gt,
                                const SimilarityProvider& p)
{
    return text_similarity(summary_gen, summary_gt, p);
}

double text_legibility_score(const LegibilityCounts& c, double delta)
{
    return std::max(0.0, 1.0 - delta * static_cast<double>(c.total()));
}

double overall(double semantic, double layout, double visual, const TierWeights& w)
{
    return w.semantic * semantic + w.layout * layout + w.visual * visual;
}

std::optional<double> weighted_mean(const std::vector<std::optional<double>>& values, const std::vector<double>& weights)
{
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i]) {
            num += weights[i] * *values[i];
            den += weights[i];
        }
    }
    if (den <= 0) {
        return std::nullopt;
    }
    return num / den;
}

void finalize_report(ScoreReport& r, const SemanticWeights& sw, const TierWeights& tw)
{
    if (r.node && r.edge && r.hierarchy) {
        r.semantic = semantic_combined(*r.node, *r.edge, *r.hierarchy, sw);
    }
    r.visual = weighted_mean({r.icon, r.understanding, r.legibility}, {1.0, 1.0, 1.0});
    if (r.semantic && r.layout && r.visual) {
        r.overall = overall(*r.semantic, *r.layout, *r.visual, tw);
    } else {
        r.overall.reset();
    }
}

namespace {

nlohmann::ordered_json pct(const std::optional<double>& v)
{
    if (!v) {
        return nullptr;
    }
    return round_to(*v * 100.0, 1);
}

nlohmann::ordered_json raw(const std::optional<double>& v)
{
    if (!v) {
        return nullptr;
    }
    return round_to(*v, 9);
}

nlohmann::ordered_json tiers(const ScoreReport& r, nlohmann::ordered_json (*conv)(const std::optional<double>&))
{
    nlohmann::ordered_json out;
    out["semantic"] = {{"node", conv(r.node)},
                       {"edge", conv(r.edge)},
                       {"hierarchy", conv(r.hierarchy)},
                       {"combined", conv(r.semantic)}};
    nlohmann::ordered_json layout;
    if (r.counts) {
        layout["crossings"] = r.counts->crossings;
        layout["overlaps"] = r.counts->overlaps;
        layout["overflows"] = r.counts->overflows;
    } else {
        layout["crossings"] = nullptr;
        layout["overlaps"] = nullptr;
        layout["overflows"] = nullptr;
    }
    layout["score"] = conv(r.layout);
    out["layout"] = std::move(layout);
    out["visual"] = {{"icon", conv(r.icon)},
                     {"understanding", conv(r.understanding)},
                     {"legibility", conv(r.legibility)},
                     {"combined", conv(r.visual)}};
    out["overall"] = conv(r.overall);
    return out;
}

}  // namespace

nlohmann::ordered_json to_json(const ScoreReport& r)
{
    nlohmann::ordered_json out;
    out["sample_id"] = r.sample_id;
    const nlohmann::ordered_json scaled = tiers(r, pct);
    for (const auto& [k, v] : scaled.items()) {
        out[k] = v;
    }
    out["partial"] = r.partial();
    out["undetermined"] = r.undetermined;
    out["provider_id"] = r.provider_id;
    out["config_hash"] = r.config_hash;
    out["tool_version"] = SYSARCH_VERSION;
    out["raw"] = tiers(r, raw);
    if (!r.notes.empty()) {
        out["notes"] = r.notes;
    }
    return out;
}

}  // namespace sysarch
