#include "sysarch/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "sysarch/error.hpp"

namespace sysarch {

SimWeights SimWeights::normalized() const
{
    if (text < 0 || degree < 0 || ancestor < 0 || neighbor < 0) {
        throw Error(ErrorCode::InvalidConfig, "similarity weights must be non-negative");
    }
    if (threshold < 0 || threshold > 1) {
        throw Error(ErrorCode::InvalidConfig, "match threshold must lie in [0,1]");
    }
    const double sum = text + degree + ancestor + neighbor;
    if (sum <= 0) {
        throw Error(ErrorCode::InvalidConfig, "similarity weights must not all be zero");
    }
    return {text / sum, degree / sum, ancestor / sum, neighbor / sum, threshold};
}

std::map<std::string, std::string> MatchResult::gen_to_gt() const
{
    std::map<std::string, std::string> out;
    for (const auto& p : pairs) {
        out[p.gen_id] = p.gt_id;
    }
    return out;
}

std::map<std::string, std::string> MatchResult::gt_to_gen() const
{
    std::map<std::string, std::string> out;
    for (const auto& p : pairs) {
        out[p.gt_id] = p.gen_id;
    }
    return out;
}

nlohmann::ordered_json to_json(const MatchResult& m)
{
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : m.pairs) {
        nlohmann::ordered_json jp;
        jp["gen_id"] = p.gen_id;
        jp["gt_id"] = p.gt_id;
        jp["score"] = p.score;
        jp["round"] = p.round;
        pairs.push_back(std::move(jp));
    }
    nlohmann::ordered_json out;
    out["pairs"] = std::move(pairs);
    out["unmatched_gen"] = m.unmatched_gen;
    out["unmatched_gt"] = m.unmatched_gt;
    out["provider_id"] = m.provider_id;
    out["provider_degraded"] = m.provider_degraded;
    return out;
}

double text_similarity(std::string_view a, std::string_view b, const SimilarityProvider& provider)
{
    return std::clamp(provider.similarity(a, b), 0.0, 1.0);
}

double degree_similarity(const NodeStats& a, const NodeStats& b)
{
    const int d = std::abs(a.out_degree - b.out_degree) + std::abs(a.in_degree - b.in_degree);
    return std::exp(-static_cast<double>(d));
}

double ancestor_similarity(std::span<const std::string> a_chain, std::span<const std::string> b_chain,
                           const SimilarityProvider& provider, double decay)
{
    if (a_chain.empty() && b_chain.empty()) {
        return 1.0;
    }
    const std::size_t depth = std::min(a_chain.size(), b_chain.size());
    if (depth == 0) {
        return 0.0;
    }
    double num = 0.0;
    double den = 0.0;
    double w = 1.0;
    for (std::size_t k = 0; k < depth; ++k) {
        num += w * text_similarity(a_chain[k], b_chain[k], provider);
        den += w;
        w *= decay;
    }
    return std::clamp(num / den, 0.0, 1.0);
}

double neighbor_similarity(const std::string& gen_id, const std::string& gt_id, const MatchResult& current,
                           const FlatGraph& f_gen, const FlatGraph& f_gt)
{
    const auto gen_stats = node_stats(f_gen);
    const auto gt_stats = node_stats(f_gt);
    const auto& mine = gen_stats.at(gen_id).neighbors;
    const auto& theirs = gt_stats.at(gt_id).neighbors;
    const auto mapping = current.gen_to_gt();
    std::size_t hits = 0;
    for (const auto& x : mine) {
        auto it = mapping.find(x);
        if (it != mapping.end() && theirs.contains(it->second)) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(std::max<std::size_t>(1, mine.size()));
}

double composite_score(const SubScores& s, const SimWeights& w)
{
    // Dividing by the weight sum keeps an all-ones row at exactly 1.0 even
    // when the normalized weights do not add up to 1 in floating point.
    const double num = w.text * s.text + w.degree * s.degree + w.ancestor * s.ancestor + w.neighbor * s.neighbor;
    const double den = w.text + w.degree + w.ancestor + w.neighbor;
    if (den <= 0) {
        return 0.0;
    }
    return std::clamp(num / den, 0.0, 1.0);
}

MatchResult match_two_rounds(const FlatGraph& f_gen, const FlatGraph& f_gt, const MatchConfig& cfg,
                             const SimilarityProvider& provider)
{
    const SimWeights w1 = cfg.round1.normalized();
    const SimWeights w2 = cfg.round2.normalized();

    std::vector<std::string> texts;
    for (const auto& n : f_gen.nodes) {
        texts.push_back(n.name);
    }
    for (const auto& n : f_gt.nodes) {
        texts.push_back(n.name);
    }
    provider.prepare(texts);

    const MatchContext ctx = build_context(f_gen, f_gt, provider, cfg.ancestor_decay, cfg.parallel);
    std::vector<int> gen_match(ctx.rows(), -1);
    std::vector<int> gt_match(ctx.cols(), -1);

    MatchResult result;
    auto record = [&](const std::vector<std::pair<std::size_t, std::size_t>>& accepted, std::span<const double> scores,
                      int round) {
        for (const auto& [i, j] : accepted) {
            result.pairs.push_back({ctx.gen_ids[i], ctx.gt_ids[j], scores[i * ctx.cols() + j], round,
                                    ctx.text[i * ctx.cols() + j]});
        }
    };

    const auto s1 = cfg.parallel ? score_matrix_parallel(ctx, w1, gen_match) : score_matrix_serial(ctx, w1, gen_match);
    record(greedy_accept(ctx, s1, w1.threshold, gen_match, gt_match), s1, 1);

    // Round-1 pairs are final; round 2 only fills the remaining rows/columns.
    const auto s2 = cfg.parallel ? score_matrix_parallel(ctx, w2, gen_match) : score_matrix_serial(ctx, w2, gen_match);
    record(greedy_accept(ctx, s2, w2.threshold, gen_match, gt_match), s2, 2);

    for (std::size_t i = 0; i < ctx.rows(); ++i) {
        if (gen_match[i] < 0) {
            result.unmatched_gen.push_back(ctx.gen_ids[i]);
        }
    }
    for (std::size_t j = 0; j < ctx.cols(); ++j) {
        if (gt_match[j] < 0) {
            result.unmatched_gt.push_back(ctx.gt_ids[j]);
        }
    }
    result.provider_id = provider.id();
    if (const auto* fb = dynamic_cast<const FallbackProvider*>(&provider)) {
        result.provider_degraded = fb->degraded();
    }
    return result;
}

}  // namespace sysarch
