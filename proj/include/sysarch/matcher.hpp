#pragma once

// Two-round node matching between a generated and a reference flat graph.
//
// Each candidate pair gets a composite score
//     w_t * text + w_d * degree + w_a * ancestor + w_n * neighbor
// Round 1 leans on text to fix confident anchors; round 2 re-weights toward
// structure so the anchors can pull in nodes with paraphrased labels.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sysarch/graph.hpp"
#include "sysarch/similarity.hpp"

namespace sysarch {

struct SimWeights {
    double text = 0.0;
    double degree = 0.0;
    double ancestor = 0.0;
    double neighbor = 0.0;
    double threshold = 0.0;

    /// Scales the four weights to sum to 1. Throws InvalidConfig if any is
    /// negative or all are zero.
    [[nodiscard]] SimWeights normalized() const;
};

struct MatchConfig {
    SimWeights round1{0.7, 0.1, 0.2, 0.0, 0.75};
    SimWeights round2{0.3, 0.1, 0.3, 0.3, 0.5};
    double ancestor_decay = 0.5;
    bool parallel = true;
};

struct MatchPair {
    std::string gen_id;
    std::string gt_id;
    double score = 0.0;
    int round = 1;
    double text = 0.0;  // text similarity of the pair, reused by node consistency
};

struct MatchResult {
    std::vector<MatchPair> pairs;
    std::vector<std::string> unmatched_gen;
    std::vector<std::string> unmatched_gt;
    std::string provider_id;
    bool provider_degraded = false;

    [[nodiscard]] std::map<std::string, std::string> gen_to_gt() const;
    [[nodiscard]] std::map<std::string, std::string> gt_to_gen() const;
};

nlohmann::ordered_json to_json(const MatchResult& m);

struct SubScores {
    double text = 0.0;
    double degree = 0.0;
    double ancestor = 0.0;
    double neighbor = 0.0;
};

double text_similarity(std::string_view a, std::string_view b, const SimilarityProvider& provider);

/// exp(-(|out_a - out_b| + |in_a - in_b|))
double degree_similarity(const NodeStats& a, const NodeStats& b);

/// Decayed, normalized sum of aligned ancestor similarities (parent first):
/// sum_k decay^k sim(a_k, b_k) / sum_k decay^k over the shorter chain.
/// Both empty -> 1; exactly one empty -> 0.
double ancestor_similarity(std::span<const std::string> a_chain, std::span<const std::string> b_chain,
                           const SimilarityProvider& provider, double decay = 0.5);

/// Share of the generated node's neighbors whose current match is a neighbor
/// of the reference node.
double neighbor_similarity(const std::string& gen_id, const std::string& gt_id, const MatchResult& current,
                           const FlatGraph& f_gen, const FlatGraph& f_gt);

double composite_score(const SubScores& s, const SimWeights& w);

MatchResult match_two_rounds(const FlatGraph& f_gen, const FlatGraph& f_gt, const MatchConfig& cfg,
                             const SimilarityProvider& provider);

// ---------------------------------------------------------------------------
// Score-matrix kernels. The serial versions are the reference the OpenMP
// versions are tested against; both must produce bit-identical matrices.

/// Pairwise data shared by both rounds. Row = generated node, column = reference node.
struct MatchContext {
    std::vector<std::string> gen_ids;
    std::vector<std::string> gt_ids;
    std::vector<std::string> gen_text;
    std::vector<std::string> gt_text;
    std::vector<NodeStats> gen_stats;
    std::vector<NodeStats> gt_stats;
    std::vector<std::vector<std::size_t>> gen_neighbors;  // indices into gen_ids
    std::vector<std::vector<std::size_t>> gt_neighbors;   // indices into gt_ids
    std::vector<std::vector<std::size_t>> gen_ancestors;  // parent first
    std::vector<std::vector<std::size_t>> gt_ancestors;
    std::vector<double> text;      // rows * cols
    std::vector<double> degree;    // rows * cols
    std::vector<double> ancestor;  // rows * cols
    double decay = 0.5;

    [[nodiscard]] std::size_t rows() const noexcept { return gen_ids.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return gt_ids.size(); }
};

/// Builds the context; text/degree/ancestor matrices via the chosen kernel.
MatchContext build_context(const FlatGraph& f_gen, const FlatGraph& f_gt, const SimilarityProvider& provider,
                           double decay, bool parallel);

/// `gen_match[i]` is the column matched to row i, or -1.
std::vector<double> score_matrix_serial(const MatchContext& ctx, const SimWeights& w, std::span<const int> gen_match);
std::vector<double> score_matrix_parallel(const MatchContext& ctx, const SimWeights& w, std::span<const int> gen_match);

std::vector<double> text_matrix_serial(const MatchContext& ctx, const SimilarityProvider& provider);
std::vector<double> text_matrix_parallel(const MatchContext& ctx, const SimilarityProvider& provider);

/// Greedy acceptance over a score matrix: descending score, ties by
/// (gt id, gen id); pairs below `threshold` or touching a taken row/column
/// are skipped. Updates `gen_match`/`gt_match` and returns accepted (row, col).
std::vector<std::pair<std::size_t, std::size_t>> greedy_accept(const MatchContext& ctx, std::span<const double> scores,
                                                               double threshold, std::vector<int>& gen_match,
                                                               std::vector<int>& gt_match);

}  // namespace sysarch
