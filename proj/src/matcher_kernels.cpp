#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>

#include "sysarch/matcher.hpp"

namespace sysarch {

namespace {

double ancestor_cell(const MatchContext& ctx, std::size_t i, std::size_t j)
{
    const auto& a = ctx.gen_ancestors[i];
    const auto& b = ctx.gt_ancestors[j];
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    const std::size_t depth = std::min(a.size(), b.size());
    if (depth == 0) {
        return 0.0;
    }
    double num = 0.0;
    double den = 0.0;
    double w = 1.0;
    for (std::size_t k = 0; k < depth; ++k) {
        num += w * ctx.text[a[k] * ctx.cols() + b[k]];
        den += w;
        w *= ctx.decay;
    }
    return std::clamp(num / den, 0.0, 1.0);
}

double neighbor_cell(const MatchContext& ctx, std::size_t i, std::size_t j, std::span<const int> gen_match)
{
    const auto& mine = ctx.gen_neighbors[i];
    if (mine.empty()) {
        return 0.0;
    }
    const auto& theirs = ctx.gt_neighbors[j];
    std::size_t hits = 0;
    for (std::size_t x : mine) {
        const int m = gen_match[x];
        if (m >= 0 && std::binary_search(theirs.begin(), theirs.end(), static_cast<std::size_t>(m))) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(mine.size());
}

double score_cell(const MatchContext& ctx, const SimWeights& w, std::size_t i, std::size_t j,
                  std::span<const int> gen_match)
{
    const std::size_t k = i * ctx.cols() + j;
    SubScores s;
    s.text = ctx.text[k];
    s.degree = ctx.degree[k];
    s.ancestor = ctx.ancestor[k];
    s.neighbor = w.neighbor == 0.0 ? 0.0 : neighbor_cell(ctx, i, j, gen_match);
    return composite_score(s, w);
}

}  // namespace

std::vector<double> text_matrix_serial(const MatchContext& ctx, const SimilarityProvider& provider)
{
    std::vector<double> out(ctx.rows() * ctx.cols());
    for (std::size_t i = 0; i < ctx.rows(); ++i) {
        for (std::size_t j = 0; j < ctx.cols(); ++j) {
            out[i * ctx.cols() + j] = text_similarity(ctx.gen_text[i], ctx.gt_text[j], provider);
        }
    }
    return out;
}

std::vector<double> text_matrix_parallel(const MatchContext& ctx, const SimilarityProvider& provider)
{
    std::vector<double> out(ctx.rows() * ctx.cols());
    const auto rows = static_cast<long>(ctx.rows());
    const std::size_t cols = ctx.cols();
    std::exception_ptr error;
    std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < rows; ++i) {
        try {
            for (std::size_t j = 0; j < cols; ++j) {
                out[static_cast<std::size_t>(i) * cols + j] =
                    text_similarity(ctx.gen_text[static_cast<std::size_t>(i)], ctx.gt_text[j], provider);
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) {
                error = std::current_exception();
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    return out;
}

std::vector<double> score_matrix_serial(const MatchContext& ctx, const SimWeights& w, std::span<const int> gen_match)
{
    std::vector<double> out(ctx.rows() * ctx.cols());
    for (std::size_t i = 0; i < ctx.rows(); ++i) {
        for (std::size_t j = 0; j < ctx.cols(); ++j) {
            out[i * ctx.cols() + j] = score_cell(ctx, w, i, j, gen_match);
        }
    }
    return out;
}

std::vector<double> score_matrix_parallel(const MatchContext& ctx, const SimWeights& w, std::span<const int> gen_match)
{
    std::vector<double> out(ctx.rows() * ctx.cols());
    const auto rows = static_cast<long>(ctx.rows());
    const std::size_t cols = ctx.cols();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[static_cast<std::size_t>(i) * cols + j] = score_cell(ctx, w, static_cast<std::size_t>(i), j, gen_match);
        }
    }
    return out;
}

MatchContext build_context(const FlatGraph& f_gen, const FlatGraph& f_gt, const SimilarityProvider& provider,
                           double decay, bool parallel)
{
    MatchContext ctx;
    ctx.decay = decay;
    const auto gen_stats = node_stats(f_gen);
    const auto gt_stats = node_stats(f_gt);

    auto fill = [](const FlatGraph& f, const std::map<std::string, NodeStats>& stats, std::vector<std::string>& ids,
                   std::vector<std::string>& text, std::vector<NodeStats>& st,
                   std::vector<std::vector<std::size_t>>& neighbors, std::vector<std::vector<std::size_t>>& ancestors) {
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < f.nodes.size(); ++i) {
            ids.push_back(f.nodes[i].id);
            text.push_back(f.nodes[i].name);
            st.push_back(stats.at(f.nodes[i].id));
            index[f.nodes[i].id] = i;
        }
        for (const auto& s : st) {
            std::vector<std::size_t> nb;
            for (const auto& id : s.neighbors) {
                nb.push_back(index.at(id));
            }
            std::sort(nb.begin(), nb.end());
            neighbors.push_back(std::move(nb));
            std::vector<std::size_t> anc;
            for (const auto& id : s.ancestor_chain) {
                anc.push_back(index.at(id));
            }
            ancestors.push_back(std::move(anc));
        }
    };
    fill(f_gen, gen_stats, ctx.gen_ids, ctx.gen_text, ctx.gen_stats, ctx.gen_neighbors, ctx.gen_ancestors);
    fill(f_gt, gt_stats, ctx.gt_ids, ctx.gt_text, ctx.gt_stats, ctx.gt_neighbors, ctx.gt_ancestors);

    ctx.text = parallel ? text_matrix_parallel(ctx, provider) : text_matrix_serial(ctx, provider);
    ctx.degree.resize(ctx.rows() * ctx.cols());
    ctx.ancestor.resize(ctx.rows() * ctx.cols());
    for (std::size_t i = 0; i < ctx.rows(); ++i) {
        for (std::size_t j = 0; j < ctx.cols(); ++j) {
            ctx.degree[i * ctx.cols() + j] = degree_similarity(ctx.gen_stats[i], ctx.gt_stats[j]);
            ctx.ancestor[i * ctx.cols() + j] = ancestor_cell(ctx, i, j);
        }
    }
    return ctx;
}

std::vector<std::pair<std::size_t, std::size_t>> greedy_accept(const MatchContext& ctx, std::span<const double> scores,
                                                               double threshold, std::vector<int>& gen_match,
                                                               std::vector<int>& gt_match)
{
    struct Candidate {
        double score;
        std::size_t row;
        std::size_t col;
    };
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < ctx.rows(); ++i) {
        if (gen_match[i] >= 0) {
            continue;
        }
        for (std::size_t j = 0; j < ctx.cols(); ++j) {
            const double s = scores[i * ctx.cols() + j];
            if (gt_match[j] < 0 && s >= threshold) {
                candidates.push_back({s, i, j});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        if (ctx.gt_ids[a.col] != ctx.gt_ids[b.col]) {
            return ctx.gt_ids[a.col] < ctx.gt_ids[b.col];
        }
        return ctx.gen_ids[a.row] < ctx.gen_ids[b.row];
    });
    std::vector<std::pair<std::size_t, std::size_t>> accepted;
    for (const auto& c : candidates) {
        if (gen_match[c.row] >= 0 || gt_match[c.col] >= 0) {
            continue;
        }
        gen_match[c.row] = static_cast<int>(c.col);
        gt_match[c.col] = static_cast<int>(c.row);
        accepted.emplace_back(c.row, c.col);
    }
    return accepted;
}

}  // namespace sysarch
