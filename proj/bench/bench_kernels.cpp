// Serial reference vs OpenMP kernels: score-matrix construction for the
// matcher and geometry defect counting for the layout engine. Checks that
// both variants agree before reporting timings.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "sysarch/layout.hpp"
#include "sysarch/matcher.hpp"
#include "sysarch/util.hpp"

#if defined(SYSARCH_HAVE_OPENMP)
#include <omp.h>
#endif

using namespace sysarch;

namespace {

const char* const kWords[] = {"encoder", "decoder", "attention", "memory",  "retriever", "planner", "image",
                              "text",    "fusion",  "graph",     "layer",   "token",     "vision",  "policy",
                              "reward",  "critic",  "buffer",    "feature", "query",     "index"};

std::string random_label(std::mt19937& rng)
{
    std::uniform_int_distribution<int> word(0, 19);
    std::uniform_int_distribution<int> len(1, 4);
    std::string out;
    for (int i = len(rng); i > 0; --i) {
        out += (out.empty() ? "" : " ") + std::string(kWords[word(rng)]);
    }
    return out;
}

// Two-level flat graph: `modules` containers with leaves, random sibling edges.
FlatGraph random_flat(std::size_t nodes, std::mt19937& rng)
{
    FlatGraph f;
    f.nodes.push_back({"root", "system", {}});
    const std::size_t modules = std::max<std::size_t>(1, nodes / 8);
    for (std::size_t m = 0; m < modules; ++m) {
        const std::string id = "m" + std::to_string(m);
        f.nodes.push_back({id, random_label(rng), {}});
        f.nodes[0].children.push_back(id);
    }
    for (std::size_t i = modules + 1; i < nodes; ++i) {
        const std::size_t parent = 1 + (i % modules);
        const std::string id = "n" + std::to_string(i);
        f.nodes.push_back({id, random_label(rng), {}});
        f.nodes[parent].children.push_back(id);
    }
    for (std::size_t m = 1; m <= modules; ++m) {
        const auto& kids = f.nodes[m].children;
        for (std::size_t k = 0; k + 1 < kids.size(); ++k) {
            f.edges.push_back({"e" + std::to_string(f.edges.size()), kids[k], kids[k + 1], "flow"});
        }
    }
    return f;
}

// Nested graph with `modules` x `per` leaves and a chain of edges per module.
HierGraph random_hier(std::size_t modules, std::size_t per, std::mt19937& rng)
{
    HierGraph g;
    g.root.id = "root";
    g.root.name = "system";
    auto& top = g.root.child_nodes();
    for (std::size_t m = 0; m < modules; ++m) {
        HierNode mod;
        mod.id = "m" + std::to_string(m);
        mod.name = random_label(rng);
        auto& kids = mod.child_nodes();
        for (std::size_t k = 0; k < per; ++k) {
            HierNode leaf;
            leaf.kind = NodeKind::Tool;
            leaf.id = mod.id + "_t" + std::to_string(k);
            leaf.name = random_label(rng);
            kids.push_back(std::move(leaf));
        }
        for (std::size_t k = 0; k + 1 < per; ++k) {
            mod.edges.push_back({mod.id + "_e" + std::to_string(k), "", kids[k].id, kids[per - 1 - k].id});
        }
        top.push_back(std::move(mod));
    }
    for (std::size_t m = 0; m + 1 < modules; ++m) {
        g.root.edges.push_back({"top" + std::to_string(m), "", top[m].id, top[m + 1].id});
    }
    return g;
}

template <typename Fn>
double time_ms(int reps, Fn&& fn)
{
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) {
        fn();
    }
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void row(const std::string& kernel, std::size_t size, double serial, double parallel, bool agree)
{
    std::cout << kernel << "," << size << "," << format_fixed(serial, 3) << "," << format_fixed(parallel, 3) << ","
              << format_fixed(parallel > 0 ? serial / parallel : 0.0, 2) << "," << (agree ? "yes" : "NO") << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Serial vs OpenMP kernel benchmark", "sysarch_bench"};
    int reps = 5;
    unsigned seed = 7;
    bool quick = false;
    app.add_option("--reps", reps, "Repetitions per measurement")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Random seed");
    app.add_flag("--quick", quick, "Small sizes only (used as a smoke test)");
    CLI11_PARSE(app, argc, argv);

    int threads = 1;
#if defined(SYSARCH_HAVE_OPENMP)
    threads = omp_get_max_threads();
#endif
    std::cerr << "threads: " << threads << "\n";
    std::cout << "kernel,size,serial_ms,parallel_ms,speedup,agree\n";

    std::mt19937 rng(seed);
    TfCosineProvider provider;
    bool all_agree = true;

    const std::vector<std::size_t> match_sizes = quick ? std::vector<std::size_t>{24} : std::vector<std::size_t>{50, 150, 400};
    for (std::size_t n : match_sizes) {
        const FlatGraph a = random_flat(n, rng);
        const FlatGraph b = random_flat(n, rng);
        const MatchContext ctx = build_context(a, b, provider, 0.5, false);
        const std::vector<int> none(ctx.rows(), -1);
        const SimWeights w = MatchConfig{}.round2.normalized();

        const bool text_agree = text_matrix_serial(ctx, provider) == text_matrix_parallel(ctx, provider);
        const double t_serial = time_ms(reps, [&] { (void)text_matrix_serial(ctx, provider); });
        const double t_parallel = time_ms(reps, [&] { (void)text_matrix_parallel(ctx, provider); });
        row("text_matrix", n, t_serial, t_parallel, text_agree);

        const bool score_agree = score_matrix_serial(ctx, w, none) == score_matrix_parallel(ctx, w, none);
        const double s_serial = time_ms(reps, [&] { (void)score_matrix_serial(ctx, w, none); });
        const double s_parallel = time_ms(reps, [&] { (void)score_matrix_parallel(ctx, w, none); });
        row("score_matrix", n, s_serial, s_parallel, score_agree);
        all_agree = all_agree && text_agree && score_agree;
    }

    const std::vector<std::size_t> layout_sizes = quick ? std::vector<std::size_t>{4} : std::vector<std::size_t>{8, 20, 40};
    for (std::size_t m : layout_sizes) {
        const HierGraph g = random_hier(m, 8, rng);
        const LayoutGeometry geom = layout_graph(g);
        const bool agree = count_defects_serial(g, geom) == count_defects_parallel(g, geom);
        const double d_serial = time_ms(reps, [&] { (void)count_defects_serial(g, geom); });
        const double d_parallel = time_ms(reps, [&] { (void)count_defects_parallel(g, geom); });
        row("defects", count_nodes(g), d_serial, d_parallel, agree);
        all_agree = all_agree && agree;
    }
    return all_agree ? EXIT_SUCCESS : EXIT_FAILURE;
}
