#pragma once

// Command-line surface. Everything is reachable in-process through run_cli so
// tests can drive the commands without spawning the binary.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sysarch/config.hpp"
#include "sysarch/evaluation.hpp"
#include "sysarch/graph.hpp"
#include "sysarch/scorer.hpp"

namespace sysarch {

enum ExitCode : int { ExitOk = 0, ExitPartial = 1, ExitUsage = 2 };

/// Parses argv and dispatches to a subcommand. Returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A graph file in either format; nested inputs keep their nested form.
struct GraphInput {
    std::optional<HierGraph> hier;
    FlatGraph flat;
};

/// Loads graphJSON or the flat extraction format, detected from the document.
GraphInput load_graph_input(const std::filesystem::path& path);

[[nodiscard]] bool is_image_path(const std::filesystem::path& path);

/// Deterministic plain-text description of a graph, used as the system
/// understanding summary when no image is available.
std::string graph_summary(const FlatGraph& f);

/// Longest root-to-leaf chain, counting nodes (a lone root has depth 1).
int graph_depth(const FlatGraph& f);

struct SampleInputs {
    std::string sample_id;
    std::filesystem::path gen;
    std::filesystem::path gt;
    std::optional<std::filesystem::path> paper;
};

/// Scores one sample. Graph-only pairs run offline; image pairs go through the
/// evaluation agents of `gateway`, whose failures become undetermined entries.
/// Throws Error for input problems (missing files, mixed input kinds).
ScoreReport score_sample(const SampleInputs& in, const RunConfig& cfg, AgentGateway* gateway);

/// `<dir>/<sample>/{gen,gt}.<ext>` plus optional `paper.txt`, in natural id order.
std::vector<SampleInputs> discover_samples(const std::filesystem::path& dir);

/// Candidate figures of one paper directory, in natural id order. Captions come
/// from `captions.json` ({image id: caption}) or a `<image>.txt` sidecar.
std::vector<CandidateImage> load_candidates(const std::filesystem::path& dir);

}  // namespace sysarch
