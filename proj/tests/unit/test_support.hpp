#pragma once

// Fixture access and random graph generators shared by the unit suites.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "sysarch/agent.hpp"
#include "sysarch/graph.hpp"
#include "sysarch/util.hpp"

namespace testing_support {

inline std::filesystem::path fixture(const std::string& rel)
{
    return std::filesystem::path(SYSARCH_FIXTURE_DIR) / rel;
}

inline std::filesystem::path golden(const std::string& rel)
{
    return std::filesystem::path(SYSARCH_GOLDEN_DIR) / rel;
}

inline std::string fixture_text(const std::string& rel)
{
    return sysarch::read_file(fixture(rel));
}

inline sysarch::HierGraph example_graph()
{
    return sysarch::parse_hier(fixture_text("example.graph.json"));
}

inline const std::vector<std::string>& words()
{
    static const std::vector<std::string> w{"encoder", "decoder", "attention", "memory", "retriever", "planner",
                                            "image",   "text",    "fusion",    "graph",  "layer",     "token",
                                            "vision",  "policy",  "reward",    "critic", "buffer",    "query"};
    return w;
}

inline std::string random_label(std::mt19937& rng, int max_words = 3)
{
    std::uniform_int_distribution<std::size_t> pick(0, words().size() - 1);
    std::uniform_int_distribution<int> len(1, max_words);
    std::string out;
    for (int i = len(rng); i > 0; --i) {
        out += (out.empty() ? "" : " ") + words()[pick(rng)];
    }
    return out;
}

/// Random nested graph with `n` nodes (n >= 1): containers are modules or
/// tools, leaves may be components. Edge endpoints are arbitrary node ids
/// (plus occasional unknown ids when `dangling`), declared on arbitrary
/// containers, so most kinds of edge violation occur.
inline sysarch::HierGraph random_invalid_hier(std::mt19937& rng, int n, int edges, bool dangling = true)
{
    using namespace sysarch;
    struct Slot {
        std::string id;
        int parent;
        NodeKind kind;
    };
    std::vector<Slot> slots{{"n0", -1, NodeKind::Module}};
    for (int i = 1; i < n; ++i) {
        std::vector<int> containers;
        for (int k = 0; k < i; ++k) {
            if (!is_component(slots[k].kind)) {
                containers.push_back(k);
            }
        }
        const int parent = containers[std::uniform_int_distribution<std::size_t>(0, containers.size() - 1)(rng)];
        const int roll = std::uniform_int_distribution<int>(0, 9)(rng);
        const NodeKind kind = roll < 3 ? NodeKind::Module : roll < 6 ? NodeKind::Tool : NodeKind::ComponentText;
        slots.push_back({"n" + std::to_string(i), parent, kind});
    }
    std::vector<HierNode> nodes(slots.size());
    for (std::size_t i = 0; i < slots.size(); ++i) {
        nodes[i].id = slots[i].id;
        nodes[i].kind = slots[i].kind;
        nodes[i].name = random_label(rng);
        if (is_component(slots[i].kind)) {
            nodes[i].children = random_label(rng);
        }
    }
    std::vector<int> containers;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        if (!is_component(slots[i].kind)) {
            containers.push_back(static_cast<int>(i));
        }
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    std::uniform_int_distribution<int> dangle(0, 19);
    for (int e = 0; e < edges; ++e) {
        const int owner = containers[std::uniform_int_distribution<std::size_t>(0, containers.size() - 1)(rng)];
        HierEdge edge;
        edge.id = "e" + std::to_string(e);
        edge.source = slots[any(rng)].id;
        edge.target = slots[any(rng)].id;
        if (dangling && dangle(rng) == 0) {
            edge.target = "ghost" + std::to_string(e);
        }
        nodes[owner].edges.push_back(edge);
    }
    // Attach children bottom-up so every node is moved into its parent complete.
    for (int i = n - 1; i >= 1; --i) {
        auto& kids = nodes[slots[i].parent].child_nodes();
        kids.insert(kids.begin(), std::move(nodes[i]));
    }
    return HierGraph{std::move(nodes[0])};
}

/// Random graph that satisfies every structural rule: edges only between
/// distinct siblings, declared on their parent.
inline sysarch::HierGraph random_valid_hier(std::mt19937& rng, int n, int edge_attempts)
{
    using namespace sysarch;
    HierGraph g = random_invalid_hier(rng, n, 0, false);
    std::vector<HierNode*> containers;
    std::vector<HierNode*> stack{&g.root};
    while (!stack.empty()) {
        HierNode* node = stack.back();
        stack.pop_back();
        if (node->has_payload()) {
            continue;
        }
        containers.push_back(node);
        for (auto& c : node->child_nodes()) {
            stack.push_back(&c);
        }
    }
    int next = 0;
    for (int k = 0; k < edge_attempts; ++k) {
        HierNode* owner = containers[std::uniform_int_distribution<std::size_t>(0, containers.size() - 1)(rng)];
        const auto& kids = owner->child_nodes();
        if (kids.size() < 2) {
            continue;
        }
        std::uniform_int_distribution<std::size_t> pick(0, kids.size() - 1);
        const std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        if (a == b) {
            b = (b + 1) % kids.size();
        }
        owner->edges.push_back({"v" + std::to_string(next++), random_label(rng, 2), kids[a].id, kids[b].id});
    }
    return g;
}

/// Random flat forest-free graph (single root) with up to `n` nodes.
inline sysarch::FlatGraph random_flat(std::mt19937& rng, int n, int edges, bool distinct_names = false)
{
    using namespace sysarch;
    FlatGraph f;
    for (int i = 0; i < n; ++i) {
        std::string name = random_label(rng);
        if (distinct_names) {
            name += " x" + std::to_string(i);
        }
        f.nodes.push_back({"n" + std::to_string(i), name, {}});
        if (i > 0) {
            const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
            f.nodes[parent].children.push_back(f.nodes[i].id);
        }
    }
    std::uniform_int_distribution<int> any(0, n - 1);
    for (int e = 0; e < edges; ++e) {
        const int a = any(rng);
        const int b = any(rng);
        if (a != b) {
            f.edges.push_back({"e" + std::to_string(e), f.nodes[a].id, f.nodes[b].id, ""});
        }
    }
    return f;
}

/// Replies from a fixed list in order (the last one repeats); an entry equal
/// to "!fail" throws a retryable transport failure instead.
class SequenceTransport final : public sysarch::Transport {
public:
    explicit SequenceTransport(std::vector<std::string> replies) : replies_(std::move(replies)) {}

    std::string send(const sysarch::AgentHandle&, const sysarch::ChatRequest& request) override
    {
        std::lock_guard lock(mutex_);
        requests.push_back(request);
        const std::string& reply = replies_.at(std::min(calls++, replies_.size() - 1));
        if (reply == "!fail") {
            throw sysarch::TransportFailure("injected failure");
        }
        return reply;
    }

    std::size_t calls = 0;
    std::vector<sysarch::ChatRequest> requests;

private:
    std::mutex mutex_;
    std::vector<std::string> replies_;
};

/// Answers each request through a callback (thread-safe for concurrent drafts).
class LambdaTransport final : public sysarch::Transport {
public:
    using Fn = std::function<std::string(const sysarch::ChatRequest&)>;
    explicit LambdaTransport(Fn fn) : fn_(std::move(fn)) {}

    std::string send(const sysarch::AgentHandle&, const sysarch::ChatRequest& request) override
    {
        std::lock_guard lock(mutex_);
        ++calls;
        return fn_(request);
    }

    std::size_t calls = 0;

private:
    std::mutex mutex_;
    Fn fn_;
};

inline sysarch::AgentHandle mock_handle(sysarch::AgentRole role)
{
    sysarch::AgentHandle h = sysarch::AgentHandle::for_role(role);
    h.transport = sysarch::TransportKind::Mock;
    h.max_retries = 0;
    return h;
}

}  // namespace testing_support
