#include <doctest.h>

#include <random>
#include <set>

#include "sysarch/agent.hpp"
#include "sysarch/regularizer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace sysarch;
using namespace testing_support;

namespace {

struct EdgeRef {
    HierEdge edge;
    std::string owner;
};

std::vector<EdgeRef> all_edges(const HierGraph& g)
{
    std::vector<EdgeRef> out;
    visit_nodes(g.root, [&](const HierNode& n, const HierNode*, const std::string&) {
        for (const auto& e : n.edges) {
            out.push_back({e, n.id});
        }
    });
    return out;
}

class ScriptTransport final : public Transport {
public:
    explicit ScriptTransport(std::string reply) : reply_(std::move(reply)) {}
    std::string send(const AgentHandle&, const ChatRequest&) override
    {
        ++calls;
        return reply_;
    }
    int calls = 0;

private:
    std::string reply_;
};

AgentHandle mock_handle()
{
    AgentHandle h = AgentHandle::for_role(AgentRole::Architect);
    h.transport = TransportKind::Mock;
    return h;
}

// Root with two modules; the edge runs from module a to a grandchild of b.
HierGraph cross_level_graph()
{
    return parse_hier(R"({"type":"module","id":"root","name":"R","children":[
        {"type":"module","id":"a","name":"A","children":[{"type":"tool","id":"a1","name":"A1","children":[]}]},
        {"type":"module","id":"b","name":"B","children":[{"type":"tool","id":"b1","name":"B1","children":[]}]}],
        "edges":[{"id":"x","name":"flow","sources":["a"],"targets":["b1"]}]})");
}

}  // namespace

TEST_SUITE("regularizer")
{
    TEST_CASE("example graph: e1 is rehomed to n1 and e2 is deleted")
    {
        const Regularized r = prune_violations(example_graph());
        CHECK(r.report.rehomed == std::vector<std::string>{"e1"});
        REQUIRE(r.report.deleted.size() == 1);
        CHECK(r.report.deleted[0].id == "e2");
        CHECK(r.report.deleted[0].code == ViolationCode::NonSiblingEdge);
        REQUIRE(r.graph.root.edges.size() == 1);
        CHECK(r.graph.root.edges[0].id == "e1");
        CHECK(find_node(r.graph.root, "n2")->edges.empty());
        CHECK(validate(r.graph).empty());
    }

    TEST_CASE("rehoming alone moves e1 onto n1")
    {
        const Regularized r = rehome_edges(example_graph());
        CHECK(r.report.rehomed == std::vector<std::string>{"e1"});
        CHECK(r.report.deleted.empty());
        CHECK(find_node(r.graph.root, "n2")->edges.empty());
        CHECK(r.graph.root.edges.size() == 2);
    }

    TEST_CASE("conformant graphs are fixed points")
    {
        std::mt19937 rng(7);
        for (int i = 0; i < 50; ++i) {
            const HierGraph g = random_valid_hier(rng, 3 + i % 12, 6);
            const Regularized a = rehome_edges(g);
            const Regularized b = prune_violations(g);
            CHECK(a.graph == g);
            CHECK(b.graph == g);
            CHECK(a.report.empty());
            CHECK(b.report.empty());
        }
    }

    TEST_CASE("three misdeclared sibling edges are all rehomed")
    {
        HierGraph g = parse_hier(R"({"type":"module","id":"r","name":"R","children":[
            {"type":"tool","id":"a","name":"A","children":[]},
            {"type":"tool","id":"b","name":"B","children":[]},
            {"type":"tool","id":"c","name":"C","children":[]}]})");
        find_node(g.root, "a")->edges.push_back({"e1", "", "a", "b"});
        find_node(g.root, "b")->edges.push_back({"e2", "", "b", "c"});
        find_node(g.root, "c")->edges.push_back({"e3", "", "c", "a"});
        const Regularized r = rehome_edges(g);
        CHECK(r.report.rehomed.size() == 3);
        for (const auto& v : validate(r.graph)) {
            CHECK(v.code != ViolationCode::MisdeclaredEdge);
        }
    }

    TEST_CASE("pruning closes random invalid graphs and deletes exactly the violating edges")
    {
        std::mt19937 rng(2024);
        for (int trial = 0; trial < 500; ++trial) {
            const int n = 1 + trial % 15;
            const HierGraph g = random_invalid_hier(rng, n, 1 + trial % 9);
            const Regularized r = prune_violations(g);
            CHECK(validate(r.graph).empty());

            const auto expected = expected_survivors(g);
            std::set<std::string> expected_deleted;
            for (const auto& [e, owner] : all_edges(g)) {
                (void)owner;
                if (!expected.contains(e.id)) {
                    expected_deleted.insert(e.id);
                }
            }
            std::set<std::string> deleted;
            for (const auto& d : r.report.deleted) {
                deleted.insert(d.id);
            }
            CHECK(deleted == expected_deleted);
            std::map<std::string, std::string> kept;
            for (const auto& [e, owner] : all_edges(r.graph)) {
                kept[e.id] = owner;
            }
            CHECK(kept == expected);
            // Nodes are never removed.
            CHECK(count_nodes(r.graph) == count_nodes(g));
        }
    }

    TEST_CASE("agent reroute lifts a cross-level edge onto the two modules")
    {
        auto mock = std::make_shared<ScriptTransport>(
            R"(```json
{"reroutes":[{"edge_id":"x","source":"a","target":"b"}]}
```)");
        AgentGateway gw(nullptr, mock);
        const Regularized r = semantic_filter(cross_level_graph(), gw, mock_handle());
        CHECK(mock->calls == 1);
        REQUIRE(r.graph.root.edges.size() == 1);
        CHECK(r.graph.root.edges[0].source == "a");
        CHECK(r.graph.root.edges[0].target == "b");
        CHECK(r.report.reroute_suggestions.size() == 1);
        CHECK(r.report.deleted.empty());
        CHECK(validate(r.graph).empty());
    }

    TEST_CASE("no suggestions behaves exactly like pruning")
    {
        auto mock = std::make_shared<ScriptTransport>(R"({"reroutes":[]})");
        AgentGateway gw(nullptr, mock);
        const Regularized a = semantic_filter(cross_level_graph(), gw, mock_handle());
        const Regularized b = prune_violations(cross_level_graph());
        CHECK(a.graph == b.graph);
        CHECK(a.report.deleted.size() == b.report.deleted.size());
    }

    TEST_CASE("an illegal reroute is discarded and the edge is pruned")
    {
        auto mock = std::make_shared<ScriptTransport>(R"({"reroutes":[{"edge_id":"x","source":"a","target":"b1"}]})");
        AgentGateway gw(nullptr, mock);
        const Regularized r = semantic_filter(cross_level_graph(), gw, mock_handle());
        CHECK(r.report.reroute_suggestions.empty());
        REQUIRE(r.report.rejected_suggestions.size() == 1);
        CHECK_FALSE(r.report.rejected_suggestions[0].malformed);
        REQUIRE(r.report.deleted.size() == 1);
        CHECK(r.report.deleted[0].id == "x");
    }

    TEST_CASE("unknown edge ids are malformed suggestions")
    {
        const Regularized r = apply_reroutes(cross_level_graph(), {{"nope", "a", "b"}});
        REQUIRE(r.report.rejected_suggestions.size() == 1);
        CHECK(r.report.rejected_suggestions[0].malformed);
    }

    TEST_CASE("a clean graph skips the agent")
    {
        auto mock = std::make_shared<ScriptTransport>("not used");
        AgentGateway gw(nullptr, mock);
        const HierGraph clean = prune_violations(example_graph()).graph;
        const Regularized r = semantic_filter(clean, gw, mock_handle());
        CHECK(mock->calls == 0);
        CHECK(r.graph == clean);
    }

    TEST_CASE("unavailable agent surfaces as an error")
    {
        AgentGateway gw(nullptr, std::make_shared<MockTransport>());
        try {
            (void)semantic_filter(cross_level_graph(), gw, mock_handle());
            FAIL("expected AGENT_UNAVAILABLE");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AgentUnavailable);
        }
    }
}
