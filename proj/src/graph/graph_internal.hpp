#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "sysarch/graph.hpp"

namespace sysarch {

/// Edges in the order they appear in serialized text: a node's subtree first,
/// then the edges declared on the node itself.
template <typename Fn>
void visit_edges_in_document_order(const HierNode& node, Fn&& fn, const std::string& path = "$")
{
    if (!node.has_payload()) {
        const auto& kids = node.child_nodes();
        for (std::size_t i = 0; i < kids.size(); ++i) {
            visit_edges_in_document_order(kids[i], fn, path + ".children[" + std::to_string(i) + "]");
        }
    }
    for (std::size_t i = 0; i < node.edges.size(); ++i) {
        fn(node.edges[i], node, path + ".edges[" + std::to_string(i) + "]");
    }
}

/// nullopt when the edge is legal where it is declared.
std::optional<ViolationCode> classify_edge(const HierEdge& e, const std::string& declared_on,
                                           const std::map<std::string, std::string>& parents,
                                           const std::set<std::string>& ids);

std::set<std::string> node_id_set(const HierGraph& g);

}  // namespace sysarch
