#pragma once

// Hierarchical (nested) and flat graph representations of architecture
// diagrams, plus parsing, validation and conversion between them.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sysarch/error.hpp"

namespace sysarch {

enum class NodeKind { Module, Tool, ComponentText, ComponentIcon, ComponentImage };

std::string_view to_string(NodeKind kind);

/// Parses a kind string. `data` is accepted as an alias of `tool`; `is_alias`
/// reports whether the alias was used. Returns nullopt for anything else.
std::optional<NodeKind> parse_node_kind(std::string_view text, bool* is_alias = nullptr);

[[nodiscard]] constexpr bool is_component(NodeKind kind) noexcept
{
    return kind == NodeKind::ComponentText || kind == NodeKind::ComponentIcon ||
           kind == NodeKind::ComponentImage;
}

struct HierEdge {
    std::string id;
    std::string name;
    std::string source;
    std::string target;
    // Set by flat_to_hier when the endpoints are not siblings.
    bool violating = false;

    bool operator==(const HierEdge&) const = default;
};

struct HierNode {
    NodeKind kind = NodeKind::Module;
    std::string id;
    std::string name;
    // Containers hold child nodes; components hold a single payload string.
    std::variant<std::vector<HierNode>, std::string> children = std::vector<HierNode>{};
    std::vector<HierEdge> edges;
    // True when the input spelled the kind as `data`.
    bool data_alias = false;

    [[nodiscard]] bool has_payload() const noexcept
    {
        return std::holds_alternative<std::string>(children);
    }
    [[nodiscard]] const std::vector<HierNode>& child_nodes() const;
    [[nodiscard]] std::vector<HierNode>& child_nodes();
    [[nodiscard]] const std::string& payload() const;

    bool operator==(const HierNode&) const = default;
};

struct HierGraph {
    HierNode root;

    bool operator==(const HierGraph&) const = default;
};

struct ParseOptions {
    bool require_unique_ids = true;
    bool require_resolved_edges = true;
};

/// Parses a graphJSON document. Throws Error(ParseError) carrying every issue found.
HierGraph parse_hier(std::string_view text, const ParseOptions& options = {});
HierGraph parse_hier(const nlohmann::json& doc, const ParseOptions& options = {});
inline HierGraph parse_hier(const std::string& text, const ParseOptions& options = {})
{
    return parse_hier(std::string_view(text), options);
}
inline HierGraph parse_hier(const char* text, const ParseOptions& options = {})
{
    return parse_hier(std::string_view(text), options);
}

/// Schema-ordered JSON value (`type,id,name,children,edges`).
nlohmann::ordered_json to_json(const HierGraph& g);
nlohmann::ordered_json to_json(const HierNode& node);

/// Byte-stable serialization: schema key order, 2-space indent, LF, trailing newline.
std::string canonical_serialize(const HierGraph& g);

enum class ViolationCode {
    DuplicateId,
    NonSiblingEdge,
    MisdeclaredEdge,
    DanglingRef,
    LeafWithChildren,
    SelfLoop,
};

std::string_view to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::string path;
    std::string message;
    // Edge or node id the violation refers to.
    std::string subject;
};

std::vector<Violation> validate(const HierGraph& g);
nlohmann::ordered_json to_json(const std::vector<Violation>& violations);

// ---------------------------------------------------------------------------
// Flat representation

struct FlatNode {
    std::string id;
    std::string name;
    std::vector<std::string> children;

    bool operator==(const FlatNode&) const = default;
};

struct FlatEdge {
    std::string id;
    std::string source;
    std::string target;
    std::string name;

    bool operator==(const FlatEdge&) const = default;
};

struct FlatGraph {
    std::vector<FlatNode> nodes;
    std::vector<FlatEdge> edges;
    std::string explain;

    [[nodiscard]] const FlatNode* find(std::string_view id) const;
    /// Index of a node id in `nodes`, or -1.
    [[nodiscard]] int index_of(std::string_view id) const;

    bool operator==(const FlatGraph&) const = default;
};

/// Parses the extraction format `{"graph":{"nodes":[...],"edges":[...]},"explain":...}`.
/// Edges without an id receive `e<k>` (1-based position). Throws on dangling
/// references or a parent relation that is not a forest.
FlatGraph parse_flat(std::string_view text);
FlatGraph parse_flat(const nlohmann::json& doc);
inline FlatGraph parse_flat(const std::string& text)
{
    return parse_flat(std::string_view(text));
}
inline FlatGraph parse_flat(const char* text)
{
    return parse_flat(std::string_view(text));
}
nlohmann::ordered_json to_json(const FlatGraph& f);

/// Throws Error(NotAForest / DanglingRef / DuplicateId) when the invariants fail.
void check_flat(const FlatGraph& f);

/// Node display text used for matching: component payloads are folded in as `name: payload`.
std::string folded_name(const HierNode& node);

FlatGraph hier_to_flat(const HierGraph& g);

struct FlatToHierResult {
    HierGraph graph;
    // Edges whose endpoints are not siblings; they are kept and tagged `violating`.
    std::vector<Violation> issues;
};

/// Rebuilds a nested graph. Throws Error(MultipleRoots) unless the forest has one root.
FlatToHierResult flat_to_hier(const FlatGraph& f, const std::map<std::string, NodeKind>& kind_hints = {});

struct NodeStats {
    int out_degree = 0;
    int in_degree = 0;
    std::vector<std::string> ancestor_chain;  // parent first
    std::set<std::string> neighbors;

    bool operator==(const NodeStats&) const = default;
};

std::map<std::string, NodeStats> node_stats(const FlatGraph& f);

// ---------------------------------------------------------------------------
// Helpers over nested graphs

/// Pre-order visit; `path` is the JSON path of the visited node.
template <typename Fn>
void visit_nodes(const HierNode& node, Fn&& fn, const HierNode* parent = nullptr,
                 const std::string& path = "$")
{
    fn(node, parent, path);
    if (!node.has_payload()) {
        const auto& kids = node.child_nodes();
        for (std::size_t i = 0; i < kids.size(); ++i) {
            visit_nodes(kids[i], fn, &node, path + ".children[" + std::to_string(i) + "]");
        }
    }
}

std::size_t count_nodes(const HierGraph& g);
std::size_t count_edges(const HierGraph& g);

/// Map child id -> parent id (root absent). First occurrence wins on duplicates.
std::map<std::string, std::string> parent_map(const HierGraph& g);

HierNode* find_node(HierNode& root, std::string_view id);
const HierNode* find_node(const HierNode& root, std::string_view id);

}  // namespace sysarch
