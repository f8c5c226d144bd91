#include <algorithm>
#include <functional>
#include <set>

#include "graph_internal.hpp"
#include "sysarch/graph.hpp"

namespace sysarch {

using nlohmann::json;
using nlohmann::ordered_json;

const FlatNode* FlatGraph::find(std::string_view id) const
{
    const int i = index_of(id);
    return i < 0 ? nullptr : &nodes[static_cast<std::size_t>(i)];
}

int FlatGraph::index_of(std::string_view id) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

void check_flat(const FlatGraph& f)
{
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        if (!index.emplace(f.nodes[i].id, i).second) {
            throw Error(ErrorCode::DuplicateId, "duplicate node id `" + f.nodes[i].id + "`",
                        "$.graph.nodes[" + std::to_string(i) + "].id");
        }
    }
    std::map<std::string, std::string> parent;
    for (std::size_t i = 0; i < f.nodes.size(); ++i) {
        const auto& n = f.nodes[i];
        for (std::size_t k = 0; k < n.children.size(); ++k) {
            const auto& c = n.children[k];
            const std::string path = "$.graph.nodes[" + std::to_string(i) + "].children[" + std::to_string(k) + "]";
            if (!index.contains(c)) {
                throw Error(ErrorCode::DanglingRef, "child `" + c + "` is not a declared node", path);
            }
            if (c == n.id) {
                throw Error(ErrorCode::NotAForest, "node `" + c + "` lists itself as a child", path);
            }
            if (!parent.emplace(c, n.id).second) {
                throw Error(ErrorCode::NotAForest, "node `" + c + "` has more than one parent", path);
            }
        }
    }
    // With single parents, a cycle is a chain that never reaches a root.
    for (const auto& n : f.nodes) {
        std::string cur = n.id;
        std::size_t steps = 0;
        while (true) {
            auto it = parent.find(cur);
            if (it == parent.end()) {
                break;
            }
            cur = it->second;
            if (++steps > f.nodes.size()) {
                throw Error(ErrorCode::NotAForest, "containment cycle through `" + n.id + "`", "$.graph.nodes");
            }
        }
    }
    for (std::size_t i = 0; i < f.edges.size(); ++i) {
        const auto& e = f.edges[i];
        const std::string path = "$.graph.edges[" + std::to_string(i) + "]";
        if (!index.contains(e.source)) {
            throw Error(ErrorCode::DanglingRef, "edge source `" + e.source + "` is not a declared node", path + ".source");
        }
        if (!index.contains(e.target)) {
            throw Error(ErrorCode::DanglingRef, "edge target `" + e.target + "` is not a declared node", path + ".target");
        }
    }
}

namespace {

std::string string_field(const json& obj, const char* key, const std::string& path, bool required)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) {
            throw Error(ErrorCode::MissingField, std::string("missing field `") + key + "`", path);
        }
        return {};
    }
    if (it->is_string()) {
        return it->get<std::string>();
    }
    if (it->is_number_integer()) {
        return std::to_string(it->get<long long>());
    }
    throw Error(ErrorCode::TypeMismatch, std::string("`") + key + "` must be a string", path + "." + key);
}

}  // namespace

FlatGraph parse_flat(const json& doc)
{
    if (!doc.is_object()) {
        throw Error(ErrorCode::TypeMismatch, "flat graph document must be an object", "$");
    }
    const json* graph = &doc;
    std::string base = "$";
    if (auto it = doc.find("graph"); it != doc.end()) {
        graph = &*it;
        base = "$.graph";
    }
    if (!graph->is_object() || !graph->contains("nodes")) {
        throw Error(ErrorCode::MissingField, "missing `nodes`", base);
    }
    FlatGraph f;
    const json& nodes = (*graph)["nodes"];
    if (!nodes.is_array()) {
        throw Error(ErrorCode::TypeMismatch, "`nodes` must be a list", base + ".nodes");
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::string path = base + ".nodes[" + std::to_string(i) + "]";
        const json& n = nodes[i];
        if (!n.is_object()) {
            throw Error(ErrorCode::TypeMismatch, "node must be an object", path);
        }
        FlatNode node;
        node.id = string_field(n, "id", path, true);
        node.name = string_field(n, "name", path, false);
        if (auto kids = n.find("children"); kids != n.end() && !kids->is_null()) {
            if (!kids->is_array()) {
                throw Error(ErrorCode::TypeMismatch, "`children` must be a list of ids", path + ".children");
            }
            for (const auto& c : *kids) {
                if (c.is_string()) {
                    node.children.push_back(c.get<std::string>());
                } else if (c.is_number_integer()) {
                    node.children.push_back(std::to_string(c.get<long long>()));
                } else {
                    throw Error(ErrorCode::TypeMismatch, "child reference must be an id", path + ".children");
                }
            }
        }
        f.nodes.push_back(std::move(node));
    }
    if (auto edges = graph->find("edges"); edges != graph->end() && !edges->is_null()) {
        if (!edges->is_array()) {
            throw Error(ErrorCode::TypeMismatch, "`edges` must be a list", base + ".edges");
        }
        for (std::size_t i = 0; i < edges->size(); ++i) {
            const std::string path = base + ".edges[" + std::to_string(i) + "]";
            const json& e = (*edges)[i];
            if (!e.is_object()) {
                throw Error(ErrorCode::TypeMismatch, "edge must be an object", path);
            }
            FlatEdge edge;
            edge.id = string_field(e, "id", path, false);
            if (edge.id.empty()) {
                edge.id = "e" + std::to_string(i + 1);
            }
            edge.source = string_field(e, "source", path, true);
            edge.target = string_field(e, "target", path, true);
            edge.name = string_field(e, "name", path, false);
            f.edges.push_back(std::move(edge));
        }
    }
    if (auto ex = doc.find("explain"); ex != doc.end() && ex->is_string()) {
        f.explain = ex->get<std::string>();
    }
    check_flat(f);
    return f;
}

FlatGraph parse_flat(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what(), "@" + std::to_string(e.byte));
    }
    return parse_flat(doc);
}

ordered_json to_json(const FlatGraph& f)
{
    ordered_json nodes = ordered_json::array();
    for (const auto& n : f.nodes) {
        ordered_json jn;
        jn["id"] = n.id;
        jn["name"] = n.name;
        jn["children"] = n.children;
        nodes.push_back(std::move(jn));
    }
    ordered_json edges = ordered_json::array();
    for (const auto& e : f.edges) {
        ordered_json je;
        je["id"] = e.id;
        je["source"] = e.source;
        je["target"] = e.target;
        je["name"] = e.name;
        edges.push_back(std::move(je));
    }
    ordered_json out;
    out["graph"]["nodes"] = std::move(nodes);
    out["graph"]["edges"] = std::move(edges);
    out["explain"] = f.explain;
    return out;
}

std::string folded_name(const HierNode& node)
{
    if (node.has_payload() && !node.payload().empty()) {
        return node.name + ": " + node.payload();
    }
    return node.name;
}

FlatGraph hier_to_flat(const HierGraph& g)
{
    FlatGraph f;
    visit_nodes(g.root, [&](const HierNode& n, const HierNode*, const std::string&) {
        FlatNode fn;
        fn.id = n.id;
        fn.name = folded_name(n);
        for (const auto& c : n.child_nodes()) {
            fn.children.push_back(c.id);
        }
        f.nodes.push_back(std::move(fn));
    });
    visit_edges_in_document_order(g.root, [&](const HierEdge& e, const HierNode&, const std::string&) {
        f.edges.push_back({e.id, e.source, e.target, e.name});
    });
    return f;
}

FlatToHierResult flat_to_hier(const FlatGraph& f, const std::map<std::string, NodeKind>& kind_hints)
{
    check_flat(f);
    std::map<std::string, std::string> parent;
    for (const auto& n : f.nodes) {
        for (const auto& c : n.children) {
            parent[c] = n.id;
        }
    }
    std::vector<std::string> roots;
    for (const auto& n : f.nodes) {
        if (!parent.contains(n.id)) {
            roots.push_back(n.id);
        }
    }
    if (roots.size() != 1) {
        throw Error(ErrorCode::MultipleRoots,
                    "flat graph must have exactly one root, found " + std::to_string(roots.size()), "$.graph.nodes");
    }

    std::function<HierNode(const FlatNode&)> build = [&](const FlatNode& fn) {
        HierNode node;
        node.id = fn.id;
        if (auto it = kind_hints.find(fn.id); it != kind_hints.end()) {
            node.kind = it->second;
        } else {
            node.kind = fn.children.empty() ? NodeKind::ComponentText : NodeKind::Module;
        }
        if (is_component(node.kind) && fn.children.empty()) {
            // Undo the `name: payload` folding done by hier_to_flat.
            const auto sep = fn.name.find(": ");
            if (sep == std::string::npos) {
                node.name = fn.name;
                node.children = std::string{};
            } else {
                node.name = fn.name.substr(0, sep);
                node.children = fn.name.substr(sep + 2);
            }
        } else {
            node.name = fn.name;
            std::vector<HierNode> kids;
            for (const auto& c : fn.children) {
                kids.push_back(build(*f.find(c)));
            }
            node.children = std::move(kids);
        }
        return node;
    };

    FlatToHierResult result;
    result.graph.root = build(*f.find(roots.front()));

    auto chain = [&](const std::string& id) {
        std::vector<std::string> up{id};
        for (auto it = parent.find(id); it != parent.end(); it = parent.find(it->second)) {
            up.push_back(it->second);
        }
        return up;
    };

    for (std::size_t i = 0; i < f.edges.size(); ++i) {
        const auto& fe = f.edges[i];
        HierEdge e{fe.id, fe.name, fe.source, fe.target, false};
        auto ps = parent.find(fe.source);
        auto pt = parent.find(fe.target);
        std::string owner;
        if (fe.source != fe.target && ps != parent.end() && pt != parent.end() && ps->second == pt->second) {
            owner = ps->second;
        } else {
            e.violating = true;
            // Lowest common ancestor of the two endpoints (a node counts as its own ancestor).
            const auto a = chain(fe.source);
            const auto b = chain(fe.target);
            const std::set<std::string> in_b(b.begin(), b.end());
            owner = roots.front();
            for (const auto& id : a) {
                if (in_b.contains(id)) {
                    owner = id;
                    break;
                }
            }
            if (fe.source == fe.target && ps != parent.end()) {
                owner = ps->second;
            }
            const std::string code = fe.source == fe.target ? "self loop" : "endpoints are not siblings";
            result.issues.push_back({fe.source == fe.target ? ViolationCode::SelfLoop : ViolationCode::NonSiblingEdge,
                                     "$.graph.edges[" + std::to_string(i) + "]",
                                     "edge `" + fe.id + "`: " + code, fe.id});
        }
        HierNode* host = find_node(result.graph.root, owner);
        host->edges.push_back(std::move(e));
    }
    return result;
}

std::map<std::string, NodeStats> node_stats(const FlatGraph& f)
{
    std::map<std::string, NodeStats> stats;
    std::map<std::string, std::string> parent;
    for (const auto& n : f.nodes) {
        stats[n.id];
        for (const auto& c : n.children) {
            parent[c] = n.id;
        }
    }
    for (const auto& e : f.edges) {
        stats[e.source].out_degree += 1;
        stats[e.target].in_degree += 1;
        if (e.source != e.target) {
            stats[e.source].neighbors.insert(e.target);
            stats[e.target].neighbors.insert(e.source);
        }
    }
    for (auto& [id, s] : stats) {
        for (auto it = parent.find(id); it != parent.end(); it = parent.find(it->second)) {
            s.ancestor_chain.push_back(it->second);
        }
    }
    return stats;
}

}  // namespace sysarch
