#include <algorithm>
#include <map>
#include <set>

#include "sysarch/graph.hpp"

namespace sysarch {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Module: return "module";
    case NodeKind::Tool: return "tool";
    case NodeKind::ComponentText: return "component-text";
    case NodeKind::ComponentIcon: return "component-icon";
    case NodeKind::ComponentImage: return "component-image";
    }
    return "module";
}

std::optional<NodeKind> parse_node_kind(std::string_view text, bool* is_alias)
{
    if (is_alias != nullptr) {
        *is_alias = false;
    }
    if (text == "module") return NodeKind::Module;
    if (text == "tool") return NodeKind::Tool;
    if (text == "component-text") return NodeKind::ComponentText;
    if (text == "component-icon") return NodeKind::ComponentIcon;
    if (text == "component-image") return NodeKind::ComponentImage;
    if (text == "data") {
        if (is_alias != nullptr) {
            *is_alias = true;
        }
        return NodeKind::Tool;
    }
    return std::nullopt;
}

const std::vector<HierNode>& HierNode::child_nodes() const
{
    static const std::vector<HierNode> empty;
    if (const auto* kids = std::get_if<std::vector<HierNode>>(&children)) {
        return *kids;
    }
    return empty;
}

std::vector<HierNode>& HierNode::child_nodes()
{
    if (!std::holds_alternative<std::vector<HierNode>>(children)) {
        children = std::vector<HierNode>{};
    }
    return std::get<std::vector<HierNode>>(children);
}

const std::string& HierNode::payload() const
{
    static const std::string empty;
    if (const auto* text = std::get_if<std::string>(&children)) {
        return *text;
    }
    return empty;
}

namespace {

class HierParser {
public:
    explicit HierParser(const ParseOptions& options) : options_(options) {}

    HierGraph run(const json& doc)
    {
        HierGraph g;
        if (!doc.is_object()) {
            fail(ErrorCode::TypeMismatch, "$", "document must be a JSON object");
            throw_if_failed();
        }
        g.root = parse_node(doc, "$");
        if (g.root.kind != NodeKind::Module && issues_.empty()) {
            fail(ErrorCode::RootKind, "$.type", "root node must have type `module`");
        }
        check_ids(g.root);
        throw_if_failed();
        return g;
    }

private:
    void fail(ErrorCode code, std::string path, std::string message)
    {
        issues_.push_back({code, std::move(path), std::move(message)});
    }

    void throw_if_failed()
    {
        if (issues_.empty()) {
            return;
        }
        std::string msg = "invalid graphJSON: ";
        msg += issues_.front().message;
        msg += " at ";
        msg += issues_.front().path;
        if (issues_.size() > 1) {
            msg += " (+" + std::to_string(issues_.size() - 1) + " more)";
        }
        throw Error(ErrorCode::ParseError, msg, issues_);
    }

    std::string read_string(const json& obj, const char* key, const std::string& path, bool required)
    {
        auto it = obj.find(key);
        if (it == obj.end()) {
            if (required) {
                fail(ErrorCode::MissingField, path, std::string("missing field `") + key + "`");
            }
            return {};
        }
        if (!it->is_string()) {
            fail(ErrorCode::TypeMismatch, path + "." + key, std::string("`") + key + "` must be a string");
            return {};
        }
        return it->get<std::string>();
    }

    std::string read_endpoint(const json& edge, const char* key, const std::string& path)
    {
        auto it = edge.find(key);
        if (it == edge.end()) {
            fail(ErrorCode::MissingField, path, std::string("missing field `") + key + "`");
            return {};
        }
        if (!it->is_array()) {
            fail(ErrorCode::TypeMismatch, path + "." + key, std::string("`") + key + "` must be a list");
            return {};
        }
        if (it->size() != 1) {
            fail(ErrorCode::EdgeArity, path + "." + key,
                 std::string("`") + key + "` must contain exactly one id, got " + std::to_string(it->size()));
            return {};
        }
        if (!(*it)[0].is_string()) {
            fail(ErrorCode::TypeMismatch, path + "." + key + "[0]", "endpoint must be a string id");
            return {};
        }
        return (*it)[0].get<std::string>();
    }

    HierEdge parse_edge(const json& e, const std::string& path)
    {
        HierEdge edge;
        if (!e.is_object()) {
            fail(ErrorCode::TypeMismatch, path, "edge must be an object");
            return edge;
        }
        for (const auto& [key, _] : e.items()) {
            if (key != "sources" && key != "targets" && key != "id" && key != "name") {
                fail(ErrorCode::UnknownField, path + "." + key, "unknown edge field `" + key + "`");
            }
        }
        edge.id = read_string(e, "id", path, true);
        edge.name = read_string(e, "name", path, false);
        edge.source = read_endpoint(e, "sources", path);
        edge.target = read_endpoint(e, "targets", path);
        edge_sites_.push_back({edge.source, path + ".sources[0]"});
        edge_sites_.push_back({edge.target, path + ".targets[0]"});
        edge_ids_.push_back({edge.id, path + ".id"});
        return edge;
    }

    HierNode parse_node(const json& n, const std::string& path)
    {
        HierNode node;
        if (!n.is_object()) {
            fail(ErrorCode::TypeMismatch, path, "node must be an object");
            return node;
        }
        for (const auto& [key, _] : n.items()) {
            if (key != "type" && key != "id" && key != "name" && key != "children" && key != "edges") {
                fail(ErrorCode::UnknownField, path + "." + key, "unknown node field `" + key + "`");
            }
        }
        const std::string type = read_string(n, "type", path, true);
        if (n.contains("type") && n["type"].is_string()) {
            bool alias = false;
            if (auto kind = parse_node_kind(type, &alias)) {
                node.kind = *kind;
                node.data_alias = alias;
            } else {
                fail(ErrorCode::UnknownKind, path + ".type", "unknown node type `" + type + "`");
            }
        }
        node.id = read_string(n, "id", path, true);
        node.name = read_string(n, "name", path, true);
        node_ids_.push_back({node.id, path + ".id"});

        auto kids = n.find("children");
        if (is_component(node.kind)) {
            if (kids == n.end() || kids->is_null()) {
                node.children = std::string{};
            } else if (kids->is_string()) {
                node.children = kids->get<std::string>();
            } else if (kids->is_array()) {
                fail(ErrorCode::LeafWithChildren, path + ".children",
                     "component node must hold a payload string, not a child list");
            } else {
                fail(ErrorCode::TypeMismatch, path + ".children", "component payload must be a string");
            }
        } else {
            std::vector<HierNode> parsed;
            if (kids != n.end() && !kids->is_null()) {
                if (kids->is_array()) {
                    for (std::size_t i = 0; i < kids->size(); ++i) {
                        parsed.push_back(parse_node((*kids)[i], path + ".children[" + std::to_string(i) + "]"));
                    }
                } else {
                    fail(ErrorCode::TypeMismatch, path + ".children",
                         "`children` of a module/tool must be a list of nodes");
                }
            }
            node.children = std::move(parsed);
        }

        auto edges = n.find("edges");
        if (edges != n.end() && !edges->is_null()) {
            if (!edges->is_array()) {
                fail(ErrorCode::TypeMismatch, path + ".edges", "`edges` must be a list");
            } else {
                for (std::size_t i = 0; i < edges->size(); ++i) {
                    node.edges.push_back(parse_edge((*edges)[i], path + ".edges[" + std::to_string(i) + "]"));
                }
            }
        }
        return node;
    }

    void check_ids(const HierNode&)
    {
        std::set<std::string> seen;
        for (const auto& [id, path] : node_ids_) {
            if (!seen.insert(id).second && options_.require_unique_ids) {
                fail(ErrorCode::DuplicateId, path, "duplicate node id `" + id + "`");
            }
        }
        std::set<std::string> seen_edges;
        for (const auto& [id, path] : edge_ids_) {
            if (!seen_edges.insert(id).second && options_.require_unique_ids) {
                fail(ErrorCode::DuplicateId, path, "duplicate edge id `" + id + "`");
            }
        }
        if (options_.require_resolved_edges) {
            for (const auto& [id, path] : edge_sites_) {
                if (!id.empty() && !seen.contains(id)) {
                    fail(ErrorCode::DanglingRef, path, "edge endpoint `" + id + "` does not name a node");
                }
            }
        }
    }

    const ParseOptions& options_;
    std::vector<Issue> issues_;
    std::vector<std::pair<std::string, std::string>> node_ids_;
    std::vector<std::pair<std::string, std::string>> edge_ids_;
    std::vector<std::pair<std::string, std::string>> edge_sites_;
};

}  // namespace

HierGraph parse_hier(const json& doc, const ParseOptions& options)
{
    return HierParser(options).run(doc);
}

HierGraph parse_hier(std::string_view text, const ParseOptions& options)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed JSON: ") + e.what(),
                    "@" + std::to_string(e.byte));
    }
    return parse_hier(doc, options);
}

ordered_json to_json(const HierNode& node)
{
    ordered_json out = ordered_json::object();
    out["type"] = node.data_alias ? std::string("data") : std::string(to_string(node.kind));
    out["id"] = node.id;
    out["name"] = node.name;
    if (node.has_payload()) {
        out["children"] = node.payload();
    } else {
        ordered_json kids = ordered_json::array();
        for (const auto& child : node.child_nodes()) {
            kids.push_back(to_json(child));
        }
        out["children"] = std::move(kids);
    }
    if (!is_component(node.kind) || !node.edges.empty()) {
        ordered_json edges = ordered_json::array();
        for (const auto& e : node.edges) {
            ordered_json je = ordered_json::object();
            je["sources"] = ordered_json::array({e.source});
            je["targets"] = ordered_json::array({e.target});
            je["id"] = e.id;
            je["name"] = e.name;
            edges.push_back(std::move(je));
        }
        out["edges"] = std::move(edges);
    }
    return out;
}

ordered_json to_json(const HierGraph& g)
{
    return to_json(g.root);
}

std::string canonical_serialize(const HierGraph& g)
{
    std::string out = to_json(g).dump(2);
    out.push_back('\n');
    return out;
}

std::size_t count_nodes(const HierGraph& g)
{
    std::size_t n = 0;
    visit_nodes(g.root, [&](const HierNode&, const HierNode*, const std::string&) { ++n; });
    return n;
}

std::size_t count_edges(const HierGraph& g)
{
    std::size_t n = 0;
    visit_nodes(g.root, [&](const HierNode& node, const HierNode*, const std::string&) { n += node.edges.size(); });
    return n;
}

std::map<std::string, std::string> parent_map(const HierGraph& g)
{
    std::map<std::string, std::string> parents;
    visit_nodes(g.root, [&](const HierNode& node, const HierNode* parent, const std::string&) {
        if (parent != nullptr) {
            parents.try_emplace(node.id, parent->id);
        }
    });
    return parents;
}

HierNode* find_node(HierNode& root, std::string_view id)
{
    if (root.id == id) {
        return &root;
    }
    if (root.has_payload()) {
        return nullptr;
    }
    for (auto& child : root.child_nodes()) {
        if (auto* hit = find_node(child, id)) {
            return hit;
        }
    }
    return nullptr;
}

const HierNode* find_node(const HierNode& root, std::string_view id)
{
    return find_node(const_cast<HierNode&>(root), id);
}

}  // namespace sysarch
