#include <set>

#include "graph_internal.hpp"
#include "sysarch/graph.hpp"

namespace sysarch {

std::string_view to_string(ViolationCode code)
{
    switch (code) {
    case ViolationCode::DuplicateId: return "DUP_ID";
    case ViolationCode::NonSiblingEdge: return "NON_SIBLING_EDGE";
    case ViolationCode::MisdeclaredEdge: return "MISDECLARED_EDGE";
    case ViolationCode::DanglingRef: return "DANGLING_REF";
    case ViolationCode::LeafWithChildren: return "LEAF_WITH_CHILDREN";
    case ViolationCode::SelfLoop: return "SELF_LOOP";
    }
    return "UNKNOWN";
}

std::optional<ViolationCode> classify_edge(const HierEdge& e, const std::string& declared_on,
                                           const std::map<std::string, std::string>& parents,
                                           const std::set<std::string>& ids)
{
    if (!ids.contains(e.source) || !ids.contains(e.target)) {
        return ViolationCode::DanglingRef;
    }
    if (e.source == e.target) {
        return ViolationCode::SelfLoop;
    }
    auto ps = parents.find(e.source);
    auto pt = parents.find(e.target);
    if (ps != parents.end() && pt != parents.end() && ps->second == pt->second) {
        if (ps->second != declared_on) {
            return ViolationCode::MisdeclaredEdge;
        }
        return std::nullopt;
    }
    return ViolationCode::NonSiblingEdge;
}

std::set<std::string> node_id_set(const HierGraph& g)
{
    std::set<std::string> ids;
    visit_nodes(g.root, [&](const HierNode& n, const HierNode*, const std::string&) { ids.insert(n.id); });
    return ids;
}

std::vector<Violation> validate(const HierGraph& g)
{
    std::vector<Violation> out;
    std::set<std::string> seen;
    visit_nodes(g.root, [&](const HierNode& n, const HierNode*, const std::string& path) {
        if (!seen.insert(n.id).second) {
            out.push_back({ViolationCode::DuplicateId, path + ".id", "duplicate node id `" + n.id + "`", n.id});
        }
        if (is_component(n.kind) && !n.has_payload()) {
            out.push_back({ViolationCode::LeafWithChildren, path + ".children",
                           "component node `" + n.id + "` holds a child list", n.id});
        }
    });

    const auto parents = parent_map(g);
    std::set<std::string> seen_edges;
    visit_edges_in_document_order(g.root, [&](const HierEdge& e, const HierNode& owner, const std::string& path) {
        if (!seen_edges.insert(e.id).second) {
            out.push_back({ViolationCode::DuplicateId, path + ".id", "duplicate edge id `" + e.id + "`", e.id});
        }
        auto code = classify_edge(e, owner.id, parents, seen);
        if (!code) {
            return;
        }
        std::string msg;
        switch (*code) {
        case ViolationCode::DanglingRef:
            msg = "edge `" + e.id + "` references an unknown node";
            break;
        case ViolationCode::SelfLoop:
            msg = "edge `" + e.id + "` connects `" + e.source + "` to itself";
            break;
        case ViolationCode::MisdeclaredEdge:
            msg = "edge `" + e.id + "` is declared on `" + owner.id + "` but its endpoints are children of `" +
                  parents.at(e.source) + "`";
            break;
        default:
            msg = "edge `" + e.id + "` (" + e.source + " -> " + e.target + ") does not connect siblings";
            break;
        }
        out.push_back({*code, path, std::move(msg), e.id});
    });
    return out;
}

nlohmann::ordered_json to_json(const std::vector<Violation>& violations)
{
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
        nlohmann::ordered_json item;
        item["code"] = to_string(v.code);
        item["path"] = v.path;
        item["message"] = v.message;
        out.push_back(std::move(item));
    }
    return out;
}

}  // namespace sysarch
