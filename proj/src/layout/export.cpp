#include "layout/layout_internal.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

namespace {

using nlohmann::ordered_json;

double coord(double v)
{
    return round_to(v, 2);
}

ordered_json rect_json(const Rect& r)
{
    return {{"x", coord(r.x)}, {"y", coord(r.y)}, {"w", coord(r.w)}, {"h", coord(r.h)}};
}

void export_nodes(const HierNode& node, const HierNode* parent, const LayoutGeometry& geom, ordered_json& out)
{
    ordered_json n;
    n["id"] = node.id;
    n["kind"] = std::string(to_string(node.kind));
    n["name"] = node.name;
    n["text"] = display_text(node);
    n["rect"] = rect_json(geom.node_rects.at(node.id));
    n["parent"] = parent != nullptr ? ordered_json(parent->id) : ordered_json(nullptr);
    if (auto icon = geom.icon_slots.find(node.id); icon != geom.icon_slots.end()) {
        ordered_json i;
        i["rect"] = rect_json(icon->second.rect);
        i["glyph"] = icon->second.glyph;
        i["href"] = icon->second.href.empty() ? ordered_json(nullptr) : ordered_json(icon->second.href);
        n["icon"] = std::move(i);
    } else {
        n["icon"] = nullptr;
    }
    out.push_back(std::move(n));
    if (!node.has_payload()) {
        for (const auto& child : node.child_nodes()) {
            export_nodes(child, &node, geom, out);
        }
    }
}

void export_edges(const HierNode& node, const LayoutGeometry& geom, ordered_json& out)
{
    if (!node.has_payload()) {
        for (const auto& child : node.child_nodes()) {
            export_edges(child, geom, out);
        }
    }
    for (const auto& e : node.edges) {
        ordered_json je;
        je["id"] = e.id;
        je["name"] = e.name;
        ordered_json points = ordered_json::array();
        if (auto it = geom.edge_paths.find(e.id); it != geom.edge_paths.end()) {
            for (const auto& p : it->second) {
                points.push_back({coord(p.x), coord(p.y)});
            }
        }
        je["points"] = std::move(points);
        je["source"] = e.source;
        je["target"] = e.target;
        out.push_back(std::move(je));
    }
}

}  // namespace

nlohmann::ordered_json export_layout_json(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style)
{
    ordered_json doc;
    doc["version"] = 1;
    doc["units_per_inch"] = style.units_per_inch;
    doc["canvas"] = {{"w", coord(geom.canvas.w)}, {"h", coord(geom.canvas.h)}};
    ordered_json nodes = ordered_json::array();
    export_nodes(g.root, nullptr, geom, nodes);
    doc["nodes"] = std::move(nodes);
    ordered_json edges = ordered_json::array();
    export_edges(g.root, geom, edges);
    doc["edges"] = std::move(edges);
    return doc;
}

}  // namespace sysarch
