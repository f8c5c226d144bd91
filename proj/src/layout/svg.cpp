#include <string>

#include "layout/layout_internal.hpp"
#include "sysarch/util.hpp"

namespace sysarch {

namespace {

std::string num(double v)
{
    return format_fixed(v, 2);
}

std::string xml_escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        case '\'':
            out += "&apos;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

struct Palette {
    const char* fill;
    const char* stroke;
};

Palette palette(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Module:
        return {"#eaf2fb", "#4a78b0"};
    case NodeKind::Tool:
        return {"#fdf3e1", "#c08a2e"};
    case NodeKind::ComponentText:
        return {"#ffffff", "#8a8a8a"};
    case NodeKind::ComponentIcon:
        return {"#f3f0fa", "#7a5fb0"};
    case NodeKind::ComponentImage:
        return {"#eef7ee", "#4f9a5a"};
    }
    return {"#ffffff", "#000000"};
}

void emit_lines(std::string& out, const std::vector<std::string>& lines, double x, double first_baseline,
                const LayoutStyle& style, bool bold)
{
    if (lines.empty()) {
        return;
    }
    out += "    <text x=\"" + num(x) + "\" y=\"" + num(first_baseline) + "\" font-size=\"" + num(style.font_size) + "\"";
    if (bold) {
        out += " font-weight=\"bold\"";
    }
    out += ">";
    for (std::size_t i = 0; i < lines.size(); ++i) {
        out += "<tspan x=\"" + num(x) + "\" dy=\"" + num(i == 0 ? 0.0 : style.line_height) + "\">" +
               xml_escape(lines[i]) + "</tspan>";
    }
    out += "</text>\n";
}

void emit_node(std::string& out, const HierNode& node, const LayoutGeometry& geom, const LayoutStyle& style)
{
    const Rect& r = geom.node_rects.at(node.id);
    const Palette pal = palette(node.kind);
    const bool container = geom.header_heights.contains(node.id);
    out += "  <g class=\"node\" id=\"node-" + xml_escape(node.id) + "\" data-kind=\"" +
           std::string(to_string(node.kind)) + "\">\n";
    out += "    <rect x=\"" + num(r.x) + "\" y=\"" + num(r.y) + "\" width=\"" + num(r.w) + "\" height=\"" + num(r.h) +
           "\" rx=\"6\" fill=\"" + pal.fill + "\" stroke=\"" + pal.stroke + "\" stroke-width=\"1.2\"/>\n";
    const auto& lines = geom.text_lines.at(node.id);
    const double ascent = style.line_height * 0.75;
    if (container) {
        emit_lines(out, lines, r.x + style.text_padding, r.y + style.text_padding + ascent, style, true);
    } else {
        double x = r.x + style.text_padding;
        if (auto icon = geom.icon_slots.find(node.id); icon != geom.icon_slots.end()) {
            const Rect& ir = icon->second.rect;
            if (!icon->second.href.empty()) {
                out += "    <image x=\"" + num(ir.x) + "\" y=\"" + num(ir.y) + "\" width=\"" + num(ir.w) +
                       "\" height=\"" + num(ir.h) + "\" xlink:href=\"" + xml_escape(icon->second.href) + "\"/>\n";
            } else {
                const double cx = ir.x + ir.w / 2;
                const double cy = ir.y + ir.h / 2;
                out += "    <circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(ir.w / 2) +
                       "\" fill=\"" + pal.stroke + "\"/>\n";
                out += "    <text x=\"" + num(cx) + "\" y=\"" + num(cy + style.font_size * 0.35) +
                       "\" font-size=\"" + num(style.font_size) +
                       "\" text-anchor=\"middle\" fill=\"#ffffff\" font-weight=\"bold\">" +
                       xml_escape(icon->second.glyph) + "</text>\n";
            }
            x = ir.right() + style.text_padding;
        }
        const double block = static_cast<double>(lines.size()) * style.line_height;
        emit_lines(out, lines, x, r.y + (r.h - block) / 2 + ascent, style, false);
    }
    out += "  </g>\n";
    if (!node.has_payload()) {
        for (const auto& child : node.child_nodes()) {
            emit_node(out, child, geom, style);
        }
    }
}

void emit_edges(std::string& out, const HierNode& node, const LayoutGeometry& geom, const LayoutStyle& style)
{
    if (!node.has_payload()) {
        for (const auto& child : node.child_nodes()) {
            emit_edges(out, child, geom, style);
        }
    }
    for (const auto& e : node.edges) {
        auto it = geom.edge_paths.find(e.id);
        if (it == geom.edge_paths.end() || it->second.size() < 2) {
            continue;
        }
        const auto& pts = it->second;
        std::string d;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            d += (i == 0 ? "M" : " L") + num(pts[i].x) + "," + num(pts[i].y);
        }
        out += "  <g class=\"edge\" id=\"edge-" + xml_escape(e.id) + "\">\n";
        out += "    <path d=\"" + d + "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1.2\" marker-end=\"url(#arrow)\"/>\n";
        if (!e.name.empty()) {
            // Label at the midpoint of the middle segment, nudged above the line.
            const std::size_t mid = (pts.size() - 1) / 2;
            const double x = (pts[mid].x + pts[mid + 1].x) / 2;
            const double y = (pts[mid].y + pts[mid + 1].y) / 2 - 4;
            out += "    <text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(style.font_size * 0.85) +
                   "\" text-anchor=\"middle\" fill=\"#333333\">" + xml_escape(e.name) + "</text>\n";
        }
        out += "  </g>\n";
    }
}

}  // namespace

std::string emit_svg(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style)
{
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\" "
           "width=\"" + num(geom.canvas.w) + "\" height=\"" + num(geom.canvas.h) + "\" viewBox=\"0 0 " +
           num(geom.canvas.w) + " " + num(geom.canvas.h) + "\" font-family=\"DejaVu Sans Mono, Menlo, Consolas, monospace\">\n";
    out += "  <defs>\n";
    out += "    <marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" markerWidth=\"7\" markerHeight=\"7\" "
           "orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#444444\"/></marker>\n";
    out += "  </defs>\n";
    out += "  <rect x=\"0\" y=\"0\" width=\"" + num(geom.canvas.w) + "\" height=\"" + num(geom.canvas.h) +
           "\" fill=\"#ffffff\"/>\n";
    emit_node(out, g.root, geom, style);
    emit_edges(out, g.root, geom, style);
    out += "</svg>\n";
    return out;
}

}  // namespace sysarch
