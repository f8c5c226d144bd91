#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "layout/layout_internal.hpp"

namespace sysarch {

namespace detail {

namespace {

struct ShelfResult {
    double content_w = 0;
    double content_h = 0;
    std::vector<Point> offsets;
};

// Left-to-right rows, wrapping once a row would exceed `row_limit`.
ShelfResult shelf(const std::vector<Size>& sizes, double row_limit, double gap)
{
    ShelfResult r;
    double x = 0;
    double y = 0;
    double row_h = 0;
    for (const auto& s : sizes) {
        if (x > 0 && x + s.w > row_limit + 1e-9) {
            y += row_h + gap;
            x = 0;
            row_h = 0;
        }
        r.offsets.push_back({x, y});
        r.content_w = std::max(r.content_w, x + s.w);
        row_h = std::max(row_h, s.h);
        x += s.w + gap;
    }
    r.content_h = y + row_h;
    return r;
}

struct ContainerShape {
    Size size;
    double header = 0;
    std::vector<std::string> title;
};

ContainerShape shape_container(const std::string& name, double content_w, double content_h,
                               const LayoutStyle& style)
{
    const std::size_t title_len = text_length(name);
    const double title_min =
        static_cast<double>(std::min(title_len, style.chars_per_line)) * style.char_width + 2 * style.text_padding;
    ContainerShape c;
    c.size.w = std::max({content_w + 2 * style.container_padding, title_min, style.min_box_w});
    c.title = wrap_text(name, chars_for_width(c.size.w, style));
    // Title lines sit between two text paddings so routing channels above the
    // first row of children stay clear of the title.
    c.header = std::max(style.container_padding,
                        2 * style.text_padding + static_cast<double>(c.title.size()) * style.line_height);
    c.size.h = std::max(c.header + content_h + style.container_padding, style.min_box_h);
    return c;
}

}  // namespace

Size pack_subtree(const HierNode& node, const LayoutStyle& style, std::map<std::string, PackedNode>& out)
{
    PackedNode p;
    if (node.has_payload() || node.child_nodes().empty()) {
        p.leaf = true;
        p.icon = node.kind == NodeKind::ComponentIcon;
        const std::string text = display_text(node);
        p.size = leaf_size(text, p.icon, style);
        p.lines = wrap_text(text, style.chars_per_line);
        out[node.id] = p;
        return p.size;
    }

    p.leaf = false;
    std::vector<Size> sizes;
    for (const auto& child : node.child_nodes()) {
        sizes.push_back(pack_subtree(child, style, out));
    }

    // Candidate row limits: every prefix of the children placed on one row.
    std::vector<double> limits;
    double widest = 0;
    for (const auto& s : sizes) {
        widest = std::max(widest, s.w);
    }
    double prefix = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        prefix += sizes[i].w + (i > 0 ? style.gap : 0.0);
        limits.push_back(std::max(prefix, widest));
    }

    double best_score = std::numeric_limits<double>::infinity();
    for (double limit : limits) {
        const ShelfResult r = shelf(sizes, limit, style.gap);
        const ContainerShape c = shape_container(node.name, r.content_w, r.content_h, style);
        const double ratio = c.size.w / c.size.h;
        const double skew = std::max(ratio / style.aspect, style.aspect / ratio);
        const double score = c.size.w * c.size.h * std::sqrt(skew);
        if (score < best_score - 1e-9) {
            best_score = score;
            p.size = c.size;
            p.header = c.header;
            p.lines = c.title;
            p.child_offsets.clear();
            for (const auto& o : r.offsets) {
                p.child_offsets.push_back({o.x + style.container_padding, o.y + c.header});
            }
        }
    }
    out[node.id] = p;
    return p.size;
}

}  // namespace detail

namespace {

void place(const HierNode& node, Point at, const std::map<std::string, detail::PackedNode>& packed,
           const LayoutStyle& style, LayoutGeometry& geom)
{
    const auto& p = packed.at(node.id);
    const Rect rect{at.x, at.y, p.size.w, p.size.h};
    geom.node_rects[node.id] = rect;
    geom.text_lines[node.id] = p.lines;
    if (!p.leaf) {
        geom.header_heights[node.id] = p.header;
    }
    if (p.icon) {
        IconSlot slot;
        slot.rect = {rect.x + style.text_padding, rect.y + (rect.h - style.icon_size) / 2, style.icon_size,
                     style.icon_size};
        const std::string& source = node.name.empty() ? node.payload() : node.name;
        if (!source.empty()) {
            std::size_t len = 1;
            while (len < source.size() && (static_cast<unsigned char>(source[len]) & 0xC0) == 0x80) {
                ++len;
            }
            slot.glyph = source.substr(0, len);
            if (slot.glyph.size() == 1) {
                slot.glyph[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(slot.glyph[0])));
            }
        }
        if (!style.asset_dir.empty() && node.has_payload() && !node.payload().empty() &&
            std::filesystem::is_regular_file(std::filesystem::path(style.asset_dir) / node.payload())) {
            slot.href = node.payload();
        }
        geom.icon_slots[node.id] = slot;
    }
    if (!p.leaf) {
        const auto& kids = node.child_nodes();
        for (std::size_t i = 0; i < kids.size(); ++i) {
            place(kids[i], {at.x + p.child_offsets[i].x, at.y + p.child_offsets[i].y}, packed, style, geom);
        }
    }
}

}  // namespace

LayoutGeometry pack(const HierGraph& g, const LayoutStyle& style)
{
    std::map<std::string, detail::PackedNode> packed;
    const Size root = detail::pack_subtree(g.root, style, packed);
    LayoutGeometry geom;
    geom.canvas = {0, 0, root.w + 2 * style.margin, root.h + 2 * style.margin};
    place(g.root, {style.margin, style.margin}, packed, style, geom);
    return geom;
}

LayoutGeometry layout_graph(const HierGraph& g, const LayoutStyle& style)
{
    LayoutGeometry geom = pack(g, style);
    route_edges(g, geom, style);
    return geom;
}

}  // namespace sysarch
