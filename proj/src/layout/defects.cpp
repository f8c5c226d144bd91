#include <algorithm>

#include "layout/layout_internal.hpp"

namespace sysarch {

namespace {

using Segment = std::pair<Point, Point>;

// Flattened view of the geometry so both kernels walk the same arrays.
struct DefectInput {
    std::vector<std::vector<Segment>> edge_segments;
    std::vector<std::vector<Rect>> edge_obstacles;  // siblings of the endpoints, endpoints excluded
    std::vector<std::pair<Rect, Rect>> sibling_pairs;
    std::vector<std::pair<Rect, Rect>> containment;  // (child, parent)
    int overflows = 0;
};

int count_overflow(const HierNode& node, const LayoutGeometry& geom, const LayoutStyle& style)
{
    const Rect& r = geom.node_rects.at(node.id);
    const auto& lines = geom.text_lines.at(node.id);
    std::size_t widest = 0;
    for (const auto& l : lines) {
        widest = std::max(widest, text_length(l));
    }
    const double text_w = static_cast<double>(widest) * style.char_width;
    const double text_h = static_cast<double>(lines.size()) * style.line_height;
    constexpr double tol = 1e-6;
    if (auto header = geom.header_heights.find(node.id); header != geom.header_heights.end()) {
        const bool fits = text_w + 2 * style.text_padding <= r.w + tol &&
                          text_h + style.text_padding <= header->second + tol;
        return fits ? 0 : 1;
    }
    double room_w = r.w - 2 * style.text_padding;
    if (auto icon = geom.icon_slots.find(node.id); icon != geom.icon_slots.end()) {
        room_w -= icon->second.rect.w + style.text_padding;
    }
    const bool fits = text_w <= room_w + tol && text_h + 2 * style.text_padding <= r.h + tol;
    return fits ? 0 : 1;
}

void collect(const HierNode& node, const LayoutGeometry& geom, const LayoutStyle& style, DefectInput& in)
{
    in.overflows += count_overflow(node, geom, style);
    if (node.has_payload()) {
        return;
    }
    const auto& kids = node.child_nodes();
    const Rect& parent = geom.node_rects.at(node.id);
    for (std::size_t i = 0; i < kids.size(); ++i) {
        const Rect& a = geom.node_rects.at(kids[i].id);
        in.containment.emplace_back(a, parent);
        for (std::size_t j = i + 1; j < kids.size(); ++j) {
            in.sibling_pairs.emplace_back(a, geom.node_rects.at(kids[j].id));
        }
    }
    for (const auto& e : node.edges) {
        auto it = geom.edge_paths.find(e.id);
        if (it == geom.edge_paths.end()) {
            continue;
        }
        std::vector<Segment> segs;
        for (std::size_t k = 0; k + 1 < it->second.size(); ++k) {
            segs.emplace_back(it->second[k], it->second[k + 1]);
        }
        std::vector<Rect> obstacles;
        for (const auto& kid : kids) {
            if (kid.id != e.source && kid.id != e.target) {
                obstacles.push_back(geom.node_rects.at(kid.id));
            }
        }
        in.edge_segments.push_back(std::move(segs));
        in.edge_obstacles.push_back(std::move(obstacles));
    }
    for (const auto& kid : kids) {
        collect(kid, geom, style, in);
    }
}

bool paths_cross(const std::vector<Segment>& a, const std::vector<Segment>& b)
{
    for (const auto& [p, q] : a) {
        for (const auto& [r, s] : b) {
            if (segments_cross(p, q, r, s)) {
                return true;
            }
        }
    }
    return false;
}

int box_hits(const std::vector<Segment>& segs, const std::vector<Rect>& obstacles)
{
    int hits = 0;
    for (const auto& r : obstacles) {
        for (const auto& [p, q] : segs) {
            if (segment_hits_rect(p, q, r)) {
                ++hits;
                break;
            }
        }
    }
    return hits;
}

bool contained(const Rect& child, const Rect& parent, double pad)
{
    constexpr double tol = 1e-6;
    return child.x >= parent.x + pad - tol && child.y >= parent.y + pad - tol &&
           child.right() <= parent.right() - pad + tol && child.bottom() <= parent.bottom() - pad + tol;
}

}  // namespace

DefectCounts count_defects_serial(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style)
{
    DefectInput in;
    collect(g.root, geom, style, in);
    DefectCounts c;
    const std::size_t n = in.edge_segments.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            c.crossings += paths_cross(in.edge_segments[i], in.edge_segments[j]) ? 1 : 0;
        }
        c.crossings += box_hits(in.edge_segments[i], in.edge_obstacles[i]);
    }
    for (const auto& [a, b] : in.sibling_pairs) {
        c.overlaps += overlap_area(a, b) > 1e-9 ? 1 : 0;
    }
    for (const auto& [child, parent] : in.containment) {
        c.overlaps += contained(child, parent, style.container_padding) ? 0 : 1;
    }
    c.overflows = in.overflows;
    return c;
}

DefectCounts count_defects_parallel(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style)
{
    DefectInput in;
    collect(g.root, geom, style, in);
    const long n = static_cast<long>(in.edge_segments.size());
    const long pairs = static_cast<long>(in.sibling_pairs.size());
    const long nest = static_cast<long>(in.containment.size());
    int crossings = 0;
    int overlaps = 0;
#if defined(SYSARCH_HAVE_OPENMP)
#pragma omp parallel for schedule(dynamic, 4) reduction(+ : crossings)
#endif
    for (long i = 0; i < n; ++i) {
        int local = 0;
        for (long j = i + 1; j < n; ++j) {
            local += paths_cross(in.edge_segments[i], in.edge_segments[j]) ? 1 : 0;
        }
        local += box_hits(in.edge_segments[i], in.edge_obstacles[i]);
        crossings += local;
    }
#if defined(SYSARCH_HAVE_OPENMP)
#pragma omp parallel for schedule(static) reduction(+ : overlaps)
#endif
    for (long k = 0; k < pairs; ++k) {
        overlaps += overlap_area(in.sibling_pairs[k].first, in.sibling_pairs[k].second) > 1e-9 ? 1 : 0;
    }
#if defined(SYSARCH_HAVE_OPENMP)
#pragma omp parallel for schedule(static) reduction(+ : overlaps)
#endif
    for (long k = 0; k < nest; ++k) {
        overlaps += contained(in.containment[k].first, in.containment[k].second, style.container_padding) ? 0 : 1;
    }
    return {crossings, overlaps, in.overflows};
}

}  // namespace sysarch
