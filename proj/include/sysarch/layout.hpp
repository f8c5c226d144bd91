#pragma once

// Steps 6-7: text-driven sizing, bottom-up shelf packing, sibling-edge
// routing, SVG emission and the layout-JSON export consumed by the slide
// exporter.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sysarch/graph.hpp"
#include "sysarch/scorer.hpp"

namespace sysarch {

struct Point {
    double x = 0;
    double y = 0;

    bool operator==(const Point&) const = default;
};

struct Rect {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    [[nodiscard]] double right() const noexcept { return x + w; }
    [[nodiscard]] double bottom() const noexcept { return y + h; }
    [[nodiscard]] double area() const noexcept { return w * h; }
    bool operator==(const Rect&) const = default;
};

struct Size {
    double w = 0;
    double h = 0;

    bool operator==(const Size&) const = default;
};

/// All lengths in abstract units (96 per inch by default).
struct LayoutStyle {
    std::size_t chars_per_line = 24;
    double char_width = 7.0;
    double line_height = 16.0;
    double font_size = 11.0;
    double text_padding = 6.0;
    double min_box_w = 72.0;
    double min_box_h = 32.0;
    double container_padding = 6.0;
    double gap = 10.0;
    double margin = 16.0;
    double icon_size = 20.0;
    double aspect = 16.0 / 9.0;
    double units_per_inch = 96.0;
    // Directory searched for user-supplied icon images named by icon payloads.
    std::string asset_dir;
};

struct IconSlot {
    Rect rect;
    std::string glyph;  // initial letter used by the placeholder
    std::string href;   // user-supplied image, empty for the placeholder
};

struct LayoutGeometry {
    Rect canvas;
    std::map<std::string, Rect> node_rects;
    std::map<std::string, std::vector<Point>> edge_paths;
    std::map<std::string, IconSlot> icon_slots;
    // Wrapped lines drawn inside each node: the body of a leaf or the title of a container.
    std::map<std::string, std::vector<std::string>> text_lines;
    // Height of each container's title band.
    std::map<std::string, double> header_heights;
};

/// Number of UTF-8 code points.
std::size_t text_length(std::string_view text);

/// Greedy word wrap at `chars_per_line` code points; falls back to a hard wrap
/// whenever word wrapping would need more than ceil(len / chars_per_line) lines.
std::vector<std::string> wrap_text(std::string_view text, std::size_t chars_per_line);

/// Text shown inside a node: the payload of a text component (its name when
/// empty), otherwise the node name.
std::string display_text(const HierNode& node);

/// Minimum size of a leaf box for `text`.
Size leaf_size(std::string_view text, bool with_icon, const LayoutStyle& style);

/// Minimum (w, h) per node: leaves from their text, containers from packing
/// their children.
std::map<std::string, Size> size_weights(const HierGraph& g, const LayoutStyle& style = {});

/// Bottom-up shelf packing in document order; row widths are chosen to
/// minimize area under the aspect target. No edge paths yet.
LayoutGeometry pack(const HierGraph& g, const LayoutStyle& style = {});

/// Routes every edge between its endpoint boxes: a straight segment between
/// facing boundary midpoints when no sibling box is in the way, else a
/// three-segment orthogonal detour. Throws InvalidConfig on non-sibling edges.
void route_edges(const HierGraph& g, LayoutGeometry& geom, const LayoutStyle& style = {});

/// pack + route_edges.
LayoutGeometry layout_graph(const HierGraph& g, const LayoutStyle& style = {});

std::string emit_svg(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style = {});

nlohmann::ordered_json export_layout_json(const HierGraph& g, const LayoutGeometry& geom,
                                          const LayoutStyle& style = {});

/// Geometry defects: edge/edge and edge/box crossings, sibling overlaps and
/// containment breaches, text that does not fit its box.
DefectCounts count_defects_serial(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style = {});
DefectCounts count_defects_parallel(const HierGraph& g, const LayoutGeometry& geom, const LayoutStyle& style = {});

// Geometry primitives shared with the tests.
/// True when the segment enters the open interior of `r` (shrunk by `eps`).
bool segment_hits_rect(Point a, Point b, const Rect& r, double eps = 1e-6);
/// Proper crossing of two segments (shared endpoints and touching do not count).
bool segments_cross(Point a, Point b, Point c, Point d);
double overlap_area(const Rect& a, const Rect& b);

}  // namespace sysarch
