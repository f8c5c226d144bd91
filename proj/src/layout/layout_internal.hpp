#pragma once

#include <map>
#include <string>
#include <vector>

#include "sysarch/layout.hpp"

namespace sysarch::detail {

/// Result of packing one node relative to its own top-left corner.
struct PackedNode {
    Size size;
    std::vector<Point> child_offsets;  // one per child, document order
    std::vector<std::string> lines;    // leaf body or container title
    double header = 0;                 // title band height (containers only)
    bool leaf = true;
    bool icon = false;
};

/// Packs `node` and its subtree bottom-up, filling `out` keyed by node id.
Size pack_subtree(const HierNode& node, const LayoutStyle& style, std::map<std::string, PackedNode>& out);

/// Code points that fit on one line of a box of inner width `w`.
std::size_t chars_for_width(double w, const LayoutStyle& style);

}  // namespace sysarch::detail
