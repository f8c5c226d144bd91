#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "layout/layout_internal.hpp"
#include "sysarch/error.hpp"

namespace sysarch {

bool segment_hits_rect(Point a, Point b, const Rect& r, double eps)
{
    const double xmin = r.x + eps;
    const double xmax = r.right() - eps;
    const double ymin = r.y + eps;
    const double ymax = r.bottom() - eps;
    if (xmin >= xmax || ymin >= ymax) {
        return false;
    }
    // Liang-Barsky clip of the segment against the shrunken rectangle.
    double t0 = 0.0;
    double t1 = 1.0;
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - xmin, xmax - a.x, a.y - ymin, ymax - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) {
                return false;
            }
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
        if (t0 > t1) {
            return false;
        }
    }
    return true;
}

namespace {

double orient(Point a, Point b, Point c)
{
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

int sign(double v)
{
    constexpr double tol = 1e-9;
    return v > tol ? 1 : (v < -tol ? -1 : 0);
}

}  // namespace

bool segments_cross(Point a, Point b, Point c, Point d)
{
    const int o1 = sign(orient(a, b, c));
    const int o2 = sign(orient(a, b, d));
    const int o3 = sign(orient(c, d, a));
    const int o4 = sign(orient(c, d, b));
    return o1 * o2 < 0 && o3 * o4 < 0;
}

double overlap_area(const Rect& a, const Rect& b)
{
    const double w = std::min(a.right(), b.right()) - std::max(a.x, b.x);
    const double h = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
    return (w > 0 && h > 0) ? w * h : 0.0;
}

namespace {

enum Side { Top, Bottom, Left, Right };

Point anchor(const Rect& r, Side s)
{
    switch (s) {
    case Top:
        return {r.x + r.w / 2, r.y};
    case Bottom:
        return {r.x + r.w / 2, r.bottom()};
    case Left:
        return {r.x, r.y + r.h / 2};
    case Right:
        return {r.right(), r.y + r.h / 2};
    }
    return {};
}

// Obstacles are the sibling boxes other than the edge's endpoints; they must be
// passed with clearance. The endpoint boxes themselves may only be touched.
struct Obstacles {
    std::vector<Rect> others;
    Rect source;
    Rect target;
    double clearance = 0;
};

int path_hits(const std::vector<Point>& path, const Obstacles& obs)
{
    int hits = 0;
    auto hit = [&](const Rect& r, double eps) {
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            if (segment_hits_rect(path[i], path[i + 1], r, eps)) {
                return true;
            }
        }
        return false;
    };
    for (const auto& r : obs.others) {
        hits += hit(r, -obs.clearance) ? 1 : 0;
    }
    hits += hit(obs.source, 1e-6) ? 1 : 0;
    hits += hit(obs.target, 1e-6) ? 1 : 0;
    return hits;
}

double path_length(const std::vector<Point>& path)
{
    double len = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        len += std::hypot(path[i + 1].x - path[i].x, path[i + 1].y - path[i].y);
    }
    return len;
}

bool same_point(Point a, Point b)
{
    return std::abs(a.x - b.x) <= 1e-9 && std::abs(a.y - b.y) <= 1e-9;
}

// Drops repeated points and interior points of straight runs.
std::vector<Point> simplify(const std::vector<Point>& path)
{
    std::vector<Point> out;
    for (const auto& p : path) {
        if (!out.empty() && same_point(out.back(), p)) {
            continue;
        }
        if (out.size() >= 2) {
            const Point a = out[out.size() - 2];
            const Point b = out.back();
            if (std::abs((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)) <= 1e-9 &&
                (b.x - a.x) * (p.x - b.x) + (b.y - a.y) * (p.y - b.y) >= 0) {
                out.back() = p;
                continue;
            }
        }
        out.push_back(p);
    }
    return out;
}

// Bend-penalised shortest orthogonal path over the channel grid of the container.
std::vector<Point> grid_route(const Rect& container, const Obstacles& obs, std::vector<double> xs,
                              std::vector<double> ys, const LayoutStyle& style)
{
    auto uniq = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end(), [](double a, double b) { return std::abs(a - b) <= 1e-9; }), v.end());
    };
    uniq(xs);
    uniq(ys);
    const std::size_t nx = xs.size();
    const std::size_t ny = ys.size();
    auto free_point = [&](Point p) {
        if (p.x < container.x || p.x > container.right() || p.y < container.y || p.y > container.bottom()) {
            return false;
        }
        auto strictly_inside = [&](const Rect& r, double grow) {
            return p.x > r.x - grow && p.x < r.right() + grow && p.y > r.y - grow && p.y < r.bottom() + grow;
        };
        for (const auto& r : obs.others) {
            if (strictly_inside(r, obs.clearance)) {
                return false;
            }
        }
        return !strictly_inside(obs.source, -1e-6) && !strictly_inside(obs.target, -1e-6);
    };
    auto clean = [&](Point a, Point b) { return path_hits({a, b}, obs) == 0; };

    const auto index = [&](std::size_t i, std::size_t j, int dir) { return ((j * nx + i) << 2) | static_cast<std::size_t>(dir); };
    const std::size_t states = nx * ny * 4;
    std::vector<double> dist(states, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> prev(states, std::numeric_limits<std::size_t>::max());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

    auto locate = [&](Point p) -> std::pair<std::size_t, std::size_t> {
        const auto ix = std::lower_bound(xs.begin(), xs.end(), p.x - 1e-9) - xs.begin();
        const auto iy = std::lower_bound(ys.begin(), ys.end(), p.y - 1e-9) - ys.begin();
        return {static_cast<std::size_t>(ix), static_cast<std::size_t>(iy)};
    };
    std::vector<bool> goal(nx * ny, false);
    for (Side side : {Top, Bottom, Left, Right}) {
        const auto [i, j] = locate(anchor(obs.source, side));
        for (int d = 0; d < 4; ++d) {
            dist[index(i, j, d)] = 0;
            queue.push({0.0, index(i, j, d)});
        }
        const auto [ti, tj] = locate(anchor(obs.target, side));
        goal[tj * nx + ti] = true;
    }
    const double bend = style.gap * 2;
    const int di[4] = {1, -1, 0, 0};
    const int dj[4] = {0, 0, 1, -1};
    std::size_t found = std::numeric_limits<std::size_t>::max();
    while (!queue.empty()) {
        const auto [d, s] = queue.top();
        queue.pop();
        if (d > dist[s]) {
            continue;
        }
        const std::size_t cell = s >> 2;
        if (goal[cell]) {
            found = s;
            break;
        }
        const std::size_t i = cell % nx;
        const std::size_t j = cell / nx;
        const Point here{xs[i], ys[j]};
        for (int dir = 0; dir < 4; ++dir) {
            const long ni = static_cast<long>(i) + di[dir];
            const long nj = static_cast<long>(j) + dj[dir];
            if (ni < 0 || nj < 0 || ni >= static_cast<long>(nx) || nj >= static_cast<long>(ny)) {
                continue;
            }
            const Point there{xs[static_cast<std::size_t>(ni)], ys[static_cast<std::size_t>(nj)]};
            if (!free_point(there) || !clean(here, there)) {
                continue;
            }
            const bool turning = d > 0 && static_cast<int>(s & 3) != dir;
            const double nd = d + std::hypot(there.x - here.x, there.y - here.y) + (turning ? bend : 0.0);
            const std::size_t ns = index(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj), dir);
            if (nd < dist[ns] - 1e-9) {
                dist[ns] = nd;
                prev[ns] = s;
                queue.push({nd, ns});
            }
        }
    }
    if (found == std::numeric_limits<std::size_t>::max()) {
        return {};
    }
    std::vector<Point> path;
    for (std::size_t s = found; s != std::numeric_limits<std::size_t>::max(); s = prev[s]) {
        const std::size_t cell = s >> 2;
        path.push_back({xs[cell % nx], ys[cell / nx]});
    }
    std::reverse(path.begin(), path.end());
    return simplify(path);
}

std::vector<Point> route_one(const Rect& s, const Rect& t, const Rect& container, double header,
                             const std::vector<Rect>& siblings, const LayoutStyle& style)
{
    Obstacles obs{{}, s, t, style.gap / 4};
    for (const auto& r : siblings) {
        if (!(r == s) && !(r == t)) {
            obs.others.push_back(r);
        }
    }

    // 1. Straight segment between the closest pair of side midpoints that is unobstructed.
    struct Straight {
        double dist;
        std::vector<Point> path;
    };
    std::vector<Straight> straight;
    for (Side a : {Top, Bottom, Left, Right}) {
        for (Side b : {Top, Bottom, Left, Right}) {
            const Point p = anchor(s, a);
            const Point q = anchor(t, b);
            straight.push_back({std::hypot(q.x - p.x, q.y - p.y), {p, q}});
        }
    }
    std::stable_sort(straight.begin(), straight.end(),
                     [](const Straight& x, const Straight& y) { return x.dist < y.dist; });
    for (const auto& c : straight) {
        if (path_hits(c.path, obs) == 0) {
            return c.path;
        }
    }

    // 2. Three-segment orthogonal detours through the free channels of the container.
    const double pad = style.container_padding;
    std::vector<double> xs{container.x + pad / 2, container.right() - pad / 2};
    std::vector<double> ys{container.y + header - style.gap / 2, container.bottom() - pad / 2};
    for (const auto& r : siblings) {
        xs.push_back(r.x - style.gap / 2);
        xs.push_back(r.right() + style.gap / 2);
        ys.push_back(r.y - style.gap / 2);
        ys.push_back(r.bottom() + style.gap / 2);
    }
    auto inside_x = [&](double x) { return x > container.x && x < container.right(); };
    auto inside_y = [&](double y) { return y > container.y && y < container.bottom(); };

    std::vector<Point> best;
    double best_len = std::numeric_limits<double>::infinity();
    auto consider = [&](const std::vector<Point>& candidate) {
        const std::vector<Point> path = simplify(candidate);
        const double len = path_length(path);
        if (len < best_len - 1e-9 && path_hits(path, obs) == 0) {
            best = path;
            best_len = len;
        }
    };
    for (Side a : {Left, Right}) {
        for (Side b : {Left, Right}) {
            const Point p = anchor(s, a);
            const Point q = anchor(t, b);
            for (double c : xs) {
                if (inside_x(c)) {
                    consider({p, {c, p.y}, {c, q.y}, q});
                }
            }
        }
    }
    for (Side a : {Top, Bottom}) {
        for (Side b : {Top, Bottom}) {
            const Point p = anchor(s, a);
            const Point q = anchor(t, b);
            for (double c : ys) {
                if (inside_y(c)) {
                    consider({p, {p.x, c}, {q.x, c}, q});
                }
            }
        }
    }
    if (!best.empty()) {
        return best;
    }

    // 3. Any orthogonal path through the channel grid.
    for (Side side : {Top, Bottom, Left, Right}) {
        for (const Rect& r : {s, t}) {
            const Point p = anchor(r, side);
            xs.push_back(p.x);
            ys.push_back(p.y);
        }
    }
    std::vector<Point> routed = grid_route(container, obs, xs, ys, style);
    if (!routed.empty()) {
        return routed;
    }
    // Nothing clean exists: keep the shortest straight segment.
    return straight.front().path;
}

void route_node(const HierNode& node, LayoutGeometry& geom, const LayoutStyle& style)
{
    if (node.has_payload()) {
        return;
    }
    for (const auto& child : node.child_nodes()) {
        route_node(child, geom, style);
    }
    if (node.edges.empty()) {
        return;
    }
    std::vector<Rect> obstacles;
    std::map<std::string, Rect> siblings;
    for (const auto& child : node.child_nodes()) {
        obstacles.push_back(geom.node_rects.at(child.id));
        siblings[child.id] = geom.node_rects.at(child.id);
    }
    const Rect container = geom.node_rects.at(node.id);
    const double header = geom.header_heights.contains(node.id) ? geom.header_heights.at(node.id) : 0.0;
    for (const auto& e : node.edges) {
        auto s = siblings.find(e.source);
        auto t = siblings.find(e.target);
        if (s == siblings.end() || t == siblings.end() || e.source == e.target) {
            throw Error(ErrorCode::InvalidConfig, "edge `" + e.id + "` is not between two children of `" + node.id +
                                                      "`; regularize the graph before layout");
        }
        geom.edge_paths[e.id] = route_one(s->second, t->second, container, header, obstacles, style);
    }
}

}  // namespace

void route_edges(const HierGraph& g, LayoutGeometry& geom, const LayoutStyle& style)
{
    geom.edge_paths.clear();
    route_node(g.root, geom, style);
}

}  // namespace sysarch
