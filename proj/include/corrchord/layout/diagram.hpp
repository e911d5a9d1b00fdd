#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/core/types.hpp"
#include "corrchord/layout/bundle.hpp"
#include "corrchord/layout/octree.hpp"

namespace corrchord {

/// One brick (or refined child) shown as a chord node.
struct NodeInput {
    VoxelBox box;
    std::vector<double> spread;  ///< per diagram variable
    std::string label;
};

/// Estimated dependence between two nodes for one variable.
struct PairValue {
    std::int64_t a = 0;
    std::int64_t b = 0;
    int variable = 0;
    std::optional<double> value;  ///< signed measure; empty = undefined or pending
    double strength = 0.0;        ///< |r| for PPMCC, value for KMI
    bool pending = false;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct DiagramOptions {
    MeasureKind measure = MeasureKind::Ppmcc;
    std::vector<std::string> variables{"v"};
    std::optional<Range> value_filter;     ///< on strength
    std::optional<Range> distance_filter;  ///< brick-center distance
    std::optional<Range> color_range;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    double beta = 0.85;
    int samples = 64;
};

struct Rgb {
    int r = 0, g = 0, b = 0;
};

inline std::string to_hex(Rgb c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
    return buf;
}

struct Palette {
    Rgb background{235, 235, 235};
    std::vector<Rgb> keys{{200, 30, 30}, {30, 80, 200}, {30, 150, 60}};  ///< per variable
    Rgb first_pick{220, 40, 40};
    Rgb second_pick{40, 90, 220};
};

inline Rgb mix(Rgb a, Rgb b, double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto f = [t](int x, int y) { return static_cast<int>(std::lround(double(x) + t * double(y - x))); };
    return {f(a.r, b.r), f(a.g, b.g), f(a.b, b.b)};
}

enum class EdgeState { Ok, Pending };

struct DiagramNode {
    int id = 0;
    std::string label;
    double angle = 0.0;
    double x = 0.0, y = 0.0;
    VoxelBox box;
    std::vector<double> spread;
    int side = 0;  ///< 0 full circle, 1 bottom (first pick), 2 top (second pick)
};

struct DiagramEdge {
    int a = 0, b = 0;
    int variable = 0;
    std::optional<double> value;
    double strength = 0.0;
    EdgeState state = EdgeState::Ok;
    int rank = 0;
    std::string color;
    std::vector<int> path;  ///< tree nodes used as control points
    std::vector<Point2d> polyline;
};

struct RingSegment {
    int node = 0;
    int variable = 0;
    double start = 0.0, end = 0.0;
    double spread = 0.0;
    double level = 0.0;  ///< spread / max spread of that variable
};

struct DiagramModel {
    std::string kind = "context";
    MeasureKind measure = MeasureKind::Ppmcc;
    std::vector<std::string> variables;
    std::vector<DiagramNode> nodes;
    std::vector<DiagramEdge> edges;  ///< in rank (draw) order
    std::vector<RingSegment> ring;
    std::optional<Range> value_filter, distance_filter;
    Range color_range;
    std::optional<int> first_pick, second_pick;  ///< context node ids selected for the focus view
    std::int64_t candidate_edges = 0;
    ChordTree tree;
};

inline void check_range(const std::optional<Range>& r, const char* what) {
    if (!r) return;
    if (!(r->lo <= r->hi) || !std::isfinite(r->lo) || !std::isfinite(r->hi))
        throw RangeError(std::string(what) + " filter must satisfy lo <= hi");
}

/// Euclidean distance between box centers, scaled by grid spacing.
inline double center_distance(const VoxelBox& a, const VoxelBox& b, const std::array<double, 3>& spacing) {
    const auto ca = a.center(), cb = b.center();
    double s = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = (ca[i] - cb[i]) * spacing[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace detail {

inline bool in_range(const std::optional<Range>& r, double v) { return !r || (v >= r->lo && v <= r->hi); }

/// Common tail of context and focus construction: filter, rank, color, bundle.
inline void finish_diagram(DiagramModel& m, const std::vector<NodeInput>& in, const std::vector<PairValue>& pairs, const DiagramOptions& opt,
                           const Palette& pal, double half_width) {
    check_range(opt.value_filter, "value");
    check_range(opt.distance_filter, "distance");
    check_range(opt.color_range, "color");
    if (opt.beta < 0.0 || opt.beta > 1.0) throw RangeError("bundling strength must be in [0, 1]");
    m.measure = opt.measure;
    m.variables = opt.variables;
    m.value_filter = opt.value_filter;
    m.distance_filter = opt.distance_filter;
    m.candidate_edges = static_cast<std::int64_t>(pairs.size());
    const auto n = static_cast<std::int64_t>(in.size());

    double max_strength = 0.0;
    for (const auto& p : pairs)
        if (!p.pending && p.value) max_strength = std::max(max_strength, p.strength);
    if (opt.color_range) m.color_range = *opt.color_range;
    else if (opt.value_filter) m.color_range = *opt.value_filter;
    else m.color_range = {0.0, opt.measure == MeasureKind::Ppmcc ? 1.0 : std::max(max_strength, 1e-12)};

    for (const auto& p : pairs) {
        if (p.a < 0 || p.b < 0 || p.a >= n || p.b >= n) throw RangeError("diagram: pair refers to an unknown node");
        if (p.a == p.b) continue;  // shown as node highlight, not as a chord
        if (p.variable < 0 || p.variable >= static_cast<int>(opt.variables.size())) throw RangeError("diagram: pair has unknown variable");
        if (!detail::in_range(opt.distance_filter, center_distance(in[p.a].box, in[p.b].box, opt.spacing))) continue;
        DiagramEdge e;
        e.a = static_cast<int>(p.a);
        e.b = static_cast<int>(p.b);
        e.variable = p.variable;
        if (p.pending) {
            if (opt.value_filter) continue;
            e.state = EdgeState::Pending;
            e.color = to_hex(pal.background);
        } else {
            if (!p.value) continue;  // undefined measure: no edge
            if (!detail::in_range(opt.value_filter, p.strength)) continue;
            e.value = p.value;
            e.strength = p.strength;
            const auto& key = pal.keys[static_cast<std::size_t>(p.variable) % pal.keys.size()];
            const double w = m.color_range.hi - m.color_range.lo;
            e.color = to_hex(mix(pal.background, key, w > 0 ? (p.strength - m.color_range.lo) / w : 1.0));
        }
        m.edges.push_back(std::move(e));
    }
    // Draw order: pending first, then by increasing strength, ties by node ids.
    std::sort(m.edges.begin(), m.edges.end(), [](const DiagramEdge& x, const DiagramEdge& y) {
        const bool px = x.state == EdgeState::Pending, py = y.state == EdgeState::Pending;
        if (px != py) return px;
        if (x.strength != y.strength) return x.strength < y.strength;
        const auto kx = std::make_tuple(std::min(x.a, x.b), std::max(x.a, x.b), x.variable);
        const auto ky = std::make_tuple(std::min(y.a, y.b), std::max(y.a, y.b), y.variable);
        return kx < ky;
    });
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
        auto& e = m.edges[i];
        e.rank = static_cast<int>(i);
        auto path = bundle_edge(m.tree, e.a, e.b, opt.beta, opt.samples);
        e.path = std::move(path.path);
        e.polyline = std::move(path.polyline);
    }
    // Spread rings, one per variable.
    for (std::size_t v = 0; v < opt.variables.size(); ++v) {
        double mx = 0.0;
        for (const auto& nd : in)
            if (v < nd.spread.size()) mx = std::max(mx, nd.spread[v]);
        for (std::size_t i = 0; i < in.size(); ++i) {
            RingSegment s;
            s.node = static_cast<int>(i);
            s.variable = static_cast<int>(v);
            s.start = m.nodes[i].angle - half_width;
            s.end = m.nodes[i].angle + half_width;
            s.spread = v < in[i].spread.size() ? std::max(0.0, in[i].spread[v]) : 0.0;
            s.level = mx > 0 ? s.spread / mx : 0.0;
            m.ring.push_back(s);
        }
    }
}

inline DiagramNode make_node(const ChordTree& t, std::size_t i, const NodeInput& in, int side) {
    const auto& leaf = t.nodes[t.leaves[i]];
    DiagramNode n;
    n.id = static_cast<int>(i);
    n.label = in.label;
    n.angle = leaf.angle;
    n.x = leaf.x;
    n.y = leaf.y;
    n.box = in.box;
    n.spread = in.spread;
    n.side = side;
    return n;
}

} // namespace detail

/**
 * Context chord diagram over all bricks of a layout. `bricks` are in z-order
 * (node i is z-order rank i); `pairs` index into that order.
 */
inline DiagramModel build_context_diagram(const Dims3& bricks_per_axis, const std::vector<NodeInput>& bricks, const std::vector<PairValue>& pairs,
                                          const DiagramOptions& opt, const Palette& pal = {}) {
    if (static_cast<std::int64_t>(bricks.size()) != bricks_per_axis.count()) throw RangeError("context: one node per brick expected");
    DiagramModel m;
    m.kind = "context";
    m.tree = build_octree(bricks_per_axis);
    for (std::size_t i = 0; i < bricks.size(); ++i) m.nodes.push_back(detail::make_node(m.tree, i, bricks[i], 0));
    detail::finish_diagram(m, bricks, pairs, opt, pal, std::numbers::pi / double(std::max<std::size_t>(1, bricks.size())));
    return m;
}

/**
 * Focus diagram: children of the first pick (A) on the bottom semicircle and
 * of the second pick (B) on the top. Nodes 0..nA-1 are A's children, nA.. are
 * B's; pairs should cover the A x B cross product.
 */
inline DiagramModel build_focus_diagram(const Dims3& child_grid_a, const std::vector<NodeInput>& children_a, const Dims3& child_grid_b,
                                        const std::vector<NodeInput>& children_b, const std::vector<PairValue>& pairs, const DiagramOptions& opt,
                                        const Palette& pal = {}) {
    if (static_cast<std::int64_t>(children_a.size()) != child_grid_a.count() || static_cast<std::int64_t>(children_b.size()) != child_grid_b.count())
        throw RangeError("focus: one node per child expected");
    DiagramModel m;
    m.kind = "focus";
    m.tree = build_focus_tree(child_grid_a, child_grid_b);
    std::vector<NodeInput> all(children_a);
    all.insert(all.end(), children_b.begin(), children_b.end());
    for (std::size_t i = 0; i < all.size(); ++i) m.nodes.push_back(detail::make_node(m.tree, i, all[i], i < children_a.size() ? 1 : 2));
    const auto widest = std::max(children_a.size(), children_b.size());
    detail::finish_diagram(m, all, pairs, opt, pal, 0.5 * std::numbers::pi / double(std::max<std::size_t>(1, widest)));
    return m;
}

/// Region (row/column) of an inter-variable matrix.
struct MatrixRegion {
    VoxelBox box;
    std::string label;
    double spread1 = 0.0;  ///< spread of variable 1
    double spread2 = 0.0;
};

struct MatrixCell {
    std::optional<double> value;  ///< signed measure
    double strength = 0.0;
    bool pending = false;
};

/**
 * Inter-variable matrix: cell(row r, col c) holds the dependence between
 * variable 1 at region c and variable 2 at region r, so the two orientations
 * of a region pair sit on opposite sides of the diagonal.
 */
struct MatrixModel {
    MeasureKind measure = MeasureKind::Ppmcc;
    std::string variable1, variable2;
    std::vector<MatrixRegion> regions;
    std::vector<MatrixCell> cells;  ///< row-major n x n
    Range color_range;

    std::size_t size() const noexcept { return regions.size(); }
    const MatrixCell& cell(std::size_t row, std::size_t col) const { return cells.at(row * size() + col); }
};

/// Estimate for variable 1 at region `col` against variable 2 at region `row`.
struct MatrixEstimate {
    std::size_t row = 0;
    std::size_t col = 0;
    std::optional<double> value;
    double strength = 0.0;
    bool pending = false;
};

inline MatrixModel build_matrix(const std::vector<MatrixRegion>& regions, const std::string& variable1, const std::string& variable2,
                                const std::vector<MatrixEstimate>& estimates, MeasureKind measure = MeasureKind::Ppmcc) {
    MatrixModel m;
    m.measure = measure;
    m.variable1 = variable1;
    m.variable2 = variable2;
    m.regions = regions;
    const auto n = regions.size();
    m.cells.assign(n * n, MatrixCell{std::nullopt, 0.0, true});
    double mx = 0.0;
    for (const auto& e : estimates) {
        if (e.row >= n || e.col >= n) throw RangeError("matrix: estimate outside the region list");
        m.cells[e.row * n + e.col] = MatrixCell{e.pending ? std::nullopt : e.value, e.value ? e.strength : 0.0, e.pending};
        if (!e.pending && e.value) mx = std::max(mx, e.strength);
    }
    m.color_range = {0.0, measure == MeasureKind::Ppmcc ? 1.0 : std::max(mx, 1e-12)};
    return m;
}

} // namespace corrchord
