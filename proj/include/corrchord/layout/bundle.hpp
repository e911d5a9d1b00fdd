#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/layout/octree.hpp"

namespace corrchord {

using Point2d = std::array<double, 2>;

/// Clamped uniform knot vector for n control points of degree p.
inline std::vector<double> clamped_knots(std::size_t n, int p) {
    const std::size_t m = n + static_cast<std::size_t>(p) + 1;
    std::vector<double> t(m);
    const std::size_t inner = n - static_cast<std::size_t>(p);  // number of spans
    for (std::size_t i = 0; i < m; ++i) {
        if (i <= static_cast<std::size_t>(p)) t[i] = 0.0;
        else if (i >= n) t[i] = 1.0;
        else t[i] = double(i - static_cast<std::size_t>(p)) / double(inner);
    }
    return t;
}

/// De Boor evaluation of a B-spline of degree p at u in [t_p, t_n].
inline Point2d de_boor(const std::vector<Point2d>& ctrl, const std::vector<double>& t, int p, double u) {
    const auto n = ctrl.size();
    // Span k with t[k] <= u < t[k+1]; the end parameter uses the last non-empty span.
    std::size_t k = static_cast<std::size_t>(p);
    while (k + 1 < n && u >= t[k + 1]) ++k;
    std::vector<Point2d> d(static_cast<std::size_t>(p) + 1);
    for (int j = 0; j <= p; ++j) d[j] = ctrl[k - static_cast<std::size_t>(p) + j];
    for (int r = 1; r <= p; ++r)
        for (int j = p; j >= r; --j) {
            const std::size_t i = k - static_cast<std::size_t>(p) + j;
            const double den = t[i + static_cast<std::size_t>(p - r) + 1] - t[i];
            const double a = den > 0.0 ? (u - t[i]) / den : 0.0;
            for (int c = 0; c < 2; ++c) d[j][c] = (1.0 - a) * d[j - 1][c] + a * d[j][c];
        }
    return d[p];
}

/// Clamped B-spline of degree min(3, n-1) sampled at `samples` uniform parameters.
inline std::vector<Point2d> bspline_polyline(const std::vector<Point2d>& ctrl, int samples = 64) {
    if (ctrl.empty()) throw RangeError("bspline: no control points");
    if (samples < 2) throw RangeError("bspline: need at least 2 samples");
    if (ctrl.size() == 1) return std::vector<Point2d>(static_cast<std::size_t>(samples), ctrl.front());
    const int p = std::min<int>(3, static_cast<int>(ctrl.size()) - 1);
    const auto t = clamped_knots(ctrl.size(), p);
    std::vector<Point2d> out(static_cast<std::size_t>(samples));
    for (int s = 0; s < samples; ++s) out[s] = de_boor(ctrl, t, p, double(s) / double(samples - 1));
    // Clamped ends interpolate; write them exactly.
    out.front() = ctrl.front();
    out.back() = ctrl.back();
    return out;
}

struct BundledPath {
    std::vector<int> path;             ///< tree node ids: leafA .. LCA .. leafB
    std::vector<Point2d> control;      ///< after straightening
    std::vector<Point2d> polyline;
};

/// Tree path between two leaves through their lowest common ancestor.
inline std::vector<int> tree_path(const ChordTree& t, int a, int b) {
    std::vector<int> up_a{a}, up_b{b};
    while (t.nodes[up_a.back()].parent >= 0) up_a.push_back(t.nodes[up_a.back()].parent);
    while (t.nodes[up_b.back()].parent >= 0) up_b.push_back(t.nodes[up_b.back()].parent);
    // Strip the shared tail above the LCA.
    while (up_a.size() >= 2 && up_b.size() >= 2 && up_a[up_a.size() - 2] == up_b[up_b.size() - 2]) {
        up_a.pop_back();
        up_b.pop_back();
    }
    std::vector<int> path(up_a.begin(), up_a.end());
    for (auto it = up_b.rbegin() + 1; it != up_b.rend(); ++it) path.push_back(*it);
    return path;
}

/**
 * Hierarchically bundled edge between leaf slots `leaf_a` and `leaf_b`. Each
 * control point is blended toward the straight chord: beta = 1 keeps the tree
 * path, beta = 0 gives the straight segment.
 */
inline BundledPath bundle_edge(const ChordTree& t, std::int64_t leaf_a, std::int64_t leaf_b, double beta = 0.85, int samples = 64) {
    if (leaf_a == leaf_b) throw RangeError("bundle: an edge needs two distinct leaves");
    const auto n = static_cast<std::int64_t>(t.leaves.size());
    if (leaf_a < 0 || leaf_b < 0 || leaf_a >= n || leaf_b >= n) throw RangeError("bundle: leaf out of range");
    BundledPath e;
    e.path = tree_path(t, t.leaves[leaf_a], t.leaves[leaf_b]);
    const auto N = e.path.size();
    const Point2d p0{t.nodes[e.path.front()].x, t.nodes[e.path.front()].y};
    const Point2d p1{t.nodes[e.path.back()].x, t.nodes[e.path.back()].y};
    for (std::size_t i = 0; i < N; ++i) {
        const auto& nd = t.nodes[e.path[i]];
        const double s = double(i) / double(N - 1);
        Point2d q;
        for (int c = 0; c < 2; ++c) {
            const double line = p0[c] + s * (p1[c] - p0[c]);
            q[c] = beta * (c == 0 ? nd.x : nd.y) + (1.0 - beta) * line;
        }
        e.control.push_back(q);
    }
    e.polyline = bspline_polyline(e.control, samples);
    return e;
}

} // namespace corrchord
