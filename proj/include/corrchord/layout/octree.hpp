#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/layout/zorder.hpp"

namespace corrchord {

/// Node of the radial hierarchy behind a chord diagram. Positions are in the
/// unit disc with y up; angle 0 is 12 o'clock and angles grow clockwise.
struct TreeNode {
    int parent = -1;
    std::vector<int> children;
    int depth = 0;      ///< 0 at the root
    double angle = 0.0;
    double radius = 0.0;
    double x = 0.0;
    double y = 0.0;
};

struct ChordTree {
    std::vector<TreeNode> nodes;  ///< root first
    std::vector<int> leaves;      ///< node id of each leaf, in layout order
    int height = 0;               ///< leaf depth

    int root() const noexcept { return 0; }
};

inline void place(TreeNode& n) {
    n.x = n.radius * std::sin(n.angle);
    n.y = n.radius * std::cos(n.angle);
}

/**
 * Build the hierarchy from leaf angles and, per height h = 1..H, the group key
 * of every leaf (leaves with equal keys at height h share an ancestor; groups
 * must be contiguous). Height H is the root. Inner angles are the mean of the
 * child angles; radii are depth / H.
 */
inline ChordTree build_chord_tree(const std::vector<double>& leaf_angles, const std::vector<std::vector<std::uint64_t>>& keys) {
    const auto n = leaf_angles.size();
    for (const auto& k : keys)
        if (k.size() != n) throw RangeError("chord tree: key table size mismatch");
    ChordTree t;
    const int H = std::max<int>(1, static_cast<int>(keys.size()));
    t.height = H;
    // levels[h] holds node ids at height h, from the leaves (h = 0) up.
    std::vector<std::vector<int>> levels(static_cast<std::size_t>(H) + 1);
    std::vector<TreeNode> tmp;
    for (std::size_t i = 0; i < n; ++i) {
        TreeNode leaf;
        leaf.angle = leaf_angles[i];
        tmp.push_back(leaf);
        levels[0].push_back(static_cast<int>(i));
    }
    for (int h = 1; h <= H; ++h) {
        const bool top = h == H;
        const auto& below = levels[static_cast<std::size_t>(h - 1)];
        // Representative leaf of each node below, to read its group key.
        std::vector<std::size_t> first_leaf(tmp.size());
        for (std::size_t i = 0; i < n; ++i) first_leaf[i] = i;
        for (std::size_t id = n; id < tmp.size(); ++id) {
            int c = static_cast<int>(id);
            while (!tmp[c].children.empty()) c = tmp[c].children.front();
            first_leaf[id] = static_cast<std::size_t>(c);
        }
        for (std::size_t i = 0; i < below.size();) {
            std::size_t j = i + 1;
            if (top) j = below.size();
            else {
                const auto key = keys[static_cast<std::size_t>(h - 1)][first_leaf[below[i]]];
                while (j < below.size() && keys[static_cast<std::size_t>(h - 1)][first_leaf[below[j]]] == key) ++j;
            }
            TreeNode p;
            double sum = 0.0;
            for (std::size_t c = i; c < j; ++c) {
                p.children.push_back(below[c]);
                sum += tmp[below[c]].angle;
            }
            p.angle = p.children.empty() ? 0.0 : sum / double(p.children.size());
            const int id = static_cast<int>(tmp.size());
            for (int c : p.children) tmp[c].parent = id;
            tmp.push_back(p);
            levels[static_cast<std::size_t>(h)].push_back(id);
            i = j;
        }
        if (below.empty() && top) {
            tmp.push_back(TreeNode{});
            levels[static_cast<std::size_t>(h)].push_back(static_cast<int>(tmp.size() - 1));
        }
    }
    // Renumber root-first (breadth first) for stable output.
    std::vector<int> order{levels[static_cast<std::size_t>(H)].front()}, remap(tmp.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i)
        for (int c : tmp[order[i]].children) order.push_back(c);
    for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<int>(i);
    t.nodes.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        TreeNode nd = tmp[order[i]];
        nd.parent = nd.parent < 0 ? -1 : remap[nd.parent];
        for (int& c : nd.children) c = remap[c];
        nd.depth = nd.parent < 0 ? 0 : t.nodes[nd.parent].depth + 1;
        t.nodes[i] = nd;
    }
    for (auto& nd : t.nodes) {
        nd.radius = double(nd.depth) / double(H);
        place(nd);
    }
    t.leaves.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.leaves[i] = remap[static_cast<int>(i)];
    return t;
}

/// Octree keys of a z-ordered brick layout, heights 1..levels (at least 1).
inline std::vector<std::vector<std::uint64_t>> octree_keys(const ZOrderMap& z) {
    const int H = std::max(1, z.levels());
    std::vector<std::vector<std::uint64_t>> keys(static_cast<std::size_t>(H), std::vector<std::uint64_t>(static_cast<std::size_t>(z.size())));
    for (int h = 1; h <= H; ++h)
        for (std::int64_t r = 0; r < z.size(); ++r) keys[h - 1][r] = z.ancestor_key(r, h);
    return keys;
}

/// Angle of slot i of m around the full circle.
inline double circle_angle(std::int64_t i, std::int64_t m) { return 2.0 * std::numbers::pi * double(i) / double(m); }

/// Context hierarchy: bricks in z-order around the full circle.
inline ChordTree build_octree(const Dims3& bricks_per_axis) {
    const ZOrderMap z(bricks_per_axis);
    std::vector<double> angles(static_cast<std::size_t>(z.size()));
    for (std::int64_t i = 0; i < z.size(); ++i) angles[i] = circle_angle(i, z.size());
    return build_chord_tree(angles, octree_keys(z));
}

/// Angle of slot i of n on the top (B) or bottom (A) semicircle, clockwise.
inline double semicircle_angle(std::int64_t i, std::int64_t n, bool top) {
    const double start = top ? -0.5 * std::numbers::pi : 0.5 * std::numbers::pi;
    return start + std::numbers::pi * (double(i) + 0.5) / double(n);
}

/**
 * Focus hierarchy: children of brick A on the bottom semicircle and of brick B
 * on the top, each under its own sub-root, both under the center.
 */
inline ChordTree build_focus_tree(const Dims3& child_grid_a, const Dims3& child_grid_b) {
    const ZOrderMap za(child_grid_a), zb(child_grid_b);
    const int sub = std::max(za.levels(), zb.levels());
    const auto na = za.size(), nb = zb.size();
    std::vector<double> angles;
    for (std::int64_t i = 0; i < na; ++i) angles.push_back(semicircle_angle(i, na, false));
    for (std::int64_t i = 0; i < nb; ++i) angles.push_back(semicircle_angle(i, nb, true));
    std::vector<std::vector<std::uint64_t>> keys;
    for (int h = 1; h <= sub; ++h) {
        std::vector<std::uint64_t> k;
        // Side bit on top keeps A and B groups apart.
        for (std::int64_t i = 0; i < na; ++i) k.push_back(za.ancestor_key(i, std::min(h, std::max(1, za.levels()))) * 2);
        for (std::int64_t i = 0; i < nb; ++i) k.push_back(zb.ancestor_key(i, std::min(h, std::max(1, zb.levels()))) * 2 + 1);
        keys.push_back(std::move(k));
    }
    std::vector<std::uint64_t> side;
    for (std::int64_t i = 0; i < na; ++i) side.push_back(0);
    for (std::int64_t i = 0; i < nb; ++i) side.push_back(1);
    keys.push_back(side);
    keys.push_back(std::vector<std::uint64_t>(static_cast<std::size_t>(na + nb), 0));
    return build_chord_tree(angles, keys);
}

} // namespace corrchord
