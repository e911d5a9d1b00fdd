#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "corrchord/ensemble/partition.hpp"
#include "corrchord/layout/zorder.hpp"

namespace corrchord {

/// Children of one brick, in local z-order.
struct Refinement {
    Dims3 child_grid;               ///< pieces per axis
    std::vector<VoxelBox> children; ///< z-order
    std::vector<Coord3> local;      ///< piece coordinate of each child
    int octree_levels = 0;          ///< octree halvings grouped into this step
};

namespace detail {

inline std::vector<std::pair<std::int64_t, std::int64_t>> halve_axis(std::int64_t lo, std::int64_t hi, int times) {
    std::vector<std::pair<std::int64_t, std::int64_t>> pieces{{lo, hi}};
    for (int t = 0; t < times; ++t) {
        std::vector<std::pair<std::int64_t, std::int64_t>> next;
        for (auto [a, b] : pieces) {
            if (b - a <= 1) {
                next.emplace_back(a, b);
                continue;
            }
            const auto mid = a + (b - a + 1) / 2;
            next.emplace_back(a, mid);
            next.emplace_back(mid, b);
        }
        pieces = std::move(next);
    }
    return pieces;
}

inline std::int64_t children_after(const Dims3& extent, int times) {
    std::int64_t n = 1;
    for (int a = 0; a < 3; ++a) n *= static_cast<std::int64_t>(halve_axis(0, extent[a], times).size());
    return n;
}

} // namespace detail

/**
 * Refinement hierarchy over a context partition. Each refinement step groups
 * consecutive octree halvings (every axis with extent > 1 is halved) as long
 * as the child count stays within half the chord capacity M, with at least
 * one halving per step. Refinement ends at single voxels.
 */
class BrickHierarchy {
public:
    struct Node {
        VoxelBox box;
        std::int64_t parent = -1;
        std::vector<std::int64_t> children;
        std::int64_t zorder = 0;  ///< position within its level
    };
    using Level = std::vector<Node>;

    BrickHierarchy(BrickPartition context, std::int64_t capacity) : context_(context), capacity_(capacity) {
        if (capacity_ < 2) throw RangeError("chord capacity must be >= 2");
    }

    const BrickPartition& context() const noexcept { return context_; }
    std::int64_t capacity() const noexcept { return capacity_; }

    /// Context bricks in z-order.
    std::vector<VoxelBox> context_bricks() const {
        ZOrderMap z(context_.bricks_per_axis);
        std::vector<VoxelBox> out;
        out.reserve(static_cast<std::size_t>(z.size()));
        for (std::int64_t r = 0; r < z.size(); ++r) out.push_back(context_.brick_box(z.linear_at(r)));
        return out;
    }

    int octree_levels_per_step(const Dims3& extent) const {
        const auto half = std::max<std::int64_t>(1, capacity_ / 2);
        int g = 1;
        const auto full = detail::children_after(extent, 64);
        while (detail::children_after(extent, g) < full && detail::children_after(extent, g + 1) <= half) ++g;
        return g;
    }

    Refinement refine(const VoxelBox& box) const {
        const auto ext = box.extent();
        if (ext.x < 1 || ext.y < 1 || ext.z < 1) throw RangeError("cannot refine an empty brick");
        if (ext.count() == 1) throw FinestLevelError("brick is a single voxel; finest level reached");
        Refinement r;
        r.octree_levels = octree_levels_per_step(ext);
        std::vector<std::pair<std::int64_t, std::int64_t>> pieces[3];
        for (int a = 0; a < 3; ++a) {
            pieces[a] = detail::halve_axis(box.lo[a], box.hi[a], r.octree_levels);
            r.child_grid[a] = static_cast<std::int64_t>(pieces[a].size());
        }
        ZOrderMap z(r.child_grid);
        for (std::int64_t rank = 0; rank < z.size(); ++rank) {
            const auto c = z.coord(rank);
            VoxelBox child;
            for (int a = 0; a < 3; ++a) {
                child.lo[a] = pieces[a][c[a]].first;
                child.hi[a] = pieces[a][c[a]].second;
            }
            r.children.push_back(child);
            r.local.push_back(c);
        }
        return r;
    }

    /// Materializes up to max_levels levels (level 0 = context bricks). Stops
    /// early once every node is a single voxel. Single voxels reached before
    /// the deepest level are carried down unchanged so every level tiles the grid.
    std::vector<Level> materialize(int max_levels) const {
        std::vector<Level> levels;
        Level top;
        for (const auto& b : context_bricks()) top.push_back(Node{b, -1, {}, static_cast<std::int64_t>(top.size())});
        levels.push_back(std::move(top));
        while (static_cast<int>(levels.size()) < max_levels) {
            auto& cur = levels.back();
            if (std::all_of(cur.begin(), cur.end(), [](const Node& n) { return n.box.count() == 1; })) break;
            Level next;
            for (std::size_t i = 0; i < cur.size(); ++i) {
                if (cur[i].box.count() == 1) {
                    cur[i].children.push_back(static_cast<std::int64_t>(next.size()));
                    next.push_back(Node{cur[i].box, static_cast<std::int64_t>(i), {}, static_cast<std::int64_t>(next.size())});
                    continue;
                }
                const auto r = refine(cur[i].box);
                for (const auto& c : r.children) {
                    cur[i].children.push_back(static_cast<std::int64_t>(next.size()));
                    next.push_back(Node{c, static_cast<std::int64_t>(i), {}, static_cast<std::int64_t>(next.size())});
                }
            }
            levels.push_back(std::move(next));
        }
        return levels;
    }

private:
    BrickPartition context_;
    std::int64_t capacity_;
};

} // namespace corrchord
