#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "corrchord/core/types.hpp"

namespace corrchord {

/**
 * Uniform tiling of a grid into bricks. Boundary bricks are clipped, so the
 * last brick along an axis may be smaller than brick_dims.
 */
struct BrickPartition {
    Dims3 grid;
    Dims3 brick_dims;
    Dims3 bricks_per_axis;
    int level = 0;

    std::int64_t count() const noexcept { return bricks_per_axis.count(); }
    std::int64_t pair_count() const noexcept { return count() * (count() - 1) / 2; }

    VoxelBox brick_box(const Coord3& b) const {
        if (b.x < 0 || b.y < 0 || b.z < 0 || b.x >= bricks_per_axis.x || b.y >= bricks_per_axis.y || b.z >= bricks_per_axis.z)
            throw RangeError("brick coordinate out of range");
        VoxelBox box;
        for (int a = 0; a < 3; ++a) {
            box.lo[a] = b[a] * brick_dims[a];
            box.hi[a] = std::min(grid[a], box.lo[a] + brick_dims[a]);
        }
        return box;
    }

    /// Brick ids are (bz, by, bx) row-major.
    VoxelBox brick_box(std::int64_t id) const { return brick_box(coord_of(bricks_per_axis, id)); }

    friend bool operator==(const BrickPartition&, const BrickPartition&) = default;
};

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

/// Max/min brick edge over the axes whose grid extent exceeds one voxel.
inline double anisotropy(const Dims3& grid, const Dims3& brick) {
    std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = 0;
    for (int a = 0; a < 3; ++a) {
        if (grid[a] <= 1) continue;
        lo = std::min(lo, brick[a]);
        hi = std::max(hi, brick[a]);
    }
    return hi == 0 ? 1.0 : double(hi) / double(lo);
}

/// Cubic target edge; axes shorter than the edge become a single slab.
inline BrickPartition partition_by_edge(const Dims3& grid, std::int64_t edge) {
    if (edge < 1) throw RangeError("brick edge must be >= 1");
    if (grid.x < 1 || grid.y < 1 || grid.z < 1) throw RangeError("grid dimensions must be >= 1");
    BrickPartition p;
    p.grid = grid;
    for (int a = 0; a < 3; ++a) {
        p.brick_dims[a] = std::min(edge, grid[a]);
        p.bricks_per_axis[a] = ceil_div(grid[a], p.brick_dims[a]);
    }
    return p;
}

/**
 * Partition whose brick count is closest to target_m; among those, the most
 * isotropic bricks win (smallest max/min edge ratio). Exhaustive over all
 * per-axis brick counts that tile without empty bricks.
 */
inline BrickPartition partition_grid(const Dims3& grid, std::int64_t target_m) {
    if (target_m < 2) throw RangeError("target brick count must be >= 2");
    if (grid.x < 1 || grid.y < 1 || grid.z < 1) throw RangeError("grid dimensions must be >= 1");

    // Per-axis brick counts that are realizable by ceil-division tiling.
    auto realizable = [](std::int64_t extent) {
        std::vector<std::int64_t> out;
        for (std::int64_t b = 1; b <= extent; ++b)
            if (ceil_div(extent, ceil_div(extent, b)) == b) out.push_back(b);
        return out;
    };
    const auto bx = realizable(grid.x), by = realizable(grid.y), bz = realizable(grid.z);
    const std::int64_t cap = 2 * target_m;

    BrickPartition best;
    std::int64_t best_dist = std::numeric_limits<std::int64_t>::max();
    double best_ratio = std::numeric_limits<double>::infinity();
    std::int64_t best_m = 0;
    for (auto z : bz) {
        if (z > cap) break;
        for (auto y : by) {
            if (y * z > cap) break;
            for (auto x : bx) {
                const auto m = x * y * z;
                if (m > cap) break;
                const Dims3 brick{ceil_div(grid.x, x), ceil_div(grid.y, y), ceil_div(grid.z, z)};
                const auto dist = m > target_m ? m - target_m : target_m - m;
                const double ratio = anisotropy(grid, brick);
                const bool better = dist < best_dist || (dist == best_dist && ratio < best_ratio) ||
                                    (dist == best_dist && ratio == best_ratio && m < best_m);
                if (better) {
                    best_dist = dist;
                    best_ratio = ratio;
                    best_m = m;
                    best.grid = grid;
                    best.brick_dims = brick;
                    best.bricks_per_axis = {x, y, z};
                }
            }
        }
    }
    return best;
}

} // namespace corrchord
