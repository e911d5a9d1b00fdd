#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "corrchord/ensemble/grid.hpp"

namespace corrchord {

/// Extent of the aggregate grid at `level` (each level halves every axis, rounding up).
inline Dims3 level_dims(const Dims3& grid, int level) {
    Dims3 d;
    for (int a = 0; a < 3; ++a) d[a] = ((grid[a] - 1) >> level) + 1;
    return d;
}

/// Voxel range at `level` covering a level-0 box.
inline VoxelBox box_at_level(const VoxelBox& box, int level) {
    VoxelBox out;
    for (int a = 0; a < 3; ++a) {
        out.lo[a] = box.lo[a] >> level;
        out.hi[a] = ((box.hi[a] - 1) >> level) + 1;
    }
    return out;
}

/// Across-member standard deviation per voxel, with a summed-volume table so
/// that the average spread over any box is O(1).
class SpreadField {
public:
    SpreadField() = default;

    SpreadField(const EnsembleGrid& grid, std::size_t variable) : dims_(grid.dims()) {
        const auto n = grid.voxel_count();
        const auto E = grid.members();
        const auto& meta = grid.variable(variable);
        sigma_.assign(static_cast<std::size_t>(n), 0.0);
        std::vector<double> sum(static_cast<std::size_t>(n), 0.0), sum2(static_cast<std::size_t>(n), 0.0);
        std::vector<std::int32_t> cnt(static_cast<std::size_t>(n), 0);
        std::vector<double> first(static_cast<std::size_t>(n), 0.0);
        // Shift by the first valid member for numerical stability.
        std::vector<std::uint8_t> have_first(static_cast<std::size_t>(n), 0);
        for (std::int64_t e = 0; e < E; ++e) {
            const auto plane = grid.plane(variable, e);
            for (std::int64_t i = 0; i < n; ++i) {
                const float v = plane[i];
                if (meta.is_missing(v)) continue;
                if (!have_first[i]) {
                    have_first[i] = 1;
                    first[i] = v;
                }
                const double d = double(v) - first[i];
                sum[i] += d;
                sum2[i] += d * d;
                ++cnt[i];
            }
        }
        valid_.assign(static_cast<std::size_t>(n), 0);
        for (std::int64_t i = 0; i < n; ++i) {
            if (cnt[i] < 2) continue;
            const double c = cnt[i];
            const double var = std::max(0.0, (sum2[i] - sum[i] * sum[i] / c) / (c - 1.0));
            sigma_[i] = std::sqrt(var);
            valid_[i] = 1;
        }
        build_tables();
    }

    const Dims3& dims() const noexcept { return dims_; }
    double sigma(std::int64_t voxel) const { return sigma_.at(voxel); }

    /// Average of the per-voxel spread over the voxels of `box` that have one.
    double spread(const VoxelBox& box) const {
        const double c = box_sum(count_table_, box);
        return c > 0 ? box_sum(sigma_table_, box) / c : 0.0;
    }

private:
    std::int64_t t_index(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return (z * (dims_.y + 1) + y) * (dims_.x + 1) + x;
    }

    void build_tables() {
        const auto size = static_cast<std::size_t>((dims_.x + 1) * (dims_.y + 1) * (dims_.z + 1));
        sigma_table_.assign(size, 0.0);
        count_table_.assign(size, 0.0);
        for (std::int64_t z = 0; z < dims_.z; ++z)
            for (std::int64_t y = 0; y < dims_.y; ++y)
                for (std::int64_t x = 0; x < dims_.x; ++x) {
                    const auto i = linear_index(dims_, {x, y, z});
                    for (auto* t : {&sigma_table_, &count_table_}) {
                        const double v = (t == &sigma_table_) ? sigma_[i] : double(valid_[i]);
                        auto& T = *t;
                        T[t_index(x + 1, y + 1, z + 1)] = v + T[t_index(x, y + 1, z + 1)] + T[t_index(x + 1, y, z + 1)] +
                                                          T[t_index(x + 1, y + 1, z)] - T[t_index(x, y, z + 1)] -
                                                          T[t_index(x, y + 1, z)] - T[t_index(x + 1, y, z)] + T[t_index(x, y, z)];
                    }
                }
    }

    double box_sum(const std::vector<double>& T, const VoxelBox& b) const {
        const auto x0 = b.lo.x, y0 = b.lo.y, z0 = b.lo.z, x1 = b.hi.x, y1 = b.hi.y, z1 = b.hi.z;
        return T[t_index(x1, y1, z1)] - T[t_index(x0, y1, z1)] - T[t_index(x1, y0, z1)] - T[t_index(x1, y1, z0)] +
               T[t_index(x0, y0, z1)] + T[t_index(x0, y1, z0)] + T[t_index(x1, y0, z0)] - T[t_index(x0, y0, z0)];
    }

    Dims3 dims_{};
    std::vector<double> sigma_;
    std::vector<std::uint8_t> valid_;
    std::vector<double> sigma_table_;
    std::vector<double> count_table_;
};

/**
 * Mean-tree aggregates for one variable. Level l >= 1 holds, per cell of the
 * (grid / 2^l) aggregate grid and per member, the mean of the covered raw
 * values; each level is the valid-count-weighted mean of its children.
 */
class MeanTree {
public:
    struct Level {
        Dims3 dims;
        std::vector<float> means;        ///< [cell][member]
        std::vector<float> weights;      ///< [cell][member] valid voxel counts (only with missing data)
        std::vector<std::uint64_t> cover;///< voxels covered per cell
        std::vector<float> spread;       ///< [cell] average across-member sigma
        std::vector<double> spread_weight;
        std::vector<std::uint8_t> missing;
    };

    MeanTree() = default;

    MeanTree(const EnsembleGrid& grid, std::size_t variable) : variable_(variable), members_(grid.members()) {
        if (variable >= grid.variables().size()) throw RangeError("variable index out of range");
        const auto& meta = grid.variable(variable);
        const Dims3 g = grid.dims();
        has_missing_ = meta.has_missing_sentinel;
        SpreadField spread0(grid, variable);

        int depth = 0;
        while (level_dims(g, depth).count() > 1) ++depth;
        depth = std::max(depth, 1);

        // Level 1 from raw voxels.
        {
            Level L;
            L.dims = level_dims(g, 1);
            const auto cells = L.dims.count();
            const auto E = members_;
            L.means.assign(static_cast<std::size_t>(cells * E), 0.0f);
            if (has_missing_) L.weights.assign(static_cast<std::size_t>(cells * E), 0.0f);
            L.cover.assign(static_cast<std::size_t>(cells), 0);
            std::vector<std::int64_t> cell_of(static_cast<std::size_t>(g.count()));
            for (std::int64_t i = 0; i < g.count(); ++i) {
                const auto c = coord_of(g, i);
                cell_of[i] = linear_index(L.dims, {c.x >> 1, c.y >> 1, c.z >> 1});
                ++L.cover[cell_of[i]];
            }
            std::vector<double> sum(static_cast<std::size_t>(cells));
            std::vector<std::int64_t> cnt(static_cast<std::size_t>(cells));
            for (std::int64_t e = 0; e < E; ++e) {
                std::fill(sum.begin(), sum.end(), 0.0);
                std::fill(cnt.begin(), cnt.end(), 0);
                const auto plane = grid.plane(variable, e);
                for (std::int64_t i = 0; i < g.count(); ++i) {
                    if (meta.is_missing(plane[i])) continue;
                    sum[cell_of[i]] += plane[i];
                    ++cnt[cell_of[i]];
                }
                for (std::int64_t c = 0; c < cells; ++c) {
                    L.means[c * E + e] = cnt[c] > 0 ? static_cast<float>(sum[c] / double(cnt[c])) : 0.0f;
                    if (has_missing_) L.weights[c * E + e] = static_cast<float>(cnt[c]);
                }
            }
            L.spread.assign(static_cast<std::size_t>(cells), 0.0f);
            L.spread_weight.assign(static_cast<std::size_t>(cells), 0.0);
            for (std::int64_t c = 0; c < cells; ++c) {
                const auto cc = coord_of(L.dims, c);
                VoxelBox b{{cc.x * 2, cc.y * 2, cc.z * 2}, {std::min(g.x, cc.x * 2 + 2), std::min(g.y, cc.y * 2 + 2), std::min(g.z, cc.z * 2 + 2)}};
                L.spread[c] = static_cast<float>(spread0.spread(b));
                L.spread_weight[c] = double(b.count());
            }
            finalize_missing(L);
            levels_.push_back(std::move(L));
        }
        for (int l = 2; l <= depth; ++l) levels_.push_back(coarsen(levels_.back()));
    }

    std::size_t variable() const noexcept { return variable_; }
    std::int64_t members() const noexcept { return members_; }
    /// Deepest (coarsest) level; levels are numbered 1..depth().
    int depth() const noexcept { return static_cast<int>(levels_.size()); }

    const Level& level(int l) const {
        if (l < 1 || l > depth()) throw RangeError("mean-tree level " + std::to_string(l) + " out of range [1, " + std::to_string(depth()) + "]");
        return levels_[static_cast<std::size_t>(l - 1)];
    }

    std::span<const float> series(int l, std::int64_t cell) const {
        const auto& L = level(l);
        if (cell < 0 || cell >= L.dims.count()) throw RangeError("mean-tree cell " + std::to_string(cell) + " out of range");
        if (L.missing[cell]) throw RangeError("mean-tree cell " + std::to_string(cell) + " is missing");
        return std::span<const float>(L.means).subspan(static_cast<std::size_t>(cell * members_), static_cast<std::size_t>(members_));
    }

    float mean(int l, std::int64_t cell, std::int64_t member) const { return level(l).means[cell * members_ + member]; }

    float weight(int l, std::int64_t cell, std::int64_t member) const {
        const auto& L = level(l);
        return has_missing_ ? L.weights[cell * members_ + member] : static_cast<float>(L.cover[cell]);
    }

    float spread(int l, std::int64_t cell) const { return level(l).spread.at(cell); }

    std::size_t bytes_at(int l) const { return level(l).means.size() * sizeof(float); }

private:
    void finalize_missing(Level& L) const {
        const auto cells = L.dims.count();
        L.missing.assign(static_cast<std::size_t>(cells), 0);
        if (!has_missing_) return;
        for (std::int64_t c = 0; c < cells; ++c)
            for (std::int64_t e = 0; e < members_; ++e)
                if (L.weights[c * members_ + e] == 0.0f) {
                    L.missing[c] = 1;
                    break;
                }
    }

    Level coarsen(const Level& fine) const {
        Level L;
        L.dims = Dims3{(fine.dims.x + 1) / 2, (fine.dims.y + 1) / 2, (fine.dims.z + 1) / 2};
        const auto cells = L.dims.count();
        const auto E = members_;
        std::vector<double> sum(static_cast<std::size_t>(cells * E), 0.0), wsum(static_cast<std::size_t>(cells * E), 0.0);
        std::vector<double> ssum(static_cast<std::size_t>(cells), 0.0), sw(static_cast<std::size_t>(cells), 0.0);
        L.cover.assign(static_cast<std::size_t>(cells), 0);
        for (std::int64_t f = 0; f < fine.dims.count(); ++f) {
            const auto fc = coord_of(fine.dims, f);
            const auto c = linear_index(L.dims, {fc.x >> 1, fc.y >> 1, fc.z >> 1});
            L.cover[c] += fine.cover[f];
            ssum[c] += double(fine.spread[f]) * fine.spread_weight[f];
            sw[c] += fine.spread_weight[f];
            for (std::int64_t e = 0; e < E; ++e) {
                const double w = has_missing_ ? double(fine.weights[f * E + e]) : double(fine.cover[f]);
                sum[c * E + e] += w * double(fine.means[f * E + e]);
                wsum[c * E + e] += w;
            }
        }
        L.means.resize(static_cast<std::size_t>(cells * E));
        if (has_missing_) L.weights.resize(static_cast<std::size_t>(cells * E));
        for (std::int64_t i = 0; i < cells * E; ++i) {
            L.means[i] = wsum[i] > 0 ? static_cast<float>(sum[i] / wsum[i]) : 0.0f;
            if (has_missing_) L.weights[i] = static_cast<float>(wsum[i]);
        }
        L.spread.resize(static_cast<std::size_t>(cells));
        L.spread_weight = sw;
        for (std::int64_t c = 0; c < cells; ++c) L.spread[c] = sw[c] > 0 ? static_cast<float>(ssum[c] / sw[c]) : 0.0f;
        finalize_missing(L);
        return L;
    }

    std::size_t variable_ = 0;
    std::int64_t members_ = 0;
    bool has_missing_ = false;
    std::vector<Level> levels_;
};

inline MeanTree build_mean_tree(const EnsembleGrid& grid, std::size_t variable) { return MeanTree(grid, variable); }

} // namespace corrchord
