#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "corrchord/ensemble/grid.hpp"
#include "corrchord/ensemble/mean_tree.hpp"

namespace corrchord {

/**
 * Read-only dataset: raw grid plus per-variable mean trees and spread fields.
 * Built once by a single writer; all accessors are safe for concurrent readers.
 */
class EnsembleStore {
public:
    explicit EnsembleStore(EnsembleGrid grid) : grid_(std::move(grid)) {
        const auto nv = grid_.variables().size();
        trees_.reserve(nv);
        spreads_.reserve(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            trees_.emplace_back(grid_, v);
            spreads_.emplace_back(grid_, v);
        }
    }

    const EnsembleGrid& grid() const noexcept { return grid_; }
    std::int64_t members() const noexcept { return grid_.members(); }
    const MeanTree& mean_tree(std::size_t variable) const { return trees_.at(variable); }
    const SpreadField& spread_field(std::size_t variable) const { return spreads_.at(variable); }
    int max_level() const noexcept { return trees_.empty() ? 0 : trees_.front().depth(); }

    Dims3 dims_at(int level) const {
        if (level < 0 || level > max_level()) throw RangeError("level " + std::to_string(level) + " beyond tree depth");
        return level == 0 ? grid_.dims() : mean_tree(0).level(level).dims;
    }

    /// Across-member series at a raw voxel (level 0) or a mean-tree cell (level >= 1).
    /// Throws RangeError for out-of-range indices and for missing data.
    void series_at(std::size_t variable, int level, std::int64_t index, std::span<float> out) const {
        if (variable >= trees_.size()) throw RangeError("variable index out of range");
        if (level < 0 || level > max_level()) throw RangeError("level " + std::to_string(level) + " beyond tree depth");
        if (static_cast<std::int64_t>(out.size()) != grid_.members()) throw RangeError("series buffer has wrong length");
        if (level == 0) {
            grid_.series(variable, index, out);
            const auto& meta = grid_.variable(variable);
            if (meta.has_missing_sentinel)
                for (float v : out)
                    if (meta.is_missing(v)) throw RangeError("voxel " + std::to_string(index) + " has missing values");
            return;
        }
        const auto s = trees_[variable].series(level, index);
        std::copy(s.begin(), s.end(), out.begin());
    }

    std::vector<float> series_at(std::size_t variable, int level, std::int64_t index) const {
        std::vector<float> out(static_cast<std::size_t>(grid_.members()));
        series_at(variable, level, index, out);
        return out;
    }

    double spread(std::size_t variable, const VoxelBox& box) const { return spreads_.at(variable).spread(box); }

    /// Bytes needed to hold all variables at `level` (0 = raw).
    std::size_t bytes_at(int level) const {
        if (level == 0) return grid_.raw_bytes();
        std::size_t b = 0;
        for (const auto& t : trees_) b += t.bytes_at(level);
        return b;
    }

    /// Finest level whose data fits into `budget_bytes` (0 = raw fits).
    int level_for_budget(std::size_t budget_bytes) const {
        for (int l = 0; l <= max_level(); ++l)
            if (bytes_at(l) <= budget_bytes) return l;
        return max_level();
    }

private:
    EnsembleGrid grid_;
    std::vector<MeanTree> trees_;
    std::vector<SpreadField> spreads_;
};

} // namespace corrchord
