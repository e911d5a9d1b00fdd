#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "corrchord/core/types.hpp"

namespace corrchord {

inline int bits_for_extent(std::int64_t extent) {
    int b = 0;
    while ((std::int64_t{1} << b) < extent) ++b;
    return b;
}

/// Morton code with x in the lowest interleave slot, then y, then z. Axes
/// with extent 1 contribute no bits; an axis stops contributing once its own
/// bits are exhausted.
inline std::uint64_t morton_code(const Coord3& c, const Dims3& dims) {
    const int nb[3] = {bits_for_extent(dims.x), bits_for_extent(dims.y), bits_for_extent(dims.z)};
    const int levels = std::max({nb[0], nb[1], nb[2]});
    std::uint64_t code = 0;
    int pos = 0;
    for (int b = 0; b < levels; ++b)
        for (int a = 0; a < 3; ++a)
            if (b < nb[a]) code |= std::uint64_t((c[a] >> b) & 1) << pos++;
    return code;
}

/**
 * Dense Z-order linearization of a brick layout. Non-power-of-two layouts are
 * compacted to 0..M-1 while preserving Morton order.
 */
class ZOrderMap {
public:
    explicit ZOrderMap(const Dims3& dims) : dims_(dims) {
        if (dims.x < 1 || dims.y < 1 || dims.z < 1) throw RangeError("z-order dims must be >= 1");
        for (int a = 0; a < 3; ++a) bits_[a] = bits_for_extent(dims[a]);
        levels_ = std::max({bits_[0], bits_[1], bits_[2]});
        const auto m = dims.count();
        codes_.resize(static_cast<std::size_t>(m));
        for (std::int64_t i = 0; i < m; ++i) codes_[i] = morton_code(coord_of(dims, i), dims);
        inverse_.resize(static_cast<std::size_t>(m));
        std::iota(inverse_.begin(), inverse_.end(), std::int64_t{0});
        std::sort(inverse_.begin(), inverse_.end(), [&](auto a, auto b) { return codes_[a] < codes_[b]; });
        forward_.resize(static_cast<std::size_t>(m));
        for (std::int64_t r = 0; r < m; ++r) forward_[inverse_[r]] = r;
    }

    const Dims3& dims() const noexcept { return dims_; }
    std::int64_t size() const noexcept { return dims_.count(); }
    /// Number of octree levels above the leaves (root at height levels()).
    int levels() const noexcept { return levels_; }

    std::int64_t index(const Coord3& c) const {
        if (c.x < 0 || c.y < 0 || c.z < 0 || c.x >= dims_.x || c.y >= dims_.y || c.z >= dims_.z)
            throw RangeError("z-order coordinate out of range");
        return forward_[linear_index(dims_, c)];
    }
    /// Row-major (z, y, x) linear id -> z-order rank.
    std::int64_t index_of_linear(std::int64_t linear) const { return forward_.at(linear); }
    /// z-order rank -> row-major linear id.
    std::int64_t linear_at(std::int64_t rank) const { return inverse_.at(rank); }
    Coord3 coord(std::int64_t rank) const {
        if (rank < 0 || rank >= size()) throw RangeError("z-order index out of range");
        return coord_of(dims_, inverse_[rank]);
    }

    std::uint64_t code_at(std::int64_t rank) const { return codes_[inverse_[rank]]; }

    /// Octree ancestor key of the leaf at `rank`, `height` levels up.
    std::uint64_t ancestor_key(std::int64_t rank, int height) const {
        int shift = 0;
        for (int a = 0; a < 3; ++a) shift += std::min(height, bits_[a]);
        return shift >= 64 ? 0 : code_at(rank) >> shift;
    }

private:
    Dims3 dims_;
    int bits_[3] = {0, 0, 0};
    int levels_ = 0;
    std::vector<std::uint64_t> codes_;
    std::vector<std::int64_t> forward_;
    std::vector<std::int64_t> inverse_;
};

inline std::int64_t zorder_index(const Coord3& c, const Dims3& dims) { return ZOrderMap(dims).index(c); }

inline Coord3 zorder_inverse(std::int64_t index, const Dims3& dims) { return ZOrderMap(dims).coord(index); }

} // namespace corrchord
