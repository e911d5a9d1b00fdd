#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "corrchord/core/error.hpp"

namespace corrchord {

/// Extent of a 3D grid (or brick layout) along x, y, z.
struct Dims3 {
    std::int64_t x = 1;
    std::int64_t y = 1;
    std::int64_t z = 1;

    constexpr std::int64_t count() const noexcept { return x * y * z; }
    constexpr std::int64_t operator[](int axis) const noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr std::int64_t& operator[](int axis) noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
    friend constexpr bool operator==(const Dims3&, const Dims3&) = default;
};

using Coord3 = Dims3;

/// Half-open voxel range [lo, hi) per axis.
struct VoxelBox {
    Coord3 lo{0, 0, 0};
    Coord3 hi{0, 0, 0};

    constexpr Dims3 extent() const noexcept { return {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z}; }
    constexpr std::int64_t count() const noexcept { return extent().count(); }
    constexpr bool contains(const Coord3& c) const noexcept {
        return c.x >= lo.x && c.x < hi.x && c.y >= lo.y && c.y < hi.y && c.z >= lo.z && c.z < hi.z;
    }
    std::array<double, 3> center() const noexcept {
        return {0.5 * double(lo.x + hi.x - 1), 0.5 * double(lo.y + hi.y - 1), 0.5 * double(lo.z + hi.z - 1)};
    }
    friend constexpr bool operator==(const VoxelBox&, const VoxelBox&) = default;
};

/// Linear voxel index in (z, y, x) row-major order.
constexpr std::int64_t linear_index(const Dims3& dims, const Coord3& c) noexcept {
    return (c.z * dims.y + c.y) * dims.x + c.x;
}

constexpr Coord3 coord_of(const Dims3& dims, std::int64_t index) noexcept {
    return {index % dims.x, (index / dims.x) % dims.y, index / (dims.x * dims.y)};
}

inline std::string to_string(const Dims3& d) {
    return std::to_string(d.x) + "x" + std::to_string(d.y) + "x" + std::to_string(d.z);
}

enum class MeasureKind { Ppmcc, Kmi };

inline std::string to_string(MeasureKind m) { return m == MeasureKind::Ppmcc ? "ppmcc" : "kmi"; }

inline MeasureKind parse_measure(const std::string& s) {
    if (s == "ppmcc" || s == "PPMCC" || s == "pearson") return MeasureKind::Ppmcc;
    if (s == "kmi" || s == "KMI" || s == "mi") return MeasureKind::Kmi;
    throw DataError("unknown measure '" + s + "' (expected ppmcc or kmi)");
}

} // namespace corrchord
