#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "corrchord/ensemble/mean_tree.hpp"
#include "corrchord/ensemble/store.hpp"
#include "corrchord/estimators/kraskov.hpp"
#include "corrchord/estimators/ppmcc.hpp"
#include "corrchord/sampling/search.hpp"

namespace corrchord {

/// Brick pair to search, with boxes in raw voxel coordinates.
struct PairQuery {
    VoxelBox a;
    VoxelBox b;
    std::size_t variable_a = 0;
    std::size_t variable_b = 0;
    int level = 0;                 ///< 0 = raw voxels, f >= 1 = mean-tree level
    MeasureKind measure = MeasureKind::Ppmcc;
    bool absolute = true;          ///< PPMCC: maximize |r|
    std::optional<int> k;          ///< KMI neighbour order
};

struct PairEstimate {
    MaxEstimate search;
    double strength = 0.0;  ///< objective at the argmax (|r| or MI)
    double value = 0.0;     ///< signed measure at the argmax
    Coord3 cell_a{}, cell_b{};  ///< argmax cells at the query level
};

/// Measure between two cells at `level`; nullopt where it is undefined.
inline std::optional<double> pair_measure(const EnsembleStore& store, const PairQuery& q, const Coord3& ca, const Coord3& cb,
                                          std::vector<float>& sa, std::vector<float>& sb, KraskovWorkspace& ws) {
    const auto dims = store.dims_at(q.level);
    try {
        store.series_at(q.variable_a, q.level, linear_index(dims, ca), sa);
        store.series_at(q.variable_b, q.level, linear_index(dims, cb), sb);
        const std::span<const float> x(sa), y(sb);
        return q.measure == MeasureKind::Ppmcc ? ppmcc(x, y) : kraskov_mi(x, y, q.k, ws);
    } catch (const DegenerateError&) {
        return std::nullopt;
    } catch (const RangeError&) {
        return std::nullopt;
    }
}

/// Estimated maximum dependence between the voxels of two bricks.
inline PairEstimate estimate_pair_maximum(const EnsembleStore& store, const PairQuery& q, const StrategyConfig& cfg) {
    const auto ba = box_at_level(q.a, q.level);
    const auto bb = box_at_level(q.b, q.level);
    SearchDomain6 dom;
    for (int i = 0; i < 3; ++i) {
        dom.extent[i] = ba.extent()[i];
        dom.extent[3 + i] = bb.extent()[i];
    }
    std::vector<float> sa(static_cast<std::size_t>(store.members())), sb(sa.size());
    KraskovWorkspace ws;
    const auto cells = [&](const Index6& p) {
        return std::pair<Coord3, Coord3>{{ba.lo.x + p[0], ba.lo.y + p[1], ba.lo.z + p[2]}, {bb.lo.x + p[3], bb.lo.y + p[4], bb.lo.z + p[5]}};
    };
    const auto objective = [&](const Index6& p) -> std::optional<double> {
        const auto [ca, cb] = cells(p);
        auto v = pair_measure(store, q, ca, cb, sa, sb, ws);
        if (v && q.measure == MeasureKind::Ppmcc && q.absolute) *v = std::abs(*v);
        return v;
    };
    PairEstimate out;
    out.search = maximize_discrete(dom, objective, cfg);
    out.strength = out.search.value;
    std::tie(out.cell_a, out.cell_b) = cells(out.search.argmax);
    out.value = pair_measure(store, q, out.cell_a, out.cell_b, sa, sb, ws).value_or(out.strength);
    return out;
}

inline constexpr std::int64_t kExhaustiveCap = 65536;
inline constexpr std::int64_t kBosMinVoxels = 4096;

/// Strategy for a brick pair of the given cell extents.
inline Strategy choose_strategy(const Dims3& a, const Dims3& b, std::int64_t exhaustive_cap = kExhaustiveCap) {
    if (a.count() * b.count() <= exhaustive_cap) return Strategy::Exhaustive;
    if (std::min(a.count(), b.count()) >= kBosMinVoxels) return Strategy::Bos;
    return Strategy::UniformRandom;
}

} // namespace corrchord
