#pragma once

#include <chrono>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "corrchord/core/types.hpp"
#include "corrchord/ensemble/grid.hpp"
#include "corrchord/estimators/kraskov.hpp"
#include "corrchord/estimators/ppmcc.hpp"

namespace corrchord {

/// A collection of equal-length series that can be copied out block-wise as
/// row-major [count][length] floats.
template <typename S>
concept SeriesSource = requires(const S& s, std::int64_t first, std::int64_t count, std::span<float> out) {
    { s.size() } -> std::convertible_to<std::int64_t>;
    { s.length() } -> std::convertible_to<std::int64_t>;
    s.gather(first, count, out);
};

class VectorSeriesSource {
public:
    explicit VectorSeriesSource(const std::vector<std::vector<float>>& series) : series_(&series) {}
    std::int64_t size() const { return static_cast<std::int64_t>(series_->size()); }
    std::int64_t length() const { return series_->empty() ? 0 : static_cast<std::int64_t>(series_->front().size()); }
    void gather(std::int64_t first, std::int64_t count, std::span<float> out) const {
        const auto len = length();
        for (std::int64_t i = 0; i < count; ++i) {
            const auto& s = (*series_)[first + i];
            if (static_cast<std::int64_t>(s.size()) != len) throw RangeError("batch: series lengths differ");
            std::copy(s.begin(), s.end(), out.begin() + i * len);
        }
    }

private:
    const std::vector<std::vector<float>>* series_;
};

/// Every voxel of one variable, in linear voxel order.
class GridSeriesSource {
public:
    GridSeriesSource(const EnsembleGrid& grid, std::size_t variable) : grid_(&grid), variable_(variable) {}
    std::int64_t size() const { return grid_->voxel_count(); }
    std::int64_t length() const { return grid_->members(); }
    void gather(std::int64_t first, std::int64_t count, std::span<float> out) const {
        const auto E = grid_->members();
        for (std::int64_t e = 0; e < E; ++e) {
            const auto plane = grid_->plane(variable_, e);
            for (std::int64_t j = 0; j < count; ++j) out[j * E + e] = plane[first + j];
        }
    }

private:
    const EnsembleGrid* grid_;
    std::size_t variable_;
};

struct BatchOptions {
    int threads = 0;                ///< 0 = all available
    std::optional<int> k;           ///< KMI neighbour order override
    std::int64_t block = 512;
};

struct BatchResult {
    std::vector<double> values;     ///< NaN where the pair is degenerate
    std::vector<std::uint8_t> ok;
    std::int64_t failures = 0;
    double seconds = 0.0;
    double pairs_per_second = 0.0;
    int threads = 1;
};

inline int available_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

/// One reference series against every target; per-pair degenerate cases are
/// recorded, not thrown. Values equal sequential per-pair evaluation.
template <SeriesSource S>
BatchResult batch_correlate(std::span<const float> reference, const S& targets, MeasureKind measure, const BatchOptions& opt = {}) {
    const auto n = targets.size();
    const auto E = targets.length();
    if (n > 0 && static_cast<std::int64_t>(reference.size()) != E) throw RangeError("batch: reference length differs from targets");
    BatchResult res;
    res.values.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
    res.ok.assign(static_cast<std::size_t>(n), 0);
    res.threads = opt.threads > 0 ? opt.threads : available_threads();
    const auto block = std::max<std::int64_t>(1, opt.block);
    const auto nblocks = (n + block - 1) / block;
    const auto t0 = std::chrono::steady_clock::now();

#pragma omp parallel num_threads(res.threads)
    {
        std::vector<float> buf(static_cast<std::size_t>(block * E));
        KraskovWorkspace ws;
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t b = 0; b < nblocks; ++b) {
            const auto first = b * block;
            const auto count = std::min(block, n - first);
            targets.gather(first, count, buf);
            for (std::int64_t j = 0; j < count; ++j) {
                const std::span<const float> y(buf.data() + j * E, static_cast<std::size_t>(E));
                try {
                    res.values[first + j] = measure == MeasureKind::Ppmcc ? ppmcc(reference, y) : kraskov_mi(reference, y, opt.k, ws);
                    res.ok[first + j] = 1;
                } catch (const std::exception&) {
                }
            }
        }
    }
    for (auto o : res.ok) res.failures += o ? 0 : 1;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.pairs_per_second = res.seconds > 0 ? double(n) / res.seconds : 0.0;
    return res;
}

} // namespace corrchord
