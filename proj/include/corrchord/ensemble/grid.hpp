#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corrchord/core/types.hpp"

namespace corrchord {

struct VariableMeta {
    std::string name;
    std::string units;
    float min_value = 0.0f;
    float max_value = 0.0f;
    bool has_missing_sentinel = false;
    float missing_sentinel = std::numeric_limits<float>::quiet_NaN();

    bool is_missing(float v) const noexcept {
        if (!has_missing_sentinel) return false;
        if (std::isnan(missing_sentinel)) return std::isnan(v);
        return v == missing_sentinel;
    }
};

/**
 * Per-member, per-variable scalar fields on a regular X x Y x Z grid.
 *
 * Values are stored in (variable, member, z, y, x) order as 32-bit floats and
 * never change after construction. Every stored value is finite unless it
 * equals the variable's declared missing sentinel.
 */
class EnsembleGrid {
public:
    EnsembleGrid(Dims3 dims, std::int64_t members, std::vector<VariableMeta> variables, std::vector<float> values)
        : dims_(dims), members_(members), variables_(std::move(variables)), values_(std::move(values)) {
        if (dims_.x < 1 || dims_.y < 1 || dims_.z < 1) throw DataError("grid dimensions must be >= 1, got " + to_string(dims_));
        if (members_ < 2) throw DataError("an ensemble needs at least 2 members, got " + std::to_string(members_));
        if (variables_.empty()) throw DataError("an ensemble needs at least one variable");
        const auto expected = static_cast<std::size_t>(dims_.count() * members_) * variables_.size();
        if (values_.size() != expected)
            throw DataError("value count " + std::to_string(values_.size()) + " does not match " + std::to_string(expected));
        validate_and_compute_ranges();
    }

    const Dims3& dims() const noexcept { return dims_; }
    std::int64_t members() const noexcept { return members_; }
    std::int64_t voxel_count() const noexcept { return dims_.count(); }
    const std::vector<VariableMeta>& variables() const noexcept { return variables_; }
    const VariableMeta& variable(std::size_t v) const { return variables_.at(v); }
    std::span<const float> values() const noexcept { return values_; }

    std::size_t variable_index(const std::string& name) const {
        for (std::size_t i = 0; i < variables_.size(); ++i)
            if (variables_[i].name == name) return i;
        throw RangeError("unknown variable '" + name + "'");
    }

    /// All voxels of one member of one variable, in (z, y, x) order.
    std::span<const float> plane(std::size_t variable, std::int64_t member) const {
        check_variable(variable);
        const auto n = static_cast<std::size_t>(voxel_count());
        return std::span<const float>(values_).subspan((variable * members_ + member) * n, n);
    }

    float value(std::size_t variable, std::int64_t member, std::int64_t voxel) const {
        return values_[(variable * members_ + member) * static_cast<std::size_t>(voxel_count()) + voxel];
    }

    /// Across-member series at one voxel.
    void series(std::size_t variable, std::int64_t voxel, std::span<float> out) const {
        check_variable(variable);
        if (voxel < 0 || voxel >= voxel_count()) throw RangeError("voxel index " + std::to_string(voxel) + " out of range");
        const auto n = static_cast<std::size_t>(voxel_count());
        const float* base = values_.data() + variable * members_ * n + voxel;
        for (std::int64_t e = 0; e < members_; ++e) out[e] = base[e * n];
    }

    std::vector<float> series(std::size_t variable, std::int64_t voxel) const {
        std::vector<float> out(static_cast<std::size_t>(members_));
        series(variable, voxel, out);
        return out;
    }

    std::size_t raw_bytes() const noexcept { return values_.size() * sizeof(float); }

private:
    void check_variable(std::size_t v) const {
        if (v >= variables_.size()) throw RangeError("variable index " + std::to_string(v) + " out of range");
    }

    void validate_and_compute_ranges() {
        const auto per_var = static_cast<std::size_t>(voxel_count() * members_);
        for (std::size_t v = 0; v < variables_.size(); ++v) {
            auto& meta = variables_[v];
            float lo = std::numeric_limits<float>::infinity();
            float hi = -std::numeric_limits<float>::infinity();
            for (std::size_t i = v * per_var; i < (v + 1) * per_var; ++i) {
                const float x = values_[i];
                if (meta.is_missing(x)) continue;
                if (!std::isfinite(x))
                    throw DataError("non-finite value in variable '" + meta.name + "' at value offset " + std::to_string(i) +
                                    " (byte offset " + std::to_string(i * sizeof(float)) + " in payload) without a missing-value sentinel");
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            if (lo > hi) lo = hi = 0.0f;
            meta.min_value = lo;
            meta.max_value = hi;
        }
    }

    Dims3 dims_;
    std::int64_t members_;
    std::vector<VariableMeta> variables_;
    std::vector<float> values_;
};

} // namespace corrchord
