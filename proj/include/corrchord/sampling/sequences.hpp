#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "corrchord/core/error.hpp"

namespace corrchord {

inline constexpr std::array<std::uint32_t, 6> kHaltonBases = {2, 3, 5, 7, 11, 13};

/// Radical inverse of `index` in `base`.
inline double halton(std::uint64_t index, std::uint32_t base) {
    if (base < 2) throw RangeError("halton: base must be >= 2");
    double inv = 1.0 / double(base), f = inv, r = 0.0;
    while (index > 0) {
        r += f * double(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

/// Unique real root > 1 of x^(d+1) = x + 1 (d = 1 gives the golden ratio).
inline double plastic_constant(int d) {
    if (d < 1) throw RangeError("plastic: dimension must be >= 1");
    // Fixed-point iteration x <- (1 + x)^(1/(d+1)) converges from 1.
    double x = 1.0;
    for (int i = 0; i < 200; ++i) x = std::pow(1.0 + x, 1.0 / double(d + 1));
    return x;
}

/// Additive-recurrence point: coordinate a is frac(index * rho^-(a+1)).
inline std::vector<double> plastic_point(std::uint64_t index, int d) {
    const double rho = plastic_constant(d);
    std::vector<double> p(static_cast<std::size_t>(d));
    double alpha = 1.0;
    for (int a = 0; a < d; ++a) {
        alpha /= rho;
        const double v = double(index) * alpha;
        p[static_cast<std::size_t>(a)] = v - std::floor(v);
    }
    return p;
}

} // namespace corrchord
