#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "corrchord/core/error.hpp"

namespace corrchord {

/// Pearson correlation of two equal-length series (two-pass, double accumulation).
template <typename T>
double ppmcc(std::span<const T> x, std::span<const T> y) {
    const auto n = x.size();
    if (n != y.size()) throw RangeError("ppmcc: series lengths differ");
    if (n < 2) throw DegenerateError("ppmcc: need at least 2 realizations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += double(x[i]);
        my += double(y[i]);
    }
    mx /= double(n);
    my /= double(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = double(x[i]) - mx;
        const double dy = double(y[i]) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw DegenerateError("ppmcc: zero variance; correlation undefined");
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

template <typename T>
double ppmcc(const std::vector<T>& x, const std::vector<T>& y) {
    return ppmcc(std::span<const T>(x), std::span<const T>(y));
}

} // namespace corrchord
