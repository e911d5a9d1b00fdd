#pragma once

// Reference computations used only by the tests. Each one follows the textbook
// definition directly and shares no code path with the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace oracle {

/// Pearson correlation from raw sums in long double.
inline double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = x.size(), sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += (long double)x[i] * x[i];
        syy += (long double)y[i] * y[i];
        sxy += (long double)x[i] * y[i];
    }
    const long double cov = n * sxy - sx * sy;
    const long double vx = n * sxx - sx * sx;
    const long double vy = n * syy - sy * sy;
    return double(cov / std::sqrt(vx * vy));
}

/// psi via upward recurrence to z >= 30 and the asymptotic series.
inline double digamma_series(double z) {
    long double acc = 0.0L;
    long double w = z;
    while (w < 30.0L) {
        acc -= 1.0L / w;
        w += 1.0L;
    }
    const long double w2 = 1.0L / (w * w);
    // Bernoulli-number terms B2k / (2k w^2k)
    const long double series = w2 * (1.0L / 12 - w2 * (1.0L / 120 - w2 * (1.0L / 252 - w2 * (1.0L / 240 - w2 * (1.0L / 132)))));
    return double(acc + std::log(w) - 0.5L / w - series);
}

struct Knn {
    std::vector<double> eps;
    std::vector<int> nx, ny;
};

/// Full distance table, sort, pick k-th; strict marginal counts.
inline Knn knn_table(const std::vector<double>& x, const std::vector<double>& y, int k) {
    const std::size_t n = x.size();
    Knn r;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> d;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d.push_back(std::max(std::abs(x[i] - x[j]), std::abs(y[i] - y[j])));
        std::sort(d.begin(), d.end());
        const double e = d[k - 1];
        int cx = 0, cy = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            cx += std::abs(x[i] - x[j]) < e;
            cy += std::abs(y[i] - y[j]) < e;
        }
        r.eps.push_back(e);
        r.nx.push_back(cx);
        r.ny.push_back(cy);
    }
    return r;
}

/// Cox-de Boor basis N_{i,p}(u) over knot vector t (right-closed at the last knot).
inline double bspline_basis(const std::vector<double>& t, int i, int p, double u) {
    if (p == 0) {
        const bool last = u == t.back() && t[i + 1] == t.back() && t[i] < t[i + 1];
        return ((t[i] <= u && u < t[i + 1]) || last) ? 1.0 : 0.0;
    }
    double a = 0.0, b = 0.0;
    if (t[i + p] != t[i]) a = (u - t[i]) / (t[i + p] - t[i]) * bspline_basis(t, i, p - 1, u);
    if (t[i + p + 1] != t[i + 1]) b = (t[i + p + 1] - u) / (t[i + p + 1] - t[i + 1]) * bspline_basis(t, i + 1, p - 1, u);
    return a + b;
}

/// Bit interleave with x lowest, equal bit counts per axis.
inline std::uint64_t interleave3(std::uint64_t x, std::uint64_t y, std::uint64_t z, int bits) {
    std::uint64_t c = 0;
    for (int b = 0; b < bits; ++b) {
        c |= ((x >> b) & 1ull) << (3 * b);
        c |= ((y >> b) & 1ull) << (3 * b + 1);
        c |= ((z >> b) & 1ull) << (3 * b + 2);
    }
    return c;
}

/// Real root > 1 of x^(d+1) = x + 1 by bisection.
inline double plastic_root(int d) {
    double lo = 1.0, hi = 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::pow(mid, d + 1) - mid - 1.0 > 0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Extrema of exp(-0.5 * sum_a ((p_a - mean_a) / sigma_a)^2) over the integer
/// box [0, extent_a), by scanning every axis on its own (the density separates).
inline std::pair<double, double> separable_gaussian_extrema(const std::array<double, 6>& mean, const std::array<double, 6>& sigma,
                                                           const std::array<std::int64_t, 6>& extent) {
    double hi = 1.0, lo = 1.0;
    for (int a = 0; a < 6; ++a) {
        double mx = 0.0, mn = 1.0;
        for (std::int64_t i = 0; i < extent[a]; ++i) {
            const double z = (double(i) - mean[a]) / sigma[a];
            const double f = std::exp(-0.5 * z * z);
            mx = std::max(mx, f);
            mn = std::min(mn, f);
        }
        hi *= mx;
        lo *= mn;
    }
    return {hi, lo};
}

struct Centre {
    double x, y, z, core;
};

/// True when the voxel lies inside the core of its nearest centre (max-norm,
/// first centre wins ties).
inline bool in_core(const std::vector<Centre>& cs, double x, double y, double z) {
    double best = 1e300;
    int id = -1;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        const double d = std::max({std::abs(x - cs[i].x), std::abs(y - cs[i].y), std::abs(z - cs[i].z)});
        if (d < best) {
            best = d;
            id = static_cast<int>(i);
        }
    }
    return id >= 0 && best <= cs[id].core;
}

} // namespace oracle
