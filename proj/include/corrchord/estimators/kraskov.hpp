#pragma once

// Kraskov k-nearest-neighbour mutual information estimator:
//   MI = psi(n) + psi(k) - (1/n) * sum_i [psi(n_x,i) + psi(n_y,i)]
// where eps_i is the Chebyshev distance from z_i = (x_i, y_i) to its k-th
// nearest neighbour and n_x,i = #{j != i : |x_i - x_j| < eps_i} (n_y,i
// likewise). Result in nats; small negative values are kept.
//
// Before the search every sample is displaced by a deterministic per-index
// jitter of 1e-10 * (marginal range), with the same pattern for both
// marginals, so duplicate joint samples get eps_i > 0 and swapping x and y is
// an exact mirror. With k = 1 a marginal count may be 0, where psi is
// undefined; counts are floored at 1 before evaluating psi.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/estimators/digamma.hpp"
#include "corrchord/estimators/kdtree.hpp"

namespace corrchord {

inline constexpr double kJitterScale = 1e-10;

/// Default neighbour order ceil(3n/100), clamped to [1, n-1].
inline int default_k(std::size_t n) {
    const auto k = static_cast<std::int64_t>((3 * n + 99) / 100);
    return static_cast<int>(std::clamp<std::int64_t>(k, 1, static_cast<std::int64_t>(n) - 1));
}

/// Deterministic value in [-1, 1) for sample index i.
inline double jitter_pattern(std::uint64_t i) {
    std::uint64_t z = i + 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z ^= z >> 31;
    return double(z >> 11) * (1.0 / 9007199254740992.0) * 2.0 - 1.0;
}

struct JointSampleSet {
    std::vector<Point2> points;
    int k = 1;
};

struct KnnResult {
    std::vector<double> eps;
    std::vector<std::int32_t> nx;
    std::vector<std::int32_t> ny;
};

/// Reusable scratch memory for repeated estimates (one per worker thread).
struct KraskovWorkspace {
    JointSampleSet set;
    KdTree2 tree;
    std::vector<double> scratch;
    std::vector<double> sorted_x, sorted_y;
    KnnResult knn;
};

template <typename T>
void make_joint_samples(std::span<const T> x, std::span<const T> y, int k, JointSampleSet& out, bool standardize = false) {
    const auto n = x.size();
    if (n != y.size()) throw RangeError("kraskov: series lengths differ");
    if (k < 1 || static_cast<std::size_t>(k) >= n) throw RangeError("kraskov: k must satisfy 1 <= k < n");
    // With standardize, each marginal is scaled to zero mean and unit variance
    // so the max-norm neighbourhoods do not depend on the units of either variable.
    const auto prepare = [n, standardize](auto v, std::vector<double>& out) {
        out.resize(n);
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += double(v[i]);
        mean /= double(n);
        double ss = 0.0, lo = double(v[0]), hi = lo;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = double(v[i]) - mean;
            ss += d * d;
            lo = std::min(lo, double(v[i]));
            hi = std::max(hi, double(v[i]));
        }
        if (!(hi > lo) || !(ss > 0.0)) throw DegenerateError("kraskov: constant series; distribution is degenerate");
        if (!standardize) {
            for (std::size_t i = 0; i < n; ++i) out[i] = double(v[i]);
            return hi - lo;
        }
        const double sd = std::sqrt(ss / double(n));
        for (std::size_t i = 0; i < n; ++i) out[i] = (double(v[i]) - mean) / sd;
        return (hi - lo) / sd;
    };
    thread_local std::vector<double> sx, sy;
    const double jx = kJitterScale * prepare(x, sx);
    const double jy = kJitterScale * prepare(y, sy);
    out.k = k;
    out.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h = jitter_pattern(i);
        out.points[i] = Point2{sx[i] + jx * h, sy[i] + jy * h, static_cast<std::int32_t>(i)};
    }
}

template <typename T>
JointSampleSet make_joint_samples(std::span<const T> x, std::span<const T> y, int k, bool standardize = false) {
    JointSampleSet s;
    make_joint_samples(x, y, k, s, standardize);
    return s;
}

namespace detail {

/// #{j != i : |c_i - c_j| < eps} on a sorted copy, evaluating the predicate on
/// the same floating-point differences a direct comparison would use.
inline std::int32_t strict_count(const std::vector<double>& sorted, double c, double eps) {
    const auto lo = std::partition_point(sorted.begin(), sorted.end(), [&](double v) { return c - v >= eps; });
    const auto hi = std::partition_point(lo, sorted.end(), [&](double v) { return v - c < eps; });
    // The query itself is inside the window only when eps > 0.
    return static_cast<std::int32_t>(hi - lo) - (eps > 0.0 ? 1 : 0);
}

} // namespace detail

/// k-th neighbour distances and strict marginal counts via a per-call k-d tree.
inline void knn_chebyshev(const JointSampleSet& set, KraskovWorkspace& ws) {
    const auto n = set.points.size();
    if (set.k < 1 || static_cast<std::size_t>(set.k) >= n) throw RangeError("knn: need n >= k + 1");
    ws.tree.build(set.points);
    ws.sorted_x.resize(n);
    ws.sorted_y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ws.sorted_x[i] = set.points[i].x;
        ws.sorted_y[i] = set.points[i].y;
    }
    std::sort(ws.sorted_x.begin(), ws.sorted_x.end());
    std::sort(ws.sorted_y.begin(), ws.sorted_y.end());
    auto& r = ws.knn;
    r.eps.resize(n);
    r.nx.resize(n);
    r.ny.resize(n);
    ws.tree.all_kth_distances(set.k, r.eps, ws.scratch);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = set.points[i];
        r.nx[i] = detail::strict_count(ws.sorted_x, p.x, r.eps[i]);
        r.ny[i] = detail::strict_count(ws.sorted_y, p.y, r.eps[i]);
    }
}

inline KnnResult knn_chebyshev(const JointSampleSet& set) {
    KraskovWorkspace ws;
    knn_chebyshev(set, ws);
    return std::move(ws.knn);
}

/// Same result by exhaustive O(n^2) search.
inline KnnResult knn_chebyshev_brute(const JointSampleSet& set) {
    const auto n = set.points.size();
    if (set.k < 1 || static_cast<std::size_t>(set.k) >= n) throw RangeError("knn: need n >= k + 1");
    KnnResult r;
    r.eps.resize(n);
    r.nx.resize(n);
    r.ny.resize(n);
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = set.points[i];
        std::size_t o = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) d[o++] = chebyshev(p, set.points[j]);
        std::nth_element(d.begin(), d.begin() + (set.k - 1), d.end());
        const double eps = d[static_cast<std::size_t>(set.k - 1)];
        std::int32_t cx = 0, cy = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            if (std::abs(p.x - set.points[j].x) < eps) ++cx;
            if (std::abs(p.y - set.points[j].y) < eps) ++cy;
        }
        r.eps[i] = eps;
        r.nx[i] = cx;
        r.ny[i] = cy;
    }
    return r;
}

enum class KnnMethod { KdTree, BruteForce };

template <typename Psi = Digamma>
double kraskov_from_counts(const KnnResult& knn, int k, Psi psi = {}) {
    const auto n = knn.eps.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        sum += psi(double(std::max<std::int32_t>(knn.nx[i], 1))) + psi(double(std::max<std::int32_t>(knn.ny[i], 1)));
    return psi(double(n)) + psi(double(k)) - sum / double(n);
}

template <typename T, typename Psi = Digamma>
double kraskov_mi(std::span<const T> x, std::span<const T> y, std::optional<int> k, KraskovWorkspace& ws,
                  KnnMethod method = KnnMethod::KdTree, Psi psi = {}) {
    const auto n = x.size();
    if (n < 4) throw RangeError("kraskov: need at least 4 realizations");
    const int kk = k ? *k : default_k(n);
    make_joint_samples(x, y, kk, ws.set, true);
    if (method == KnnMethod::KdTree) {
        knn_chebyshev(ws.set, ws);
        return kraskov_from_counts(ws.knn, kk, psi);
    }
    return kraskov_from_counts(knn_chebyshev_brute(ws.set), kk, psi);
}

template <typename T, typename Psi = Digamma>
double kraskov_mi(std::span<const T> x, std::span<const T> y, std::optional<int> k = std::nullopt,
                  KnnMethod method = KnnMethod::KdTree, Psi psi = {}) {
    KraskovWorkspace ws;
    return kraskov_mi(x, y, k, ws, method, psi);
}

template <typename T>
double kraskov_mi(const std::vector<T>& x, const std::vector<T>& y, std::optional<int> k = std::nullopt) {
    return kraskov_mi(std::span<const T>(x), std::span<const T>(y), k);
}

} // namespace corrchord
