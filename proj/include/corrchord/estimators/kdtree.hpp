#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace corrchord {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    std::int32_t id = 0;
};

inline double chebyshev(const Point2& a, const Point2& b) noexcept {
    return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y));
}

/**
 * Balanced 2-D k-d tree stored implicitly in a permuted point array: the node
 * for range [lo, hi) splits at mid = (lo + hi) / 2 on axis depth % 2, and
 * ranges of at most kLeafSize points are leaves scanned linearly.
 * Construction and queries are iterative with a bounded work list.
 */
class KdTree2 {
public:
    static constexpr std::int32_t kLeafSize = 8;

    KdTree2() = default;

    void build(std::span<const Point2> points) {
        pts_.assign(points.begin(), points.end());
        axis_.assign(pts_.size(), 0);
        struct Range { std::int32_t lo, hi, depth; };
        std::array<Range, 128> work;
        int top = 0;
        if (!pts_.empty()) work[top++] = {0, static_cast<std::int32_t>(pts_.size()), 0};
        while (top > 0) {
            const Range r = work[--top];
            if (r.hi - r.lo <= kLeafSize) continue;
            const std::int32_t mid = (r.lo + r.hi) / 2;
            const int axis = r.depth & 1;
            auto first = pts_.begin() + r.lo, nth = pts_.begin() + mid, last = pts_.begin() + r.hi;
            if (axis == 0)
                std::nth_element(first, nth, last, [](const Point2& a, const Point2& b) { return a.x < b.x; });
            else
                std::nth_element(first, nth, last, [](const Point2& a, const Point2& b) { return a.y < b.y; });
            axis_[mid] = static_cast<std::uint8_t>(axis);
            work[top++] = {r.lo, mid, r.depth + 1};
            work[top++] = {mid + 1, r.hi, r.depth + 1};
        }
    }

    std::size_t size() const noexcept { return pts_.size(); }

    /// Chebyshev distance from `q` to its k-th nearest neighbour, excluding the
    /// point whose id equals q.id. `heap` is caller-provided scratch.
    double kth_distance(const Point2& q, int k, std::vector<double>& heap) const {
        heap.clear();
        double bound = std::numeric_limits<double>::infinity();
        struct Entry { std::int32_t lo, hi; double min_dist; };
        std::array<Entry, 128> work;
        int top = 0;
        work[top++] = {0, static_cast<std::int32_t>(pts_.size()), 0.0};
        while (top > 0) {
            const Entry e = work[--top];
            if (e.lo >= e.hi || e.min_dist >= bound) continue;
            if (e.hi - e.lo <= kLeafSize) {
                for (std::int32_t i = e.lo; i < e.hi; ++i) {
                    const double d = chebyshev(q, pts_[i]);
                    if (d < bound && pts_[i].id != q.id) offer(d, k, heap, bound);
                }
                continue;
            }
            const std::int32_t mid = (e.lo + e.hi) / 2;
            const Point2& p = pts_[mid];
            if (const double d = chebyshev(q, p); d < bound && p.id != q.id) offer(d, k, heap, bound);
            const bool use_x = axis_[mid] == 0;
            const double qc = use_x ? q.x : q.y;
            const double pc = use_x ? p.x : p.y;
            const double plane = std::abs(qc - pc);
            const Entry left{e.lo, mid, qc < pc ? e.min_dist : std::max(e.min_dist, plane)};
            const Entry right{mid + 1, e.hi, qc < pc ? std::max(e.min_dist, plane) : e.min_dist};
            // Far side first so the near side is popped next.
            if (qc < pc) {
                work[top++] = right;
                work[top++] = left;
            } else {
                work[top++] = left;
                work[top++] = right;
            }
        }
        if (static_cast<int>(heap.size()) < k) return std::numeric_limits<double>::infinity();
        return heap.front();
    }

    /**
     * k-th neighbour distance of every point, written to out[id]. Points are
     * visited in tree order, where consecutive points are close: with eps0 the
     * answer for the previous point p, eps(q) <= eps0 + d(p, q) (triangle
     * inequality), so each query only collects the distances within that
     * bound and selects the k-th smallest.
     */
    void all_kth_distances(int k, std::span<double> out, std::vector<double>& scratch) const {
        double prev_eps = std::numeric_limits<double>::infinity();
        const Point2* prev = nullptr;
        for (const auto& q : pts_) {
            double eps;
            if (prev) {
                // Relative slack: rounding must not drop the k-th neighbour.
                const double bound = (prev_eps + chebyshev(*prev, q)) * (1.0 + 1e-12);
                const auto m = collect_within(q, bound, scratch);
                eps = m >= static_cast<std::size_t>(k) ? select_kth(scratch.data(), m, static_cast<std::size_t>(k - 1))
                                                        : kth_distance(q, k, scratch);
            } else {
                eps = kth_distance(q, k, scratch);
            }
            out[static_cast<std::size_t>(q.id)] = eps;
            prev_eps = eps;
            prev = &q;
        }
    }

private:
    // Every distance from q to another point that is <= bound, into out[0, m);
    // returns m. Appends are branch-free, so the buffer holds room for every point.
    std::size_t collect_within(const Point2& q, double bound, std::vector<double>& out) const {
        if (out.size() < pts_.size() + 1) out.resize(pts_.size() + 1);
        double* dst = out.data();
        std::size_t m = 0;
        struct Entry { std::int32_t lo, hi; };
        std::array<Entry, 128> work;
        int top = 0;
        work[top++] = {0, static_cast<std::int32_t>(pts_.size())};
        const auto take = [&](std::int32_t i) {
            const double d = chebyshev(q, pts_[i]);
            dst[m] = d;
            m += static_cast<std::size_t>((d <= bound) & (pts_[i].id != q.id));
        };
        while (top > 0) {
            const Entry e = work[--top];
            if (e.hi - e.lo <= kLeafSize) {
                for (std::int32_t i = e.lo; i < e.hi; ++i) take(i);
                continue;
            }
            const std::int32_t mid = (e.lo + e.hi) / 2;
            take(mid);
            const Point2& p = pts_[mid];
            const double delta = axis_[mid] == 0 ? q.x - p.x : q.y - p.y;
            // The low side lies at least delta away, the high side at least -delta
            // (rounded subtraction is monotone, so this holds in floating point).
            if (e.lo < mid && delta <= bound) work[top++] = {e.lo, mid};
            if (mid + 1 < e.hi && -delta <= bound) work[top++] = {mid + 1, e.hi};
        }
        return m;
    }

    // k-th smallest (0-based) of a[0, n) by quickselect with branch-free
    // partitions; reorders a.
    static double select_kth(double* a, std::size_t n, std::size_t k) {
        while (n > 16) {
            const double x = a[0], y = a[n / 2], z = a[n - 1];
            const double pivot = std::max(std::min(x, y), std::min(std::max(x, y), z));
            std::size_t lt = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double t = a[j];
                a[j] = a[lt];
                a[lt] = t;
                lt += static_cast<std::size_t>(t < pivot);
            }
            if (k < lt) {
                n = lt;
                continue;
            }
            std::size_t eq = lt;
            for (std::size_t j = lt; j < n; ++j) {
                const double t = a[j];
                a[j] = a[eq];
                a[eq] = t;
                eq += static_cast<std::size_t>(t == pivot);
            }
            if (k < eq) return pivot;
            a += eq;
            n -= eq;
            k -= eq;
        }
        std::sort(a, a + n);
        return a[k];
    }

    // Keep the k smallest distances in a max-heap; `bound` tightens to the
    // k-th once the heap is full.
    static void offer(double d, int k, std::vector<double>& heap, double& bound) {
        const auto n = static_cast<std::ptrdiff_t>(heap.size());
        if (n < k) {
            heap.push_back(d);
            if (n + 1 == k) {
                std::make_heap(heap.begin(), heap.end());
                bound = heap.front();
            }
            return;
        }
        // Replace the top and sift down once.
        std::ptrdiff_t i = 0;
        for (;;) {
            std::ptrdiff_t c = 2 * i + 1;
            if (c >= n) break;
            if (c + 1 < n && heap[c + 1] > heap[c]) ++c;
            if (heap[c] <= d) break;
            heap[i] = heap[c];
            i = c;
        }
        heap[i] = d;
        bound = heap.front();
    }

    std::vector<Point2> pts_;
    std::vector<std::uint8_t> axis_;
};

} // namespace corrchord
