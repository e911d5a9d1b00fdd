#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/sampling/gp.hpp"

namespace corrchord {

struct DirectResult {
    std::vector<double> x;
    double value = -std::numeric_limits<double>::infinity();
    int evaluations = 0;
};

/**
 * Maximize f over [0,1]^dim with a locally biased dividing-rectangles search.
 *
 * Rectangles are grouped by their longest side and only the best one per group
 * is a candidate; candidates on the lower convex hull of (size, -f) pass the
 * usual epsilon test and are trisected along one of their longest sides, picked
 * at random. Ties between equally good rectangles are also broken at random.
 * Stops after `max_evals` evaluations of f.
 */
template <typename F, typename Rng>
DirectResult direct_l_maximize(F&& f, int dim, int max_evals, Rng& rng, double eps = 1e-4) {
    if (max_evals < 1) throw RangeError("direct: evaluation budget must be >= 1");
    constexpr int kMaxLevel = 30;
    const auto D = static_cast<std::size_t>(dim);
    // Flat storage: center and per-axis level (side = 3^-level) of every rectangle.
    std::vector<double> centers;
    std::vector<std::int8_t> levels;
    std::vector<double> fval;     // negated objective, minimized
    std::vector<int> minlev;
    centers.reserve(D * static_cast<std::size_t>(max_evals));
    levels.reserve(D * static_cast<std::size_t>(max_evals));

    DirectResult best;
    std::vector<double> point(D);
    const auto eval = [&](const double* c, const std::int8_t* lv) {
        point.assign(c, c + D);
        const double v = f(std::span<const double>(point));
        ++best.evaluations;
        if (v > best.value || best.x.empty()) {
            best.value = v;
            best.x = point;
        }
        centers.insert(centers.end(), c, c + D);
        levels.insert(levels.end(), lv, lv + D);
        fval.push_back(-v);
        minlev.push_back(D ? int(*std::min_element(lv, lv + D)) : 0);
    };
    {
        std::vector<double> c0(D, 0.5);
        std::vector<std::int8_t> l0(D, 0);
        eval(c0.data(), l0.data());
    }
    if (dim == 0) return best;

    const auto size_of = [](int lvl) { return 0.5 * std::pow(3.0, -lvl); };
    std::array<std::int64_t, kMaxLevel + 1> group{};
    std::array<int, kMaxLevel + 1> ties{};
    std::vector<std::pair<int, std::size_t>> cand;  // (min_level, rect), by increasing size
    std::vector<std::size_t> hull, picks;
    std::vector<double> child(D);
    std::vector<std::int8_t> child_lv(D);
    std::vector<int> longest;
    while (best.evaluations < max_evals) {
        // Best rectangle per size class; equal values are picked uniformly.
        group.fill(-1);
        ties.fill(0);
        for (std::size_t r = 0; r < fval.size(); ++r) {
            const int g = minlev[r];
            if (g >= kMaxLevel) continue;
            if (group[g] < 0 || fval[r] < fval[group[g]]) {
                group[g] = static_cast<std::int64_t>(r);
                ties[g] = 1;
            } else if (fval[r] == fval[group[g]]) {
                if (std::uniform_int_distribution<int>(0, ties[g])(rng) == 0) group[g] = static_cast<std::int64_t>(r);
                ++ties[g];
            }
        }
        cand.clear();
        for (int g = kMaxLevel; g >= 0; --g)
            if (group[g] >= 0) cand.emplace_back(g, static_cast<std::size_t>(group[g]));
        if (cand.empty()) break;
        // Lower convex hull of (size, f) starting at the lowest f.
        std::size_t start = 0;
        for (std::size_t i = 1; i < cand.size(); ++i)
            if (fval[cand[i].second] <= fval[cand[start].second]) start = i;
        const double fmin = fval[cand[start].second];
        hull.clear();
        for (std::size_t i = start; i < cand.size(); ++i) {
            const double xi = size_of(cand[i].first), yi = fval[cand[i].second];
            while (hull.size() >= 2) {
                const auto& a = cand[hull[hull.size() - 2]];
                const auto& b = cand[hull.back()];
                const double xa = size_of(a.first), ya = fval[a.second];
                const double xb = size_of(b.first), yb = fval[b.second];
                // Drop b if it lies on or above the segment a -> i.
                if ((yb - ya) * (xi - xa) >= (yi - ya) * (xb - xa)) hull.pop_back();
                else break;
            }
            hull.push_back(i);
        }
        picks.clear();
        for (std::size_t h = 0; h < hull.size(); ++h) {
            const auto& c = cand[hull[h]];
            if (h + 1 < hull.size()) {
                const auto& nx = cand[hull[h + 1]];
                const double K = (fval[nx.second] - fval[c.second]) / (size_of(nx.first) - size_of(c.first));
                if (fval[c.second] - K * size_of(c.first) > fmin - eps * std::abs(fmin)) continue;
            }
            picks.push_back(c.second);
        }
        if (picks.empty()) picks.push_back(cand.back().second);

        for (const auto r : picks) {
            if (best.evaluations >= max_evals) break;
            const int ml = minlev[r];
            std::int8_t* lv = levels.data() + r * D;
            longest.clear();
            for (int a = 0; a < dim; ++a)
                if (lv[a] == ml) longest.push_back(a);
            const int axis = longest[std::uniform_int_distribution<std::size_t>(0, longest.size() - 1)(rng)];
            const double delta = std::pow(3.0, -(ml + 1));
            lv[axis] = static_cast<std::int8_t>(lv[axis] + 1);
            minlev[r] = int(*std::min_element(lv, lv + D));
            child_lv.assign(lv, lv + D);
            const double* c = centers.data() + r * D;
            child.assign(c, c + D);
            child[axis] -= delta;
            eval(child.data(), child_lv.data());
            if (best.evaluations >= max_evals) break;
            // eval() may have reallocated; re-read the parent center.
            child.assign(centers.data() + r * D, centers.data() + r * D + D);
            child[axis] += delta;
            eval(child.data(), child_lv.data());
        }
    }
    return best;
}

/// Maximize the UCB score of a GP posterior over [0,1]^dim.
template <typename Rng>
DirectResult maximize_acquisition(const GPModel& model, double kappa, int acq_budget, Rng& rng) {
    if (model.size() == 0) throw RangeError("acquisition: model has no observations");
    std::vector<double> kv, v;
    return direct_l_maximize(
        [&](std::span<const double> x) {
            const auto p = model.predict(x, kv, v);
            return ucb_score(p.mean, p.variance, kappa);
        },
        model.dim(), acq_budget, rng);
}

} // namespace corrchord
