#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "corrchord/core/error.hpp"
#include "corrchord/sampling/direct.hpp"
#include "corrchord/sampling/gp.hpp"
#include "corrchord/sampling/rounding.hpp"
#include "corrchord/sampling/sequences.hpp"

namespace corrchord {

enum class Strategy { UniformRandom, Halton, Plastic, Bos, Exhaustive };

inline std::string to_string(Strategy s) {
    switch (s) {
    case Strategy::UniformRandom: return "random";
    case Strategy::Halton: return "halton";
    case Strategy::Plastic: return "plastic";
    case Strategy::Bos: return "bos";
    case Strategy::Exhaustive: return "exhaustive";
    }
    return "?";
}

inline Strategy parse_strategy(const std::string& s) {
    if (s == "random" || s == "uniform") return Strategy::UniformRandom;
    if (s == "halton") return Strategy::Halton;
    if (s == "plastic") return Strategy::Plastic;
    if (s == "bos") return Strategy::Bos;
    if (s == "exhaustive") return Strategy::Exhaustive;
    throw DataError("unknown strategy '" + s + "' (expected random, halton, plastic, bos or exhaustive)");
}

struct StrategyConfig {
    Strategy strategy = Strategy::Bos;
    int budget = 100;
    int init_count = 16;
    double kappa = 2.0;
    int acq_budget = 500;
    std::uint64_t seed = 42;
    GPKernel kernel{};          ///< signal_variance is replaced by the warm-up variance
    bool record_trace = false;
};

using Index6 = std::array<std::int64_t, 6>;

inline constexpr int kRoundingRetries = 4;
inline constexpr int kMaxRepeatedProposals = 1;

/// Discrete search space of voxel pairs; axes with extent 1 are fixed.
struct SearchDomain6 {
    Index6 extent{1, 1, 1, 1, 1, 1};

    std::int64_t size() const noexcept {
        std::int64_t n = 1;
        for (auto e : extent) n *= e;
        return n;
    }
    std::vector<int> free_axes() const {
        std::vector<int> a;
        for (int i = 0; i < 6; ++i)
            if (extent[i] > 1) a.push_back(i);
        return a;
    }
    std::int64_t linear(const Index6& p) const noexcept {
        std::int64_t l = 0;
        for (int i = 5; i >= 0; --i) l = l * extent[i] + p[i];
        return l;
    }
    Index6 unlinear(std::int64_t l) const noexcept {
        Index6 p{};
        for (int i = 0; i < 6; ++i) {
            p[i] = l % extent[i];
            l /= extent[i];
        }
        return p;
    }
};

struct MaxEstimate {
    double value = -std::numeric_limits<double>::infinity();  ///< best objective value seen
    Index6 argmax{};
    int samples_used = 0;
    int attempts = 0;       ///< objective calls including degenerate ones
    int duplicates = 0;     ///< proposals that hit an already evaluated pair
    Strategy strategy = Strategy::Bos;
    double elapsed = 0.0;   ///< seconds
    std::optional<double> uncertainty;
    std::vector<double> trace_best;  ///< running maximum after each used sample
    std::vector<double> trace_ms;
};

/**
 * Search the maximum of a discrete objective over a 6-D index domain.
 *
 * `objective(Index6)` returns std::nullopt where the measure is undefined;
 * those pairs do not count against the budget, but at most 3 * budget
 * objective calls are made. With budget >= domain size every pair is
 * enumerated regardless of the strategy. The first b samples of a run do not
 * depend on the budget, so the result is monotone in the budget.
 */
template <typename Objective>
MaxEstimate maximize_discrete(const SearchDomain6& dom, Objective&& objective, const StrategyConfig& cfg) {
    if (cfg.budget <= 0) throw RangeError("sampling: budget must be positive");
    for (auto e : dom.extent)
        if (e < 1) throw RangeError("sampling: empty search domain");
    const auto t0 = std::chrono::steady_clock::now();
    MaxEstimate est;
    est.strategy = cfg.strategy;
    const int budget = cfg.budget;
    const int max_attempts = 3 * budget;
    std::unordered_map<std::int64_t, std::optional<double>> cache;

    const auto record = [&](const Index6& p, double v) {
        ++est.samples_used;
        if (v > est.value || est.samples_used == 1) {
            est.value = v;
            est.argmax = p;
        }
        if (cfg.record_trace) {
            est.trace_best.push_back(est.value);
            est.trace_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        }
    };
    // Evaluates a pair not seen before; nullopt for repeats and undefined values.
    const auto visit = [&](const Index6& p) -> std::optional<double> {
        const auto key = dom.linear(p);
        if (cache.count(key)) {
            ++est.duplicates;
            return std::nullopt;
        }
        ++est.attempts;
        std::optional<double> v = objective(p);
        if (v && !std::isfinite(*v)) v.reset();
        cache.emplace(key, v);
        if (v) record(p, *v);
        return v;
    };
    const auto done = [&] { return est.samples_used >= budget || est.attempts >= max_attempts; };
    const int proposal_cap = 20 * budget + 64;
    int proposals = 0;

    const auto finish = [&] {
        est.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (est.samples_used == 0) throw DegenerateError("sampling: no sampled pair had a defined measure");
        return est;
    };

    if (static_cast<std::int64_t>(budget) >= dom.size()) {
        est.strategy = Strategy::Exhaustive;
        for (std::int64_t l = 0; l < dom.size(); ++l) visit(dom.unlinear(l));
        return finish();
    }

    const auto free = dom.free_axes();
    const int d = static_cast<int>(free.size());
    std::mt19937_64 rng(cfg.seed);
    const auto random_index = [&] {
        Index6 p{};
        for (int a : free) p[a] = std::uniform_int_distribution<std::int64_t>(0, dom.extent[a] - 1)(rng);
        return p;
    };
    const auto from_unit = [&](const auto& u) {
        Index6 p{};
        for (int j = 0; j < d; ++j) {
            const int a = free[j];
            p[a] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(u[j] * double(dom.extent[a]))), dom.extent[a] - 1);
        }
        return p;
    };

    switch (cfg.strategy) {
    case Strategy::Exhaustive:
        throw RangeError("sampling: exhaustive strategy needs budget >= domain size (" + std::to_string(dom.size()) + ")");
    case Strategy::UniformRandom:
        while (!done() && proposals++ < proposal_cap) visit(random_index());
        break;
    case Strategy::Halton:
        for (std::uint64_t n = 1; !done() && proposals++ < proposal_cap; ++n) {
            std::vector<double> u(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) u[j] = halton(n, kHaltonBases[static_cast<std::size_t>(j)]);
            visit(from_unit(u));
        }
        break;
    case Strategy::Plastic:
        for (std::uint64_t n = 1; !done() && proposals++ < proposal_cap; ++n) visit(from_unit(plastic_point(n, d)));
        break;
    case Strategy::Bos: {
        const int init = std::min(cfg.init_count, budget);
        while (est.samples_used < init && !done() && proposals++ < proposal_cap) visit(random_index());
        // Observations live on normalized coordinates of the free axes.
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        const auto normalized = [&](const Index6& p) {
            std::vector<double> t(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) t[j] = double(p[free[j]]) / double(dom.extent[free[j]] - 1);
            return t;
        };
        for (const auto& [key, v] : cache)
            if (v) {
                xs.push_back(normalized(dom.unlinear(key)));
                ys.push_back(*v);
            }
        // unordered_map order is not portable; sort for reproducibility.
        std::vector<std::size_t> ord(xs.size());
        for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
        std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
        double mean = 0.0, var = 0.0;
        for (double y : ys) mean += y;
        if (!ys.empty()) mean /= double(ys.size());
        for (double y : ys) var += (y - mean) * (y - mean);
        if (ys.size() > 1) var /= double(ys.size() - 1);
        GPKernel kern = cfg.kernel;
        kern.signal_variance = var > 0.0 ? var : 1.0;
        GPModel gp(d, kern, mean);
        for (auto i : ord) gp.add(xs[i], ys[i]);

        std::vector<double> theta(static_cast<std::size_t>(d));
        std::vector<std::int64_t> ext(static_cast<std::size_t>(d)), q(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) ext[j] = dom.extent[free[j]];
        int consecutive_dups = 0;
        while (!done() && proposals++ < proposal_cap) {
            Index6 p{};
            if (consecutive_dups >= kMaxRepeatedProposals) {
                // Acquisition keeps proposing known pairs; try an unexplored one.
                bool found = false;
                for (int t = 0; t < 64 && !found; ++t) {
                    p = random_index();
                    found = !cache.count(dom.linear(p));
                }
                if (!found) break;
                consecutive_dups = 0;
            } else if (gp.size() == 0) {
                p = random_index();
            } else {
                const auto best = maximize_acquisition(gp, cfg.kappa, cfg.acq_budget, rng);
                for (int j = 0; j < d; ++j) theta[j] = best.x[j] * double(ext[j] - 1);
                // A repeated pair may round differently on a second draw.
                for (int r = 0; r < kRoundingRetries; ++r) {
                    bernoulli_round(std::span<const double>(theta), std::span<const std::int64_t>(ext), rng, std::span<std::int64_t>(q));
                    for (int j = 0; j < d; ++j) p[free[j]] = q[j];
                    if (!cache.count(dom.linear(p))) break;
                }
            }
            if (cache.count(dom.linear(p))) {
                ++est.duplicates;
                ++consecutive_dups;
                continue;
            }
            consecutive_dups = 0;
            if (const auto v = visit(p)) gp.add(normalized(p), *v);
        }
        if (est.samples_used > 0 && gp.size() > 0) est.uncertainty = std::sqrt(gp.predict(normalized(est.argmax)).variance);
        break;
    }
    }
    return finish();
}

} // namespace corrchord
