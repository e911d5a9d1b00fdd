#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <vector>

#include "corrchord/ensemble/partition.hpp"
#include "corrchord/sampling/pair.hpp"
#include "corrchord/sampling/search.hpp"

namespace corrchord {

/// Unnormalized axis-aligned 6-D Gaussian density over a voxel-pair domain.
struct Gaussian6 {
    SearchDomain6 domain;
    std::array<double, 6> mean{};
    std::array<double, 6> sigma{};

    double operator()(const Index6& p) const {
        double s = 0.0;
        for (int a = 0; a < 6; ++a) {
            const double z = (double(p[a]) - mean[a]) / sigma[a];
            s += z * z;
        }
        return std::exp(-0.5 * s);
    }
    /// Voxel nearest to the mean on every axis.
    Index6 argmax() const {
        Index6 p{};
        for (int a = 0; a < 6; ++a) p[a] = std::clamp<std::int64_t>(std::llround(mean[a]), 0, domain.extent[a] - 1);
        return p;
    }
    /// Corner farthest from the mean on every axis.
    Index6 argmin() const {
        Index6 p{};
        for (int a = 0; a < 6; ++a) p[a] = mean[a] < 0.5 * double(domain.extent[a] - 1) ? domain.extent[a] - 1 : 0;
        return p;
    }
    double max_value() const { return (*this)(argmax()); }
    double min_value() const { return (*this)(argmin()); }
};

struct Gaussian6Options {
    double sigma_lo = 0.15;  ///< per-axis standard deviation as a fraction of the extent
    double sigma_hi = 0.30;
};

template <typename Rng>
Gaussian6 random_gaussian6(const SearchDomain6& dom, Rng& rng, const Gaussian6Options& opt = {}) {
    Gaussian6 g;
    g.domain = dom;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int a = 0; a < 6; ++a) {
        const double hi = double(dom.extent[a] - 1);
        g.mean[a] = u(rng) * hi;
        g.sigma[a] = std::max(0.5, (opt.sigma_lo + (opt.sigma_hi - opt.sigma_lo) * u(rng)) * double(dom.extent[a]));
    }
    return g;
}

inline double normalized_error(double true_max, double true_min, double found) {
    if (!(true_max > true_min)) return 0.0;
    return std::clamp((true_max - found) / (true_max - true_min), 0.0, 1.0);
}

struct BenchRow {
    Strategy strategy;
    int budget;
    int run;
    int pair;
    double normalized_error;
    double elapsed_ms;
};

struct BenchConfig {
    std::vector<Strategy> strategies{Strategy::UniformRandom, Strategy::Halton, Strategy::Plastic, Strategy::Bos};
    std::vector<int> budgets{25, 50, 100, 200, 400};
    int runs = 10;
    int pairs = 50;
    std::uint64_t seed = 42;
    Dims3 brick{32, 32, 32};
    StrategyConfig base{};
    Gaussian6Options objective{};
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq s{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(a), std::uint32_t(b)};
    std::array<std::uint32_t, 2> out{};
    s.generate(out.begin(), out.end());
    return (std::uint64_t(out[0]) << 32) | out[1];
}

/// One search at the largest budget, read off at every requested budget.
template <typename Objective>
void bench_one(const SearchDomain6& dom, Objective&& f, double tmax, double tmin, Strategy s, const BenchConfig& cfg, int run, int pair,
               std::vector<BenchRow>& rows) {
    StrategyConfig sc = cfg.base;
    sc.strategy = s;
    sc.budget = *std::max_element(cfg.budgets.begin(), cfg.budgets.end());
    sc.seed = mix_seed(cfg.seed, std::uint64_t(run) + 1, std::uint64_t(pair) + 1);
    sc.record_trace = true;
    const auto est = maximize_discrete(dom, f, sc);
    for (int b : cfg.budgets) {
        const auto i = static_cast<std::size_t>(std::min<std::int64_t>(b, std::ssize(est.trace_best)) - 1);
        rows.push_back({s, b, run, pair, normalized_error(tmax, tmin, est.trace_best[i]), est.trace_ms[i]});
    }
}

} // namespace detail

/// Convergence of each strategy on random 6-D Gaussian objectives with known extrema.
inline std::vector<BenchRow> bench_gaussian6(const BenchConfig& cfg) {
    if (cfg.runs < 1 || cfg.pairs < 1 || cfg.budgets.empty()) throw RangeError("bench: runs, pairs and budgets must be non-empty");
    SearchDomain6 dom;
    for (int i = 0; i < 3; ++i) dom.extent[i] = dom.extent[3 + i] = cfg.brick[i];
    std::vector<BenchRow> rows;
    for (int pair = 0; pair < cfg.pairs; ++pair) {
        std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0, std::uint64_t(pair)));
        const auto g = random_gaussian6(dom, rng, cfg.objective);
        const double tmax = g.max_value(), tmin = g.min_value();
        const auto f = [&](const Index6& p) -> std::optional<double> { return g(p); };
        for (int run = 0; run < cfg.runs; ++run)
            for (auto s : cfg.strategies) detail::bench_one(dom, f, tmax, tmin, s, cfg, run, pair, rows);
    }
    return rows;
}

/// Same table on real brick pairs; extrema come from exhaustive enumeration, so
/// bricks must be small.
inline std::vector<BenchRow> bench_dataset(const EnsembleStore& store, const BrickPartition& part, const PairQuery& proto,
                                           const BenchConfig& cfg) {
    if (cfg.runs < 1 || cfg.pairs < 1 || cfg.budgets.empty()) throw RangeError("bench: runs, pairs and budgets must be non-empty");
    std::vector<BenchRow> rows;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::int64_t> pick(0, part.count() - 1);
    std::vector<float> sa(static_cast<std::size_t>(store.members())), sb(sa.size());
    KraskovWorkspace ws;
    for (int pair = 0; pair < cfg.pairs; ++pair) {
        PairQuery q = proto;
        q.a = part.brick_box(pick(rng));
        q.b = part.brick_box(pick(rng));
        const auto ba = box_at_level(q.a, q.level), bb = box_at_level(q.b, q.level);
        SearchDomain6 dom;
        for (int i = 0; i < 3; ++i) {
            dom.extent[i] = ba.extent()[i];
            dom.extent[3 + i] = bb.extent()[i];
        }
        // Table of every pair value; the strategies then read from it.
        std::vector<std::optional<double>> table(static_cast<std::size_t>(dom.size()));
        double tmax = -std::numeric_limits<double>::infinity(), tmin = std::numeric_limits<double>::infinity();
        for (std::int64_t l = 0; l < dom.size(); ++l) {
            const auto p = dom.unlinear(l);
            auto v = pair_measure(store, q, {ba.lo.x + p[0], ba.lo.y + p[1], ba.lo.z + p[2]}, {bb.lo.x + p[3], bb.lo.y + p[4], bb.lo.z + p[5]}, sa,
                                  sb, ws);
            if (v && q.measure == MeasureKind::Ppmcc && q.absolute) *v = std::abs(*v);
            table[static_cast<std::size_t>(l)] = v;
            if (v) {
                tmax = std::max(tmax, *v);
                tmin = std::min(tmin, *v);
            }
        }
        if (!(tmax >= tmin)) continue;
        const auto f = [&](const Index6& p) { return table[static_cast<std::size_t>(dom.linear(p))]; };
        for (int run = 0; run < cfg.runs; ++run)
            for (auto s : cfg.strategies) detail::bench_one(dom, f, tmax, tmin, s, cfg, run, pair, rows);
    }
    return rows;
}

/// Mean normalized error per (strategy, budget).
inline std::map<std::pair<Strategy, int>, double> summarize(const std::vector<BenchRow>& rows) {
    std::map<std::pair<Strategy, int>, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        auto& a = acc[{r.strategy, r.budget}];
        a.first += r.normalized_error;
        a.second += 1;
    }
    std::map<std::pair<Strategy, int>, double> out;
    for (const auto& [k, v] : acc) out[k] = v.first / v.second;
    return out;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
    os << "strategy,budget,run,pair_id,normalized_error,elapsed_ms\n";
    for (const auto& r : rows)
        os << to_string(r.strategy) << ',' << r.budget << ',' << r.run << ',' << r.pair << ',' << r.normalized_error << ',' << r.elapsed_ms << '\n';
}

struct FidelityResult {
    double mean_relative_deviation = 0.0;
    std::vector<double> raw_mean;   ///< per pair, averaged over runs
    std::vector<double> agg_mean;
    double seconds = 0.0;
};

/// Relative deviation of sampled maxima on mean aggregates at `level` versus raw data.
inline FidelityResult aggregate_fidelity(const EnsembleStore& store, const BrickPartition& part, const PairQuery& proto, int level, int pairs,
                                         int runs, const StrategyConfig& cfg) {
    if (level < 1 || level > store.max_level()) throw RangeError("fidelity: aggregate level out of range");
    const auto t0 = std::chrono::steady_clock::now();
    FidelityResult res;
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::int64_t> pick(0, part.count() - 1);
    double dev = 0.0;
    int counted = 0;
    for (int pair = 0; pair < pairs; ++pair) {
        PairQuery q = proto;
        q.a = part.brick_box(pick(rng));
        do q.b = part.brick_box(pick(rng));
        while (part.count() > 1 && q.b == q.a);
        double raw = 0.0, agg = 0.0;
        for (int run = 0; run < runs; ++run) {
            StrategyConfig sc = cfg;
            sc.seed = detail::mix_seed(cfg.seed, std::uint64_t(run) + 1, std::uint64_t(pair) + 1);
            q.level = 0;
            raw += estimate_pair_maximum(store, q, sc).strength;
            q.level = level;
            agg += estimate_pair_maximum(store, q, sc).strength;
        }
        raw /= runs;
        agg /= runs;
        res.raw_mean.push_back(raw);
        res.agg_mean.push_back(agg);
        if (raw != 0.0) {
            dev += std::abs(agg - raw) / std::abs(raw);
            ++counted;
        }
    }
    res.mean_relative_deviation = counted ? dev / counted : 0.0;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace corrchord
