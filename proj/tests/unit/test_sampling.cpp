#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "corrchord/ensemble/partition.hpp"
#include "corrchord/ensemble/synthetic.hpp"
#include "corrchord/sampling/bench.hpp"
#include "corrchord/sampling/direct.hpp"
#include "corrchord/sampling/gp.hpp"
#include "corrchord/sampling/pair.hpp"
#include "corrchord/sampling/rounding.hpp"
#include "corrchord/sampling/search.hpp"
#include "corrchord/sampling/sequences.hpp"
#include "oracles.hpp"

using namespace corrchord;

TEST(Halton, RadicalInverse) {
    EXPECT_DOUBLE_EQ(halton(1, 2), 0.5);
    EXPECT_DOUBLE_EQ(halton(2, 2), 0.25);
    EXPECT_DOUBLE_EQ(halton(3, 2), 0.75);
    EXPECT_DOUBLE_EQ(halton(1, 3), 1.0 / 3.0);
    EXPECT_NEAR(halton(5, 3), 2.0 / 3.0 + 1.0 / 9.0, 1e-15);
    for (std::uint64_t i = 1; i < 5000; i += 7)
        for (auto b : kHaltonBases) {
            const double v = halton(i, b);
            ASSERT_GE(v, 0.0);
            ASSERT_LT(v, 1.0);
        }
    EXPECT_THROW((void)halton(1, 1), RangeError);
}

TEST(Plastic, ConstantsAndAdditiveRecurrence) {
    EXPECT_NEAR(plastic_constant(1), (1 + std::sqrt(5.0)) / 2, 1e-14);
    EXPECT_NEAR(plastic_point(1, 1)[0], 0.6180339887498949, 1e-14);
    for (int d = 1; d <= 6; ++d) EXPECT_NEAR(plastic_constant(d), oracle::plastic_root(d), 1e-12);
    const double r2 = oracle::plastic_root(2);
    const auto p = plastic_point(1, 2);
    EXPECT_NEAR(p[0], 1 / r2, 1e-12);
    EXPECT_NEAR(p[1], 1 / (r2 * r2), 1e-12);
    EXPECT_NEAR(p[0], 0.7548776662, 1e-9);
    EXPECT_NEAR(p[1], 0.5698402910, 1e-9);
    for (std::uint64_t n = 1; n < 200; ++n) {
        const auto a = plastic_point(n, 6), b = plastic_point(n + 1, 6), one = plastic_point(1, 6);
        for (int k = 0; k < 6; ++k) {
            double diff = b[k] - a[k];
            diff -= std::floor(diff);
            ASSERT_NEAR(std::min(std::abs(diff - one[k]), 1 - std::abs(diff - one[k])), 0.0, 1e-9);
            ASSERT_GE(a[k], 0.0);
            ASSERT_LT(a[k], 1.0);
        }
    }
}

TEST(BernoulliRound, IntegerFractionalAndBoundary) {
    std::mt19937_64 rng(3);
    const std::vector<std::int64_t> ext{10};
    std::vector<std::int64_t> out(1);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> t{2.0};
        bernoulli_round(std::span<const double>(t), std::span<const std::int64_t>(ext), rng, std::span<std::int64_t>(out));
        ASSERT_EQ(out[0], 2);
        const std::vector<double> e{9.0};
        bernoulli_round(std::span<const double>(e), std::span<const std::int64_t>(ext), rng, std::span<std::int64_t>(out));
        ASSERT_EQ(out[0], 9);
    }
    const int N = 100000;
    for (double theta : {2.5, 0.1, 7.83}) {
        double sum = 0;
        for (int i = 0; i < N; ++i) {
            const std::vector<double> t{theta};
            bernoulli_round(std::span<const double>(t), std::span<const std::int64_t>(ext), rng, std::span<std::int64_t>(out));
            ASSERT_TRUE(out[0] == std::int64_t(std::floor(theta)) || out[0] == std::int64_t(std::floor(theta)) + 1);
            sum += double(out[0]);
        }
        const double frac = theta - std::floor(theta);
        const double se = std::sqrt(frac * (1 - frac) / N);
        EXPECT_NEAR(sum / N, theta, std::min(0.01, 3 * se + 1e-12)) << theta;
    }
}

namespace {

GPModel random_gp(int dim, int n, std::uint64_t seed, GPKernel k = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u;
    GPModel gp(dim, k, 0.3);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int i = 0; i < n; ++i) {
        for (auto& v : x) v = u(rng);
        gp.add(x, std::sin(6 * x[0]) + u(rng));
    }
    return gp;
}

} // namespace

TEST(GP, InterpolatesObservations) {
    GPKernel k;
    k.noise = 1e-12;
    GPModel gp(2, k);
    const std::vector<std::vector<double>> xs{{0.1, 0.2}, {0.8, 0.4}, {0.5, 0.9}};
    const std::vector<double> ys{1.5, -0.3, 0.7};
    for (std::size_t i = 0; i < xs.size(); ++i) gp.add(xs[i], ys[i]);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto p = gp.predict(xs[i]);
        EXPECT_NEAR(p.mean, ys[i], 1e-6);
        EXPECT_LE(p.variance, 1e-6);
    }
}

TEST(GP, ConditioningReducesVariance) {
    const auto gp = random_gp(3, 25, 4);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u;
    for (int t = 0; t < 200; ++t) {
        const std::vector<double> x{u(rng), u(rng), u(rng)};
        const auto p = gp.predict(x);
        EXPECT_GE(p.variance, 0.0);
        EXPECT_LE(p.variance, gp.kernel().signal_variance + 1e-12);
    }
}

TEST(GP, MirroredObservationsGiveSymmetricMean) {
    GPModel gp(2, GPKernel{}, 0.0);
    gp.add(std::vector<double>{0.3, 0.6}, 1.0);
    gp.add(std::vector<double>{0.7, 0.4}, 1.0);  // reflection through (0.5, 0.5)
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> x{u(rng), u(rng)}, r{1 - x[0], 1 - x[1]};
        EXPECT_NEAR(gp.predict(x).mean, gp.predict(r).mean, 1e-8);
        EXPECT_NEAR(gp.predict(x).variance, gp.predict(r).variance, 1e-8);
    }
}

TEST(GP, IncrementalEqualsFullRefit) {
    for (auto nu : {MaternNu::FiveHalves, MaternNu::ThreeHalves}) {
        GPKernel k;
        k.nu = nu;
        const auto inc = random_gp(6, 120, 12, k);
        auto full = inc;
        full.refit();
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> u;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> x(6);
            for (auto& v : x) v = u(rng);
            const auto a = inc.predict(x), b = full.predict(x);
            EXPECT_NEAR(a.mean, b.mean, 1e-8);
            EXPECT_NEAR(a.variance, b.variance, 1e-8);
        }
    }
}

TEST(GP, JitterEscalatesOnRepeatedInput) {
    GPKernel k;
    k.noise = 0.0;
    GPModel gp(2, k);
    gp.add(std::vector<double>{0.5, 0.5}, 1.0);
    gp.add(std::vector<double>{0.5, 0.5}, 1.0);
    EXPECT_GE(gp.jitter(1), 1e-10);
    EXPECT_LE(gp.jitter(1), 1e-6 * 1.0001);
    EXPECT_TRUE(std::isfinite(gp.predict(std::vector<double>{0.2, 0.3}).mean));
    EXPECT_THROW(gp.add(std::vector<double>{0.1, 0.1}, std::nan("")), RangeError);
}

TEST(Ucb, Arithmetic) {
    EXPECT_DOUBLE_EQ(ucb_score(1, 4, 2), 5.0);
    EXPECT_DOUBLE_EQ(ucb_score(-0.3, 0, 7), -0.3);
    EXPECT_DOUBLE_EQ(ucb_score(0.4, 9, 0), 0.4);
}

TEST(Direct, BudgetOfOneReturnsTheCenter) {
    std::mt19937_64 rng(1);
    const auto r = direct_l_maximize([](std::span<const double> x) { return -x[0]; }, 3, 1, rng);
    EXPECT_EQ(r.evaluations, 1);
    EXPECT_EQ(r.x, (std::vector<double>{0.5, 0.5, 0.5}));
    EXPECT_DOUBLE_EQ(r.value, -0.5);
}

TEST(Direct, ReturnsBestProbedAndRespectsBudget) {
    std::mt19937_64 rng(5);
    double best = -1e300;
    int calls = 0;
    const auto f = [&](std::span<const double> x) {
        ++calls;
        const double v = -std::pow(x[0] - 0.3, 2) - std::pow(x[1] - 0.77, 2) + 0.1 * std::sin(20 * x[0]);
        best = std::max(best, v);
        return v;
    };
    const auto r = direct_l_maximize(f, 2, 300, rng);
    EXPECT_EQ(calls, 300);
    EXPECT_EQ(r.value, best);
}

TEST(Direct, DeterministicPerSeed) {
    const auto f = [](std::span<const double> x) { return std::cos(9 * x[0]) * std::sin(7 * x[1]) + x[2]; };
    std::mt19937_64 a(3), b(3);
    EXPECT_EQ(direct_l_maximize(f, 3, 200, a).x, direct_l_maximize(f, 3, 200, b).x);
}

TEST(Acquisition, ExploresAwayFromASingleObservation) {
    for (int d : {2, 3, 6}) {
        GPModel gp(d, GPKernel{}, 0.0);
        gp.add(std::vector<double>(static_cast<std::size_t>(d), 0.5), 1.0);
        std::mt19937_64 rng(d);
        const auto r = maximize_acquisition(gp, 100.0, 500, rng);
        double dist = 0;
        for (double v : r.x) dist += (v - 0.5) * (v - 0.5);
        EXPECT_GE(std::sqrt(dist), 0.25 * std::sqrt(double(d))) << "d=" << d;
    }
}

TEST(Acquisition, FindsParaboloidMaximumOfPosterior) {
    // Posterior mean of a GP fit to a paraboloid, compared with a dense-grid oracle.
    const std::int64_t D = 32;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.2, 0.8), v(0, 1);
        const double cx = u(rng), cy = u(rng);
        GPModel gp(2, GPKernel{MaternNu::FiveHalves, 0.1, 0.25, 1e-6}, 0.0);
        for (int i = 0; i < 40; ++i) {
            const std::vector<double> x{v(rng), v(rng)};
            gp.add(x, 1.0 - (x[0] - cx) * (x[0] - cx) - (x[1] - cy) * (x[1] - cy));
        }
        const auto r = maximize_acquisition(gp, 0.0, 500, rng);
        double best = -1e300;
        std::array<double, 2> arg{};
        const int G = 8 * (D - 1);
        for (int i = 0; i <= G; ++i)
            for (int j = 0; j <= G; ++j) {
                const std::vector<double> x{double(i) / G, double(j) / G};
                const double m = gp.predict(x).mean;
                if (m > best) {
                    best = m;
                    arg = {x[0], x[1]};
                }
            }
        EXPECT_LE(std::abs(r.x[0] - arg[0]) * (D - 1), 1.0);
        EXPECT_LE(std::abs(r.x[1] - arg[1]) * (D - 1), 1.0);
        EXPECT_GE(r.value, best - 1e-6);
    }
}

namespace {

// Tiny 2x2x1 bricks: pair (1,0,0)-(0,1,0) has the highest objective.
std::optional<double> tiny_objective(const Index6& p) {
    if (p == Index6{1, 0, 0, 0, 1, 0}) return 1.0;
    return 0.1 * double(p[0] + p[1] + p[3] + p[4]) / 4.0;
}

SearchDomain6 tiny_domain() {
    SearchDomain6 d;
    d.extent = {2, 2, 1, 2, 2, 1};
    return d;
}

} // namespace

TEST(MaximizeDiscrete, TinyBricksAreEnumerated) {
    for (auto s : {Strategy::UniformRandom, Strategy::Halton, Strategy::Plastic, Strategy::Bos}) {
        StrategyConfig c;
        c.strategy = s;
        c.budget = 16;
        const auto e = maximize_discrete(tiny_domain(), tiny_objective, c);
        EXPECT_DOUBLE_EQ(e.value, 1.0);
        EXPECT_EQ(e.argmax, (Index6{1, 0, 0, 0, 1, 0}));
        EXPECT_EQ(e.strategy, Strategy::Exhaustive);
        EXPECT_EQ(e.samples_used, 16);
    }
}

TEST(MaximizeDiscrete, ZeroBudgetIsAnError) {
    StrategyConfig c;
    c.budget = 0;
    EXPECT_THROW((void)maximize_discrete(tiny_domain(), tiny_objective, c), RangeError);
}

namespace {

SearchDomain6 mid_domain() {
    SearchDomain6 d;
    d.extent = {9, 7, 1, 8, 5, 3};
    return d;
}

double bumpy(const Index6& p) {
    double s = 0;
    for (int a = 0; a < 6; ++a) s += std::sin(0.9 * double(p[a]) + a) * (a + 1);
    return s;
}

} // namespace

TEST(MaximizeDiscrete, MonotoneInBudgetAndInsideDomain) {
    const auto dom = mid_domain();
    for (auto s : {Strategy::UniformRandom, Strategy::Halton, Strategy::Plastic, Strategy::Bos}) {
        double prev = -1e300;
        for (int b : {5, 17, 30, 60, 90}) {
            StrategyConfig c;
            c.strategy = s;
            c.budget = b;
            c.acq_budget = 150;
            std::set<std::int64_t> seen;
            const auto f = [&](const Index6& p) -> std::optional<double> {
                for (int a = 0; a < 6; ++a) {
                    EXPECT_GE(p[a], 0);
                    EXPECT_LT(p[a], dom.extent[a]);
                }
                EXPECT_TRUE(seen.insert(dom.linear(p)).second) << "pair evaluated twice";
                return bumpy(p);
            };
            const auto e = maximize_discrete(dom, f, c);
            EXPECT_LE(e.samples_used, b);
            EXPECT_GE(e.value, prev) << to_string(s) << " budget " << b;
            EXPECT_DOUBLE_EQ(e.value, bumpy(e.argmax));
            EXPECT_EQ(e.uncertainty.has_value(), s == Strategy::Bos);
            prev = e.value;
        }
    }
}

TEST(MaximizeDiscrete, ReproduciblePerSeed) {
    StrategyConfig c;
    c.budget = 40;
    c.acq_budget = 200;
    const auto f = [](const Index6& p) -> std::optional<double> { return bumpy(p); };
    const auto a = maximize_discrete(mid_domain(), f, c);
    const auto b = maximize_discrete(mid_domain(), f, c);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.argmax, b.argmax);
    EXPECT_EQ(a.uncertainty, b.uncertainty);
    c.seed = 7;
    c.strategy = Strategy::UniformRandom;
    const auto r1 = maximize_discrete(mid_domain(), f, c);
    const auto r2 = maximize_discrete(mid_domain(), f, c);
    EXPECT_EQ(r1.argmax, r2.argmax);
}

TEST(MaximizeDiscrete, UndefinedPairsAreSkippedUpToTheAttemptCap) {
    StrategyConfig c;
    c.strategy = Strategy::UniformRandom;
    c.budget = 20;
    int calls = 0;
    const auto half = [&](const Index6& p) -> std::optional<double> {
        ++calls;
        if (p[0] % 2) return std::nullopt;
        return bumpy(p);
    };
    const auto e = maximize_discrete(mid_domain(), half, c);
    EXPECT_EQ(e.samples_used, 20);
    EXPECT_LE(e.attempts, 60);
    const auto none = [&](const Index6&) -> std::optional<double> { return std::nullopt; };
    calls = 0;
    EXPECT_THROW((void)maximize_discrete(mid_domain(), none, c), DegenerateError);
}

TEST(ChooseStrategy, PolicyExamples) {
    EXPECT_EQ(choose_strategy({32, 32, 20}, {32, 32, 20}), Strategy::Bos);
    EXPECT_EQ(choose_strategy({8, 8, 5}, {8, 8, 5}), Strategy::UniformRandom);
    EXPECT_EQ(choose_strategy({4, 4, 4}, {4, 4, 4}), Strategy::Exhaustive);
    EXPECT_EQ(choose_strategy({16, 16, 16}, {16, 16, 16}), Strategy::Bos);
}

TEST(EstimatePairMaximum, SyntheticClusterPartsReachOne) {
    const EnsembleStore store(gen_synthetic(two_cluster_spec({32, 32, 4}, 40, 42)));
    const auto part = partition_by_edge(store.grid().dims(), 8);
    // Brick containing the first cluster core and one containing the second.
    PairQuery q;
    q.a = part.brick_box(Coord3{1, 1, 0});
    q.b = part.brick_box(Coord3{2, 2, 0});
    StrategyConfig c;
    c.budget = 100;
    const auto e = estimate_pair_maximum(store, q, c);
    EXPECT_NEAR(e.strength, 1.0, 1e-6);
    EXPECT_NEAR(e.value, 1.0, 1e-6);
    EXPECT_TRUE(q.a.contains(e.cell_a));
    EXPECT_TRUE(q.b.contains(e.cell_b));
    q.measure = MeasureKind::Kmi;
    c.budget = 30;
    const auto m = estimate_pair_maximum(store, q, c);
    EXPECT_GT(m.strength, 0.5);
}

TEST(EstimatePairMaximum, AggregateLevelUsesCells) {
    const EnsembleStore store(gen_synthetic(two_cluster_spec({16, 16, 2}, 12, 1)));
    PairQuery q;
    q.a = VoxelBox{{0, 0, 0}, {8, 8, 2}};
    q.b = VoxelBox{{8, 8, 0}, {16, 16, 2}};
    q.level = 1;
    StrategyConfig c;
    c.budget = 16 * 16;  // 4x4x1 cells per brick: exhaustive
    const auto e = estimate_pair_maximum(store, q, c);
    EXPECT_EQ(e.search.strategy, Strategy::Exhaustive);
    EXPECT_LT(e.cell_a.x, 4);
    EXPECT_GE(e.cell_b.x, 4);
}

TEST(Gaussian6, ExtremaMatchEnumeration) {
    SearchDomain6 dom;
    dom.extent = {4, 3, 2, 5, 1, 3};
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        const auto g = random_gaussian6(dom, rng);
        double mx = -1, mn = 2;
        for (std::int64_t l = 0; l < dom.size(); ++l) {
            const double v = g(dom.unlinear(l));
            mx = std::max(mx, v);
            mn = std::min(mn, v);
        }
        EXPECT_DOUBLE_EQ(g.max_value(), mx);
        EXPECT_DOUBLE_EQ(g.min_value(), mn);
    }
}

TEST(BenchGaussian6, FullEnumerationHasZeroErrorAndCsv) {
    BenchConfig c;
    c.brick = {2, 2, 1};
    c.pairs = 3;
    c.runs = 2;
    c.budgets = {4, 16};
    const auto rows = bench_gaussian6(c);
    EXPECT_EQ(rows.size(), 3u * 2u * 4u * 2u);
    for (const auto& r : rows) {
        EXPECT_GE(r.normalized_error, 0.0);
        EXPECT_LE(r.normalized_error, 1.0);
        if (r.budget == 16) EXPECT_EQ(r.normalized_error, 0.0);
    }
    std::ostringstream os;
    write_bench_csv(os, rows);
    EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "strategy,budget,run,pair_id,normalized_error,elapsed_ms");
}

TEST(BenchDataset, ExhaustiveTruthAndErrorRange) {
    const EnsembleStore store(gen_synthetic(two_cluster_spec({16, 16, 2}, 20, 3)));
    const auto part = partition_by_edge(store.grid().dims(), 4);
    BenchConfig c;
    c.pairs = 4;
    c.runs = 2;
    c.budgets = {10, 50};
    c.base.acq_budget = 100;
    const auto rows = bench_dataset(store, part, PairQuery{}, c);
    ASSERT_FALSE(rows.empty());
    for (const auto& r : rows) {
        EXPECT_GE(r.normalized_error, 0.0);
        EXPECT_LE(r.normalized_error, 1.0);
    }
}

TEST(AggregateFidelity, SmokeOnSmallGrid) {
    const EnsembleStore store(gen_synthetic(two_cluster_spec({32, 32, 4}, 30, 3)));
    const auto part = partition_by_edge(store.grid().dims(), 8);
    StrategyConfig c;
    c.budget = 30;
    c.acq_budget = 100;
    const auto r = aggregate_fidelity(store, part, PairQuery{}, 1, 3, 2, c);
    EXPECT_EQ(r.raw_mean.size(), 3u);
    EXPECT_GE(r.mean_relative_deviation, 0.0);
    EXPECT_THROW((void)aggregate_fidelity(store, part, PairQuery{}, 0, 1, 1, c), RangeError);
}
