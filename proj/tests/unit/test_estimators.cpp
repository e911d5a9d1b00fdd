#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "corrchord/ensemble/synthetic.hpp"
#include "corrchord/estimators/batch.hpp"
#include "corrchord/estimators/digamma.hpp"
#include "corrchord/estimators/kraskov.hpp"
#include "corrchord/estimators/ppmcc.hpp"
#include "oracles.hpp"

using namespace corrchord;

namespace {

std::vector<double> gaussian(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d;
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

std::pair<std::vector<double>, std::vector<double>> correlated(std::uint64_t seed, std::size_t n, double rho) {
    std::mt19937_64 rng(seed);
    auto x = gaussian(rng, n);
    auto z = gaussian(rng, n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = rho * x[i] + std::sqrt(1 - rho * rho) * z[i];
    return {x, y};
}

} // namespace

TEST(Ppmcc, WorkedExamples) {
    EXPECT_DOUBLE_EQ(ppmcc(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0);
    EXPECT_DOUBLE_EQ(ppmcc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}), -1.0);
    EXPECT_NEAR(ppmcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Ppmcc, Errors) {
    EXPECT_THROW((void)ppmcc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateError);
    EXPECT_THROW((void)ppmcc(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), RangeError);
    EXPECT_THROW((void)ppmcc(std::vector<double>{1}, std::vector<double>{1}), DegenerateError);
}

TEST(Ppmcc, MatchesDirectOracleSymmetricAndAffine) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> rho(-0.99, 0.99);
    for (int t = 0; t < 10000; ++t) {
        const auto [x, y] = correlated(rng(), 20 + t % 50, rho(rng));
        const double r = ppmcc(x, y);
        ASSERT_NEAR(r, oracle::pearson_direct(x, y), 1e-12);
        ASSERT_EQ(r, ppmcc(y, x));
        if (t % 100 == 0) {
            for (double a : {-3.5, 0.25, 7.0}) {
                std::vector<double> ax(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) ax[i] = a * x[i] + 11.0;
                EXPECT_NEAR(ppmcc(ax, y), (a > 0 ? 1 : -1) * r, 1e-12);
            }
        }
    }
}

TEST(Digamma, ReferenceValues) {
    EXPECT_NEAR(digamma(1.0), -0.5772156649015329, 1e-10);
    EXPECT_NEAR(digamma(2.0), 0.4227843350984671, 1e-10);
    EXPECT_NEAR(digamma(10.0), oracle::digamma_series(10.0), 1e-8);
    EXPECT_NEAR(digamma(0.5), -1.9635100260214235, 1e-10);
    EXPECT_THROW((void)digamma(0.0), DomainError);
    EXPECT_THROW((void)digamma(-1.5), DomainError);
}

TEST(Digamma, MatchesSeriesOracleOverRange) {
    double worst = 0;
    for (double lz = -3; lz <= 6.0; lz += 0.001) {
        const double z = std::pow(10.0, lz);
        worst = std::max(worst, std::abs(digamma(z) - oracle::digamma_series(z)));
    }
    for (int n = 1; n <= 2000; ++n) worst = std::max(worst, std::abs(digamma(n) - oracle::digamma_series(n)));
    EXPECT_LE(worst, 1e-8);
}

TEST(Knn, ThreePointsOnDiagonal) {
    const std::vector<double> x{0, 1, 2}, y{0, 1, 2};
    const auto set = make_joint_samples(std::span<const double>(x), std::span<const double>(y), 1);
    const auto r = knn_chebyshev(set);
    for (double e : r.eps) EXPECT_NEAR(e, 1.0, 1e-9);
    // Oracle on the same jittered points.
    std::vector<double> jx, jy;
    for (const auto& p : set.points) {
        jx.push_back(p.x);
        jy.push_back(p.y);
    }
    const auto o = oracle::knn_table(jx, jy, 1);
    EXPECT_EQ(r.eps, o.eps);
}

TEST(Knn, FarthestNeighbourAtKEqualsNMinusOne) {
    std::mt19937_64 rng(5);
    const auto x = gaussian(rng, 40), y = gaussian(rng, 40);
    const auto set = make_joint_samples(std::span<const double>(x), std::span<const double>(y), 39);
    const auto r = knn_chebyshev(set);
    for (std::size_t i = 0; i < 40; ++i) {
        double far = 0;
        for (std::size_t j = 0; j < 40; ++j) far = std::max(far, chebyshev(set.points[i], set.points[j]));
        EXPECT_EQ(r.eps[i], far);
    }
}

TEST(Knn, KdTreeMatchesOracleExactly) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 60; ++t) {
        const std::size_t n = 5 + rng() % 508;
        const int k = 1 + static_cast<int>(rng() % std::min<std::size_t>(n - 1, 40));
        auto x = gaussian(rng, n), y = gaussian(rng, n);
        if (t % 3 == 0)
            for (auto& v : x) v = std::round(v * 4);  // many ties before jitter
        const auto set = make_joint_samples(std::span<const double>(x), std::span<const double>(y), k);
        const auto tree = knn_chebyshev(set);
        const auto brute = knn_chebyshev_brute(set);
        std::vector<double> jx, jy;
        for (const auto& p : set.points) {
            jx.push_back(p.x);
            jy.push_back(p.y);
        }
        const auto o = oracle::knn_table(jx, jy, k);
        ASSERT_EQ(tree.eps, o.eps) << "n=" << n << " k=" << k;
        ASSERT_EQ(brute.eps, o.eps);
        ASSERT_EQ(std::vector<int>(tree.nx.begin(), tree.nx.end()), o.nx);
        ASSERT_EQ(std::vector<int>(tree.ny.begin(), tree.ny.end()), o.ny);
        ASSERT_EQ(std::vector<int>(brute.nx.begin(), brute.nx.end()), o.nx);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_GT(tree.eps[i], 0.0);
            EXPECT_GE(std::min(tree.nx[i], tree.ny[i]), k - 1);
            EXPECT_GE(std::max(tree.nx[i], tree.ny[i]), k);
        }
    }
}

TEST(Knn, RejectsBadK) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 0, 3, 2};
    EXPECT_THROW((void)make_joint_samples(std::span<const double>(x), std::span<const double>(y), 4), RangeError);
    EXPECT_THROW((void)make_joint_samples(std::span<const double>(x), std::span<const double>(y), 0), RangeError);
}

TEST(Kraskov, DefaultNeighbourOrder) {
    EXPECT_EQ(default_k(100), 3);
    EXPECT_EQ(default_k(1000), 30);
    EXPECT_EQ(default_k(101), 4);
    EXPECT_EQ(default_k(10), 1);
    EXPECT_EQ(default_k(4), 1);
}

TEST(Kraskov, FormulaFromOracleCounts) {
    std::mt19937_64 rng(8);
    const auto x = gaussian(rng, 200), y = gaussian(rng, 200);
    const int k = 6;
    const auto set = make_joint_samples(std::span<const double>(x), std::span<const double>(y), k, true);
    std::vector<double> jx, jy;
    for (const auto& p : set.points) {
        jx.push_back(p.x);
        jy.push_back(p.y);
    }
    const auto o = oracle::knn_table(jx, jy, k);
    double s = 0;
    for (std::size_t i = 0; i < 200; ++i) s += oracle::digamma_series(o.nx[i]) + oracle::digamma_series(o.ny[i]);
    const double expect = oracle::digamma_series(200) + oracle::digamma_series(k) - s / 200;
    EXPECT_NEAR(kraskov_mi(x, y, k), expect, 1e-8);
}

TEST(Kraskov, IndependentUniformNearZero) {
    double sum = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u;
        std::vector<double> x(1000), y(1000);
        for (auto& v : x) v = u(rng);
        for (auto& v : y) v = u(rng);
        sum += kraskov_mi(x, y);
    }
    EXPECT_LE(std::abs(sum / 20), 0.02);
}

TEST(Kraskov, GaussianClosedForm) {
    for (double rho : {0.0, 0.5, 0.9}) {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto [x, y] = correlated(1000 + seed, 1000, rho);
            sum += kraskov_mi(x, y);
        }
        EXPECT_NEAR(sum / 20, -0.5 * std::log(1 - rho * rho), 0.05) << "rho=" << rho;
    }
}

TEST(Kraskov, SymmetricAndAffineInvariant) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto [x, y] = correlated(seed, 300, 0.6);
        const double mi = kraskov_mi(x, y);
        EXPECT_EQ(mi, kraskov_mi(y, x));
        std::vector<double> ax(x.size()), by(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            ax[i] = 3.7 * x[i] + 12.0;
            by[i] = 0.02 * y[i] - 1.0;
        }
        EXPECT_NEAR(kraskov_mi(ax, y), mi, 1e-9);
        EXPECT_NEAR(kraskov_mi(x, by), mi, 1e-9);
    }
}

TEST(Kraskov, DuplicatesAndDegenerateInput) {
    std::vector<double> x(50), y(50);
    for (int i = 0; i < 50; ++i) {
        x[i] = i % 5;
        y[i] = (i * 7) % 3;
    }
    const double mi = kraskov_mi(x, y);
    EXPECT_TRUE(std::isfinite(mi));
    EXPECT_EQ(mi, kraskov_mi(x, y));
    std::vector<double> c(50, 2.0);
    EXPECT_THROW((void)kraskov_mi(c, y), DegenerateError);
    EXPECT_THROW((void)kraskov_mi(std::vector<double>{1, 2, 3}, std::vector<double>{3, 1, 2}), RangeError);
}

TEST(Kraskov, BruteForcePathAgreesAndIsSlower) {
    const auto [x, y] = correlated(77, 1000, 0.5);
    KraskovWorkspace ws;
    const std::span<const double> sx(x), sy(y);
    EXPECT_EQ(kraskov_mi(sx, sy, std::nullopt, ws, KnnMethod::KdTree), kraskov_mi(sx, sy, std::nullopt, ws, KnnMethod::BruteForce));
}

TEST(Kraskov, CustomPsiIsUsed) {
    const auto [x, y] = correlated(4, 200, 0.5);
    const std::span<const double> sx(x), sy(y);
    const double a = kraskov_mi(sx, sy, 5);
    const double b = kraskov_mi(sx, sy, 5, KnnMethod::KdTree, [](double z) { return 1.05 * digamma(z); });
    EXPECT_NE(a, b);
}

TEST(Batch, SingleElementEqualsDirectCall) {
    const auto [x, y] = correlated(9, 100, 0.3);
    const std::vector<float> xf(x.begin(), x.end());
    const std::vector<std::vector<float>> targets{std::vector<float>(y.begin(), y.end())};
    const VectorSeriesSource src(targets);
    const auto p = batch_correlate(xf, src, MeasureKind::Ppmcc);
    const auto k = batch_correlate(xf, src, MeasureKind::Kmi);
    EXPECT_EQ(p.values[0], ppmcc(std::span<const float>(xf), std::span<const float>(targets[0])));
    EXPECT_EQ(k.values[0], kraskov_mi(xf, targets[0]));
}

TEST(Batch, KmiEqualsLoopedEstimatorAndCollectsFailures) {
    std::mt19937_64 rng(21);
    std::normal_distribution<float> d;
    const int E = 60;
    std::vector<float> ref(E);
    for (auto& v : ref) v = d(rng);
    std::vector<std::vector<float>> targets(1000, std::vector<float>(E));
    for (auto& t : targets)
        for (int e = 0; e < E; ++e) t[e] = 0.5f * ref[e] + d(rng);
    targets[17].assign(E, 1.0f);
    const VectorSeriesSource src(targets);
    BatchOptions opt;
    opt.block = 37;
    const auto res = batch_correlate(ref, src, MeasureKind::Kmi, opt);
    EXPECT_EQ(res.failures, 1);
    EXPECT_FALSE(res.ok[17]);
    EXPECT_TRUE(std::isnan(res.values[17]));
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (i == 17) continue;
        ASSERT_EQ(res.values[i], kraskov_mi(ref, targets[i])) << i;
    }
    EXPECT_GT(res.pairs_per_second, 0.0);
}

TEST(Batch, GridSourceOneToAll) {
    const auto g = gen_synthetic(two_cluster_spec({24, 20, 3}, 30, 2));
    const auto ref = g.series(0, 5);
    const GridSeriesSource src(g, 0);
    BatchOptions opt;
    opt.block = 100;
    const auto res = batch_correlate(ref, src, MeasureKind::Ppmcc, opt);
    ASSERT_EQ(res.values.size(), static_cast<std::size_t>(g.voxel_count()));
    for (std::int64_t i = 0; i < g.voxel_count(); i += 7) {
        const auto s = g.series(0, i);
        EXPECT_EQ(res.values[i], ppmcc(std::span<const float>(ref), std::span<const float>(s)));
    }
    EXPECT_DOUBLE_EQ(res.values[5], 1.0);
}
