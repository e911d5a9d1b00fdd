// Acceptance checks. Prints one PASS/FAIL line per criterion; with arguments,
// runs only the named criteria. Exit status 1 when any selected check fails.
//
//   acceptance [--list] [name ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "corrchord/ensemble/partition.hpp"
#include "corrchord/ensemble/store.hpp"
#include "corrchord/ensemble/synthetic.hpp"
#include "corrchord/estimators/batch.hpp"
#include "corrchord/estimators/kraskov.hpp"
#include "corrchord/estimators/ppmcc.hpp"
#include "corrchord/layout/bundle.hpp"
#include "corrchord/layout/diagram.hpp"
#include "corrchord/layout/octree.hpp"
#include "corrchord/layout/zorder.hpp"
#include "corrchord/sampling/bench.hpp"
#include "corrchord/sampling/search.hpp"
#include "corrchord/service/pipeline.hpp"
#include "corrchord/validation.hpp"
#include "oracles.hpp"

#ifndef CORRCHORD_CLI
#define CORRCHORD_CLI "corrchord"
#endif
#ifndef CORRCHORD_DATA
#define CORRCHORD_DATA "data"
#endif

using namespace corrchord;

namespace {

struct Outcome {
    bool pass = false;
    std::string measured;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Closed-form Gaussian MI vs the 20-seed mean estimate at E=1000, k=ceil(3E/100).
Outcome kraskov_accuracy() {
    const std::size_t E = 1000;
    const int k = static_cast<int>(std::ceil(3.0 * double(E) / 100.0));
    Outcome o{true, "", ""};
    double worst = 0.0;
    for (double rho : {0.0, 0.5, 0.9}) {
        const double truth = -0.5 * std::log(1.0 - rho * rho) + 0.0;
        double sum = 0.0;
        for (int s = 0; s < 20; ++s) {
            std::mt19937_64 rng(1000 + s);
            std::normal_distribution<double> n(0.0, 1.0);
            std::vector<double> x(E), y(E);
            for (std::size_t i = 0; i < E; ++i) {
                x[i] = n(rng);
                y[i] = rho * x[i] + std::sqrt(1.0 - rho * rho) * n(rng);
            }
            sum += kraskov_mi(std::span<const double>(x), std::span<const double>(y), k);
        }
        const double err = std::abs(sum / 20.0 - truth);
        worst = std::max(worst, err);
        o.pass = o.pass && err <= 0.05;
        o.detail += fmt("rho=%.1f: %.4f vs %.4f; ", rho, sum / 20.0, truth);
    }
    o.measured = fmt("max |error| %.4f nats (<= 0.05)", worst);
    return o;
}

Outcome knn_equivalence() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(16, 512);
    std::normal_distribution<double> n(0.0, 1.0);
    int same = 0;
    const int instances = 200;
    for (int t = 0; t < instances; ++t) {
        const auto E = static_cast<std::size_t>(len(rng));
        std::vector<double> x(E), y(E);
        for (std::size_t i = 0; i < E; ++i) {
            x[i] = n(rng);
            y[i] = 0.6 * x[i] + n(rng);
            if (t % 4 == 0) x[i] = std::round(x[i] * 4.0);  // ties before jitter
        }
        const int k = default_k(E);
        const auto set = make_joint_samples(std::span<const double>(x), std::span<const double>(y), k);
        const auto tree = knn_chebyshev(set);
        std::vector<double> jx, jy;
        for (const auto& p : set.points) {
            jx.push_back(p.x);
            jy.push_back(p.y);
        }
        const auto ref = oracle::knn_table(jx, jy, k);
        same += tree.eps == ref.eps && std::equal(tree.nx.begin(), tree.nx.end(), ref.nx.begin()) &&
                std::equal(tree.ny.begin(), tree.ny.end(), ref.ny.begin());
    }
    return {same == instances, fmt("%d/%d instances identical", same, instances), "E in 16..512, k = default"};
}

Outcome ppmcc_equivalence() {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> len(2, 300);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    int pairs = 0;
    for (; pairs < 10000; ++pairs) {
        const auto E = static_cast<std::size_t>(len(rng));
        const double rho = u(rng), scale = std::exp(3.0 * u(rng)), shift = 100.0 * u(rng);
        std::vector<double> x(E), y(E);
        for (std::size_t i = 0; i < E; ++i) {
            x[i] = n(rng);
            y[i] = scale * (rho * x[i] + std::sqrt(1.0 - rho * rho) * n(rng)) + shift;
        }
        const double got = ppmcc(std::span<const double>(x), std::span<const double>(y));
        worst = std::max(worst, std::abs(got - oracle::pearson_direct(x, y)));
    }
    return {worst <= 1e-12, fmt("max |difference| %.3g (<= 1e-12)", worst), fmt("%d random pairs, E in 2..300", pairs)};
}

// gaussian6 objectives on 32^3-voxel bricks; truth from a per-axis scan.
Outcome sampling_quality() {
    const auto t0 = Clock::now();
    SearchDomain6 dom;
    dom.extent = {32, 32, 32, 32, 32, 32};
    const int pairs = 50, runs = 10;
    double err_bos = 0.0, err_rand = 0.0;
    for (int p = 0; p < pairs; ++p) {
        std::mt19937_64 rng(5000 + p);
        const auto g = random_gaussian6(dom, rng);
        const auto [tmax, tmin] = oracle::separable_gaussian_extrema(g.mean, g.sigma, dom.extent);
        const auto f = [&](const Index6& i) -> std::optional<double> { return g(i); };
        for (int r = 0; r < runs; ++r) {
            for (auto s : {Strategy::Bos, Strategy::UniformRandom}) {
                StrategyConfig c;
                c.strategy = s;
                c.budget = 100;
                c.seed = 77 * std::uint64_t(r + 1) + std::uint64_t(p) * 7919;
                const double found = maximize_discrete(dom, f, c).value;
                const double e = std::clamp((tmax - found) / (tmax - tmin), 0.0, 1.0);
                (s == Strategy::Bos ? err_bos : err_rand) += e;
            }
        }
    }
    err_bos /= pairs * runs;
    err_rand /= pairs * runs;
    return {err_bos < err_rand && err_bos <= 0.10, fmt("BOS@100 %.4f, random@100 %.4f (BOS < random, BOS <= 0.10)", err_bos, err_rand),
            fmt("%d objectives x %d runs, %.0f s", pairs, runs, seconds_since(t0))};
}

Outcome aggregate_fidelity() {
    const auto t0 = Clock::now();
    const EnsembleStore store(fidelity_ensemble(42));
    ValidationOptions vo;
    vo.fidelity_informational = false;
    const auto rs = validate_fidelity(vo, store);
    for (const auto& r : rs) {
        if (r.name != "aggregate_fidelity f=2") continue;
        return {r.pass, fmt("mean relative deviation %.4f (<= 0.05)", r.measured),
                fmt("two-cluster 64x64x16, E=200, 4x4x1 bricks, f=2, 200 pairs x 10 runs, %.0f s", seconds_since(t0))};
    }
    return {false, "no f=2 result", ""};
}

Outcome performance() {
    // k-d tree vs brute-force k-NN inside the full KMI estimate, E = 1000.
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    const std::size_t E = 1000;
    std::vector<double> x(E), y(E);
    for (std::size_t i = 0; i < E; ++i) {
        x[i] = n(rng);
        y[i] = 0.5 * x[i] + n(rng);
    }
    KraskovWorkspace ws;
    const std::span<const double> sx(x), sy(y);
    const auto time_it = [&](KnnMethod m, int reps) {
        double v = 0.0;
        const auto t = Clock::now();
        for (int r = 0; r < reps; ++r) v += kraskov_mi(sx, sy, std::nullopt, ws, m);
        if (!std::isfinite(v)) std::abort();
        return seconds_since(t) / reps;
    };
    time_it(KnnMethod::KdTree, 3);
    const double kd = time_it(KnnMethod::KdTree, 40);
    const double brute = time_it(KnnMethod::BruteForce, 5);
    const double kd_speedup = brute / kd;

    // One-to-all PPMCC over every voxel of a 250x352x20 grid (1.76M pairs).
    const Dims3 dims{250, 352, 20};
    const std::int64_t members = 50;
    std::vector<float> values(static_cast<std::size_t>(dims.count() * members));
    std::mt19937 frng(11);
    std::normal_distribution<float> fn(0.0f, 1.0f);
    for (auto& v : values) v = fn(frng);
    const EnsembleGrid grid(dims, members, {VariableMeta{"v", ""}}, std::move(values));
    const GridSeriesSource src(grid, 0);
    std::vector<float> ref(static_cast<std::size_t>(members));
    src.gather(dims.count() / 2, 1, ref);
    const auto run = [&](int threads) {
        BatchOptions bo;
        bo.threads = threads;
        return batch_correlate(std::span<const float>(ref), src, MeasureKind::Ppmcc, bo);
    };
    run(1);
    const auto one = run(1);
    const auto eight = run(8);
    const double scaling = one.seconds / eight.seconds;
    const bool same = one.values.size() == eight.values.size() &&
                      std::equal(one.values.begin(), one.values.end(), eight.values.begin(),
                                 [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); });
    const bool kd_ok = kd_speedup >= 5.0, scale_ok = scaling >= 4.0 && same;
    return {kd_ok && scale_ok,
            fmt("k-d tree KMI %.1fx brute force (>= 5) %s; batch PPMCC 1->8 threads %.2fx (>= 4) %s", kd_speedup, kd_ok ? "ok" : "FAIL",
                scaling, scale_ok ? "ok" : "FAIL"),
            fmt("%lld pairs, E=%lld, %.2f s vs %.2f s on %d hardware threads, identical results: %s", (long long)dims.count(), (long long)members,
                one.seconds, eight.seconds, available_threads(), same ? "yes" : "no")};
}

// Every node's leaves form one run of consecutive circle slots.
bool contiguous(const ChordTree& t) {
    std::vector<int> slot(t.nodes.size(), -1);
    for (std::size_t i = 0; i < t.leaves.size(); ++i) slot[t.leaves[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> below(t.nodes.size());
    for (int id = static_cast<int>(t.nodes.size()) - 1; id >= 0; --id) {
        if (slot[id] >= 0) below[id].push_back(slot[id]);
        for (int c : t.nodes[id].children) below[id].insert(below[id].end(), below[c].begin(), below[c].end());
    }
    for (auto s : below) {
        if (s.empty()) return false;
        std::sort(s.begin(), s.end());
        if (s.back() - s.front() + 1 != static_cast<int>(s.size())) return false;
    }
    return below[0].size() == t.leaves.size();
}

Outcome layout_invariants() {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> d(1, 12);
    int shapes_ok = 0;
    for (int s = 0; s < 20; ++s) {
        const Dims3 grid{d(rng) * 8, d(rng) * 8, std::uniform_int_distribution<int>(1, 6)(rng) * 4};
        const auto part = partition_grid(grid, std::uniform_int_distribution<int>(8, 128)(rng));
        shapes_ok += contiguous(build_octree(part.bricks_per_axis));
    }

    const auto necker = partition_by_edge({250, 352, 20}, 32);
    const auto t = build_octree(necker.bricks_per_axis);
    double end_err = 0.0;
    for (std::int64_t a = 0; a < necker.count(); a += 3)
        for (std::int64_t b = a + 1; b < necker.count(); b += 5) {
            const auto e = bundle_edge(t, static_cast<int>(a), static_cast<int>(b), 0.85);
            const auto poly = bspline_polyline(e.control, 64);
            const auto& la = t.nodes[t.leaves[a]];
            const auto& lb = t.nodes[t.leaves[b]];
            end_err = std::max({end_err, std::hypot(poly.front()[0] - la.x, poly.front()[1] - la.y),
                                std::hypot(poly.back()[0] - lb.x, poly.back()[1] - lb.y)});
        }

    // Random values with ties and pending pairs on the Necker partition.
    const ZOrderMap z(necker.bricks_per_axis);
    std::vector<NodeInput> nodes;
    for (std::int64_t r = 0; r < z.size(); ++r) nodes.push_back({necker.brick_box(z.linear_at(r)), {0.0}, std::to_string(r)});
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<PairValue> pairs;
    for (std::int64_t a = 0; a < z.size(); ++a)
        for (std::int64_t b = a + 1; b < z.size(); ++b) {
            PairValue p{a, b, 0, std::nullopt, 0.0, false};
            if (u(rng) > 0.9) p.pending = true;
            else {
                p.value = std::round(u(rng) * 16.0) / 16.0;
                p.strength = std::abs(*p.value);
            }
            pairs.push_back(p);
        }
    const auto m = build_context_diagram(necker.bricks_per_axis, nodes, pairs, {});
    bool order_ok = true, seen_ok = false;
    for (std::size_t i = 0; i < m.edges.size(); ++i) {
        const auto& e = m.edges[i];
        if (e.state == EdgeState::Pending) {
            order_ok = order_ok && !seen_ok;
            continue;
        }
        if (seen_ok) {
            const auto& p = m.edges[i - 1];
            order_ok = order_ok && (p.strength < e.strength || (p.strength == e.strength && std::make_pair(p.a, p.b) < std::make_pair(e.a, e.b)));
        }
        seen_ok = true;
    }
    const bool necker_ok = necker.count() == 88 && m.nodes.size() == 88 && m.candidate_edges == 3828;
    return {shapes_ok == 20 && end_err <= 1e-9 && order_ok && necker_ok,
            fmt("contiguity %d/20 shapes, endpoint error %.2g (<= 1e-9), draw order %s, Necker %lld bricks / %lld pairs (88 / 3828)", shapes_ok,
                end_err, order_ok ? "monotone" : "VIOLATED", (long long)necker.count(), (long long)m.candidate_edges),
            ""};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    const auto dir = std::filesystem::temp_directory_path() / ("corrchord_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::string first_json, first_svg;
    bool same = true;
    for (int run = 0; run < 2; ++run) {
        const auto prefix = (dir / ("run" + std::to_string(run))).string();
        const std::string cmd = std::string("\"") + CORRCHORD_CLI + "\" context --synth \"" + CORRCHORD_DATA +
                                "/two_cluster.synth\" --bricks 16 --seed 7 -b 60 -o \"" + prefix + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            std::filesystem::remove_all(dir);
            return {false, "context command failed", cmd};
        }
        const auto j = slurp(prefix + ".json"), s = slurp(prefix + ".svg");
        if (run == 0) {
            first_json = j;
            first_svg = s;
        } else {
            same = j == first_json && s == first_svg && !j.empty() && !s.empty();
        }
    }
    std::filesystem::remove_all(dir);
    return {same, same ? "JSON and SVG byte-identical across two runs" : "outputs differ",
            fmt("%zu JSON bytes, %zu SVG bytes", first_json.size(), first_svg.size())};
}

// Every context pair whose bricks both hold core voxels of the shared signal must reach 1.
Outcome end_to_end() {
    const auto t0 = Clock::now();
    const auto spec = load_synth_spec(std::string(CORRCHORD_DATA) + "/two_cluster.synth");
    const EnsembleStore store(gen_synthetic(spec));
    std::vector<oracle::Centre> cs;
    for (const auto& c : spec.clusters) cs.push_back({c.cx, c.cy, c.cz, c.core});

    PipelineConfig cfg;
    cfg.bricks = 16;
    cfg.level = 0;
    cfg.strategy = Strategy::Bos;
    cfg.search.budget = 100;
    const auto part = make_partition(store.grid().dims(), cfg);
    const auto plan = plan_context(store, part, cfg);
    std::vector<bool> has_core(plan.nodes.size(), false);
    for (std::size_t i = 0; i < plan.nodes.size(); ++i) {
        const auto& b = plan.nodes[i].box;
        for (auto x = b.lo.x; x < b.hi.x && !has_core[i]; ++x)
            for (auto y = b.lo.y; y < b.hi.y && !has_core[i]; ++y)
                for (auto zz = b.lo.z; zz < b.hi.z && !has_core[i]; ++zz)
                    if (oracle::in_core(cs, double(x), double(y), double(zz))) has_core[i] = true;
    }
    // The full context run, so pair seeds match what the CLI and service compute.
    std::vector<PairResult> res;
    run_pairs(store, plan.pairs, cfg, res);
    std::size_t covered = 0;
    int hits = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
        const auto& p = plan.pairs[i];
        if (!has_core[p.a] || !has_core[p.b]) continue;
        ++covered;
        const double dev = res[i].estimate ? std::abs(res[i].estimate->strength - 1.0) : 1.0;
        if (dev > 1e-6 && std::getenv("CORRCHORD_VERBOSE"))
            std::fprintf(stderr, "  pair %lld-%lld: %.4f\n", (long long)p.a, (long long)p.b, 1.0 - dev);
        worst = std::max(worst, dev);
        hits += dev <= 1e-6;
    }
    return {covered > 0 && hits == static_cast<int>(covered),
            fmt("%d/%zu covering pairs at 1.0 (+-1e-6), worst deviation %.3g", hits, covered, worst),
            fmt("BOS@100, %lld bricks, %d with core voxels, %.0f s", (long long)part.count(),
                static_cast<int>(std::count(has_core.begin(), has_core.end(), true)), seconds_since(t0))};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, Outcome (*)()>> checks = {
        {"kraskov_accuracy", kraskov_accuracy},   {"knn_equivalence", knn_equivalence},     {"ppmcc_equivalence", ppmcc_equivalence},
        {"sampling_quality", sampling_quality},   {"aggregate_fidelity", aggregate_fidelity}, {"performance", performance},
        {"layout_invariants", layout_invariants}, {"determinism", determinism},             {"end_to_end_synth", end_to_end},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (!wanted.empty() && wanted[0] == "--list") {
        for (const auto& [name, fn] : checks) std::printf("%s\n", name.c_str());
        return 0;
    }
    for (const auto& w : wanted)
        if (std::none_of(checks.begin(), checks.end(), [&](const auto& c) { return c.first == w; })) {
            std::fprintf(stderr, "unknown check '%s' (see --list)\n", w.c_str());
            return 2;
        }
    bool all = true;
    for (const auto& [name, fn] : checks) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), name) == wanted.end()) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what(), ""};
        }
        all = all && o.pass;
        std::printf("%s %-20s %s [%.1f s]%s%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.measured.c_str(), seconds_since(t0),
                    o.detail.empty() ? "" : " ", o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
