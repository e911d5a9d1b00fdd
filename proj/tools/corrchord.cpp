// corrchord command line: synthetic data, offline diagrams, sampling
// benchmarks, estimator validation and the HTTP server.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 validation failure.

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "corrchord/ensemble/io.hpp"
#include "corrchord/ensemble/synthetic.hpp"
#include "corrchord/layout/json.hpp"
#include "corrchord/layout/svg.hpp"
#include "corrchord/sampling/bench.hpp"
#include "corrchord/service/http.hpp"
#include "corrchord/service/pipeline.hpp"
#include "corrchord/validation.hpp"

using namespace corrchord;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitValidation = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flag values that fail to parse are usage errors, not data errors.
MeasureKind measure_flag(const std::string& s) {
    try {
        return parse_measure(s);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

Strategy strategy_flag(const std::string& s) {
    try {
        return parse_strategy(s);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
    if (!f) throw DataError("write failed: " + path);
}

std::optional<Range> make_range(const std::vector<double>& v, const char* what) {
    if (v.empty()) return std::nullopt;
    if (v.size() != 2) throw UsageError(std::string(what) + " expects two numbers: lo hi");
    return Range{v[0], v[1]};
}

// gen-synth ------------------------------------------------------------------

struct GenSynthArgs {
    std::string spec;
    std::string preset;
    std::vector<std::int64_t> dims;
    std::int64_t members = 0;
    std::uint64_t seed = 42;
    std::string out;
};

int cmd_gen_synth(const GenSynthArgs& a) {
    SynthSpec spec;
    if (!a.spec.empty()) spec = load_synth_spec(a.spec);
    else if (a.preset == "two_cluster") {
        Dims3 d{64, 64, 16};
        if (a.dims.size() == 3) d = {a.dims[0], a.dims[1], a.dims[2]};
        spec = two_cluster_spec(d, a.members > 0 ? a.members : 100, a.seed);
    } else throw UsageError("gen-synth needs --spec FILE or --preset two_cluster");
    const auto grid = gen_synthetic(spec);
    save_ensemble(grid, a.out);
    std::printf("wrote %s: %s grid, %lld members, %zu variable(s)\n", a.out.c_str(), to_string(grid.dims()).c_str(), static_cast<long long>(grid.members()),
                grid.variables().size());
    return 0;
}

// context --------------------------------------------------------------------

struct ContextArgs {
    std::string input;
    std::string synth;
    std::vector<std::string> variables;
    std::string measure = "ppmcc";
    std::int64_t brick_edge = 0;
    std::int64_t bricks = kDefaultChordCapacity;
    std::string strategy = "auto";
    int budget = 100;
    std::uint64_t seed = 42;
    std::optional<int> level;
    double memory_gib = 4.0;
    std::vector<double> value_range, distance_range, spacing;
    double beta = 0.85;
    bool matrix = false;
    int size = 512;
    std::string out = "context";
};

EnsembleGrid load_input(const std::string& input, const std::string& synth) {
    if (!synth.empty()) return gen_synthetic(load_synth_spec(synth));
    if (input.empty()) throw UsageError("need --input FILE or --synth SPEC");
    return load_ensemble(input);
}

int cmd_context(const ContextArgs& a) {
    const EnsembleStore store(load_input(a.input, a.synth));
    PipelineConfig cfg;
    cfg.variables.clear();
    for (const auto& v : a.variables) cfg.variables.push_back(store.grid().variable_index(v));
    if (cfg.variables.empty()) cfg.variables.push_back(0);
    cfg.measure = measure_flag(a.measure);
    cfg.brick_edge = a.brick_edge;
    cfg.bricks = a.bricks;
    cfg.search.budget = a.budget;
    cfg.search.seed = a.seed;
    if (a.strategy != "auto") cfg.strategy = strategy_flag(a.strategy);
    cfg.level = a.level;
    if (!(a.memory_gib > 0)) throw UsageError("--memory-gib must be positive");
    cfg.memory_budget = static_cast<std::size_t>(a.memory_gib * double(std::size_t{1} << 30));
    const auto part = make_partition(store.grid().dims(), cfg);
    SvgOptions svg;
    svg.width = svg.height = a.size;

    if (a.matrix) {
        if (cfg.variables.size() != 2) throw UsageError("--matrix needs two --var options");
        const auto plan = plan_matrix(store, part, cfg);
        std::vector<PairResult> results;
        run_pairs(store, plan.pairs, cfg, results);
        const auto m = build_matrix_view(store, plan, results, cfg);
        write_file(a.out + ".json", dump(to_json(m)));
        write_file(a.out + ".svg", export_svg(m, svg));
        std::printf("matrix %zux%zu (%s vs %s) -> %s.json, %s.svg\n", m.size(), m.size(), m.variable1.c_str(), m.variable2.c_str(), a.out.c_str(),
                    a.out.c_str());
        return 0;
    }
    DiagramOptions opt;
    opt.value_filter = make_range(a.value_range, "--value-range");
    opt.distance_filter = make_range(a.distance_range, "--distance-range");
    if (a.spacing.size() == 3) opt.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
    else if (!a.spacing.empty()) throw UsageError("--spacing expects three numbers");
    opt.beta = a.beta;
    const auto plan = plan_context(store, part, cfg);
    std::vector<PairResult> results;
    run_pairs(store, plan.pairs, cfg, results);
    const auto d = build_view(store, plan, pair_values(plan, results), cfg, opt);
    write_file(a.out + ".json", dump(to_json(d)));
    write_file(a.out + ".svg", export_svg(d, svg));
    std::printf("context: %zu bricks (%s each), %lld candidate edges, %zu drawn, level %d -> %s.json, %s.svg\n", d.nodes.size(),
                to_string(part.brick_dims).c_str(), static_cast<long long>(d.candidate_edges), d.edges.size(), plan.level, a.out.c_str(), a.out.c_str());
    return 0;
}

// bench ----------------------------------------------------------------------

struct BenchArgs {
    std::string oracle = "gaussian6";
    std::string input;
    std::string variable;
    std::vector<int> budgets{25, 50, 100, 200, 400};
    std::vector<std::string> strategies{"random", "halton", "plastic", "bos"};
    int runs = 10;
    int pairs = 50;
    std::int64_t brick = 32;
    std::uint64_t seed = 42;
    std::string out = "bench.csv";
    std::string summary;
};

int cmd_bench(const BenchArgs& a) {
    BenchConfig cfg;
    cfg.budgets = a.budgets;
    cfg.runs = a.runs;
    cfg.pairs = a.pairs;
    cfg.seed = a.seed;
    cfg.brick = {a.brick, a.brick, a.brick};
    cfg.strategies.clear();
    for (const auto& s : a.strategies) cfg.strategies.push_back(strategy_flag(s));
    std::vector<BenchRow> rows;
    if (a.oracle == "gaussian6") rows = bench_gaussian6(cfg);
    else if (a.oracle == "dataset") {
        if (a.input.empty()) throw UsageError("--oracle dataset needs --input");
        const EnsembleStore store(load_ensemble(a.input));
        PairQuery proto;
        if (!a.variable.empty()) proto.variable_a = proto.variable_b = store.grid().variable_index(a.variable);
        rows = bench_dataset(store, partition_by_edge(store.grid().dims(), a.brick), proto, cfg);
    } else throw UsageError("unknown oracle '" + a.oracle + "' (gaussian6 or dataset)");
    {
        std::ofstream f(a.out);
        if (!f) throw DataError("cannot write " + a.out);
        write_bench_csv(f, rows);
    }
    const auto sum = summarize(rows);
    std::ostringstream s;
    s << "strategy,budget,mean_normalized_error\n";
    for (const auto& [key, err] : sum) s << to_string(key.first) << ',' << key.second << ',' << err << '\n';
    if (!a.summary.empty()) write_file(a.summary, s.str());
    std::printf("%-10s %8s %12s\n", "strategy", "budget", "mean error");
    for (const auto& [key, err] : sum) std::printf("%-10s %8d %12.6f\n", to_string(key.first).c_str(), key.second, err);
    std::printf("%zu rows -> %s\n", rows.size(), a.out.c_str());
    return 0;
}

// validate -------------------------------------------------------------------

struct ValidateArgs {
    std::string out;
    bool perturb = false;
    bool quick = false;
    std::uint64_t seed = 42;
};

int cmd_validate(const ValidateArgs& a) {
    ValidationOptions o;
    o.perturb_digamma = a.perturb;
    o.seed = a.seed;
    if (a.quick) {
        o.mi_seeds = 5;
        o.knn_instances = 40;
        o.fidelity_pairs = 20;
        o.fidelity_runs = 2;
    }
    std::vector<CheckResult> checks = validate_gaussian_mi(o);
    checks.push_back(validate_knn(o));
    const EnsembleStore store(fidelity_ensemble(o.seed));
    for (auto& r : validate_fidelity(o, store)) checks.push_back(r);
    Json report = Json::array();
    for (const auto& c : checks) {
        const char* verdict = c.informational ? "INFO" : (c.pass ? "PASS" : "FAIL");
        std::printf("%-4s %-26s measured=%-10.6g threshold=%-8.4g %s\n", verdict, c.name.c_str(), c.measured, c.threshold, c.detail.c_str());
        report.push_back({{"name", c.name}, {"verdict", verdict}, {"measured", c.measured}, {"threshold", c.threshold}, {"detail", c.detail}});
    }
    const bool ok = all_pass(checks);
    if (!a.out.empty()) write_file(a.out, dump(Json{{"pass", ok}, {"checks", report}}, 2));
    std::printf("validation %s\n", ok ? "passed" : "FAILED");
    return ok ? 0 : kExitValidation;
}

// serve ----------------------------------------------------------------------

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& host, int port, double memory_gib) {
    if (!(memory_gib > 0)) throw UsageError("--memory-gib must be positive");
    Service svc(static_cast<std::size_t>(memory_gib * double(std::size_t{1} << 30)));
    httplib::Server server;
    register_routes(server, svc);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::printf("listening on http://%s:%d\n", host.c_str(), port);
    std::fflush(stdout);
    if (!server.listen(host, port)) throw DataError("cannot listen on " + host + ":" + std::to_string(port));
    svc.shutdown();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"corrchord: ensemble correlation chord diagrams"};
    app.require_subcommand(1);

    GenSynthArgs gs;
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic correlation ensemble");
    gen->add_option("--spec", gs.spec, "synthetic spec file");
    gen->add_option("--preset", gs.preset, "built-in spec (two_cluster)");
    gen->add_option("--dims", gs.dims, "grid dims for the preset")->expected(3);
    gen->add_option("--members", gs.members, "ensemble members for the preset");
    gen->add_option("--seed", gs.seed, "seed for the preset");
    gen->add_option("-o,--out", gs.out, "output ensemble file")->required();

    ContextArgs ca;
    auto* ctx = app.add_subcommand("context", "compute a context diagram (JSON + SVG)");
    ctx->add_option("-i,--input", ca.input, "ensemble file");
    ctx->add_option("--synth", ca.synth, "generate the input from a spec file");
    ctx->add_option("-v,--var", ca.variables, "variable name (repeat for two)");
    ctx->add_option("-m,--measure", ca.measure, "ppmcc or kmi");
    ctx->add_option("--brick-edge", ca.brick_edge, "brick edge in voxels (0: derive from --bricks)");
    ctx->add_option("--bricks", ca.bricks, "target brick count");
    ctx->add_option("-s,--strategy", ca.strategy, "auto, random, halton, plastic, bos, exhaustive");
    ctx->add_option("-b,--budget", ca.budget, "samples per brick pair");
    ctx->add_option("--seed", ca.seed, "random seed");
    ctx->add_option("--level", ca.level, "force a mean-tree level (0 = raw)");
    ctx->add_option("--memory-gib", ca.memory_gib, "memory budget for raw vs aggregate data");
    ctx->add_option("--value-range", ca.value_range, "value filter lo hi")->expected(2);
    ctx->add_option("--distance-range", ca.distance_range, "brick distance filter lo hi")->expected(2);
    ctx->add_option("--spacing", ca.spacing, "grid spacing x y z")->expected(3);
    ctx->add_option("--beta", ca.beta, "bundling strength in [0, 1]");
    ctx->add_flag("--matrix", ca.matrix, "inter-variable matrix instead of a chord diagram");
    ctx->add_option("--size", ca.size, "SVG viewport size");
    ctx->add_option("-o,--out", ca.out, "output prefix (writes PREFIX.json and PREFIX.svg)");

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "sampling strategy convergence benchmark (CSV)");
    bench->add_option("--oracle", ba.oracle, "gaussian6 or dataset");
    bench->add_option("-i,--input", ba.input, "ensemble file for --oracle dataset");
    bench->add_option("-v,--var", ba.variable, "variable for --oracle dataset");
    bench->add_option("--budgets", ba.budgets, "sample budgets")->delimiter(',');
    bench->add_option("--strategies", ba.strategies, "strategies")->delimiter(',');
    bench->add_option("--runs", ba.runs, "runs per pair");
    bench->add_option("--pairs", ba.pairs, "brick pairs");
    bench->add_option("--brick", ba.brick, "brick edge of the search space");
    bench->add_option("--seed", ba.seed, "random seed");
    bench->add_option("-o,--out", ba.out, "per-run CSV");
    bench->add_option("--summary", ba.summary, "per-strategy/budget mean CSV");

    ValidateArgs va;
    auto* val = app.add_subcommand("validate", "estimator validation report");
    val->add_option("-o,--out", va.out, "JSON report");
    val->add_flag("--perturb-digamma", va.perturb, "negative control: perturb psi so validation fails");
    val->add_flag("--quick", va.quick, "smaller sample counts");
    val->add_option("--seed", va.seed, "random seed");

    std::string host = "127.0.0.1";
    int port = 8080;
    double serve_gib = 4.0;
    auto* serve = app.add_subcommand("serve", "run the HTTP/JSON service");
    serve->add_option("--host", host, "bind address");
    serve->add_option("-p,--port", port, "port");
    serve->add_option("--memory-gib", serve_gib, "memory budget for raw vs aggregate data");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }
    try {
        if (*gen) return cmd_gen_synth(gs);
        if (*ctx) return cmd_context(ca);
        if (*bench) return cmd_bench(ba);
        if (*val) return cmd_validate(va);
        if (*serve) return cmd_serve(host, port, serve_gib);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const RangeError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitData;
    }
    return kExitUsage;
}
