#pragma once

// Offline correlation pipeline shared by the CLI and the HTTP service: plan
// the brick pairs of a view, estimate their maxima, and build the diagram.

#include <atomic>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "corrchord/ensemble/hierarchy.hpp"
#include "corrchord/ensemble/partition.hpp"
#include "corrchord/ensemble/store.hpp"
#include "corrchord/layout/diagram.hpp"
#include "corrchord/sampling/bench.hpp"
#include "corrchord/sampling/pair.hpp"

namespace corrchord {

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{4} << 30;
inline constexpr std::int64_t kDefaultChordCapacity = 128;

struct PipelineConfig {
    std::vector<std::size_t> variables{0};  ///< one, or two for comparison / matrix
    MeasureKind measure = MeasureKind::Ppmcc;
    std::int64_t brick_edge = 0;            ///< 0: derive from `bricks`
    std::int64_t bricks = kDefaultChordCapacity;
    StrategyConfig search{};
    std::optional<Strategy> strategy;       ///< unset: choose per pair
    std::optional<int> level;               ///< unset: from the memory budget
    std::size_t memory_budget = kDefaultMemoryBudget;
    std::optional<int> k;

    /// Every parameter that affects estimated values, as a cache key.
    std::string key() const {
        std::ostringstream s;
        s << "vars=";
        for (auto v : variables) s << v << ',';
        s << ";m=" << to_string(measure) << ";edge=" << brick_edge << ";bricks=" << bricks << ";strategy=" << (strategy ? to_string(*strategy) : "auto")
          << ";budget=" << search.budget << ";init=" << search.init_count << ";kappa=" << search.kappa << ";acq=" << search.acq_budget
          << ";seed=" << search.seed << ";nu=" << int(search.kernel.nu) << ";ls=" << search.kernel.length_scale << ";noise=" << search.kernel.noise
          << ";level=" << (level ? std::to_string(*level) : "budget:" + std::to_string(memory_budget)) << ";k=" << (k ? std::to_string(*k) : "auto");
        return s.str();
    }
};

inline BrickPartition make_partition(const Dims3& grid, const PipelineConfig& cfg) {
    return cfg.brick_edge > 0 ? partition_by_edge(grid, cfg.brick_edge) : partition_grid(grid, cfg.bricks);
}

inline int query_level(const EnsembleStore& store, const PipelineConfig& cfg) {
    if (cfg.memory_budget == 0) throw RangeError("memory budget must be positive");
    const int l = cfg.level ? *cfg.level : store.level_for_budget(cfg.memory_budget);
    if (l < 0 || l > store.max_level()) throw RangeError("aggregate level " + std::to_string(l) + " outside 0.." + std::to_string(store.max_level()));
    return l;
}

/// One brick-pair search of a view: nodes `a`, `b` and the variables compared.
struct PlannedPair {
    std::int64_t a = 0;
    std::int64_t b = 0;
    int variable = 0;  ///< index into the view's variables (chord color)
    PairQuery query;
};

/// Result of one planned pair; `estimate` is empty when no sample had a defined measure.
struct PairResult {
    std::optional<PairEstimate> estimate;
    Strategy strategy = Strategy::Bos;
};

/// Search configuration for one pair, seeded from the pair position.
inline StrategyConfig pair_config(const PipelineConfig& cfg, const PairQuery& q, std::size_t index) {
    StrategyConfig sc = cfg.search;
    sc.seed = detail::mix_seed(cfg.search.seed, 0x9e37, index);
    const auto ba = box_at_level(q.a, q.level).extent(), bb = box_at_level(q.b, q.level).extent();
    sc.strategy = cfg.strategy ? *cfg.strategy : choose_strategy(ba, bb);
    if (sc.strategy == Strategy::Exhaustive) sc.budget = static_cast<int>(std::max<std::int64_t>(sc.budget, ba.count() * bb.count()));
    return sc;
}

/// Shared progress and cancellation state of a running estimate set.
struct Progress {
    std::atomic<std::int64_t> done{0};
    std::atomic<std::int64_t> total{0};
    std::atomic<bool> cancel{false};
    std::vector<std::atomic<bool>>* ready = nullptr;  ///< per-pair completion flags, optional
};

class CancelledError : public std::runtime_error {
public:
    CancelledError() : std::runtime_error("computation cancelled") {}
};

/**
 * Estimate every planned pair, in parallel. Results are independent of the
 * thread count and scheduling. Throws CancelledError when `progress.cancel`
 * is raised before completion.
 */
inline void run_pairs(const EnsembleStore& store, const std::vector<PlannedPair>& pairs, const PipelineConfig& cfg, std::vector<PairResult>& out,
                      Progress* progress = nullptr) {
    if (out.size() != pairs.size()) out.assign(pairs.size(), PairResult{});
    const auto n = static_cast<std::int64_t>(pairs.size());
    if (progress) progress->total = n;
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
        if (progress && progress->cancel.load(std::memory_order_relaxed)) continue;
        try {
            const auto& p = pairs[static_cast<std::size_t>(i)];
            const auto sc = pair_config(cfg, p.query, static_cast<std::size_t>(i));
            PairResult r;
            r.strategy = sc.strategy;
            try {
                r.estimate = estimate_pair_maximum(store, p.query, sc);
            } catch (const DegenerateError&) {
            }
            out[static_cast<std::size_t>(i)] = std::move(r);
            if (progress) {
                if (progress->ready) (*progress->ready)[static_cast<std::size_t>(i)].store(true, std::memory_order_release);
                progress->done.fetch_add(1, std::memory_order_relaxed);
            }
        } catch (...) {
#pragma omp critical(corrchord_run_pairs)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    if (progress && progress->cancel) throw CancelledError();
}

/// Nodes and pair searches behind one chord view.
struct ViewPlan {
    std::string kind = "context";  ///< context | focus
    Dims3 grid_a{1, 1, 1};         ///< context: brick layout; focus: A's child grid
    Dims3 grid_b{1, 1, 1};         ///< focus: B's child grid
    std::vector<NodeInput> nodes;  ///< focus: A's children then B's
    std::int64_t count_a = 0;
    std::vector<PlannedPair> pairs;
    int level = 0;
};

namespace detail {

inline std::vector<std::string> variable_names(const EnsembleStore& store, const PipelineConfig& cfg) {
    std::vector<std::string> names;
    for (auto v : cfg.variables) names.push_back(store.grid().variable(v).name);
    return names;
}

inline NodeInput node_input(const EnsembleStore& store, const PipelineConfig& cfg, const VoxelBox& box, const std::string& label) {
    NodeInput n{box, {}, label};
    for (auto v : cfg.variables) n.spread.push_back(store.spread(v, box));
    return n;
}

inline std::string box_label(const VoxelBox& b) {
    return "[" + std::to_string(b.lo.x) + ":" + std::to_string(b.hi.x) + "," + std::to_string(b.lo.y) + ":" + std::to_string(b.hi.y) + "," +
           std::to_string(b.lo.z) + ":" + std::to_string(b.hi.z) + ")";
}

inline PairQuery make_query(const PipelineConfig& cfg, const VoxelBox& a, const VoxelBox& b, std::size_t va, std::size_t vb, int level) {
    PairQuery q;
    q.a = a;
    q.b = b;
    q.variable_a = va;
    q.variable_b = vb;
    q.level = level;
    q.measure = cfg.measure;
    q.k = cfg.k;
    return q;
}

inline void check_variables(const EnsembleStore& store, const PipelineConfig& cfg) {
    if (cfg.variables.empty() || cfg.variables.size() > 2) throw RangeError("one or two variables expected");
    for (auto v : cfg.variables)
        if (v >= store.grid().variables().size()) throw RangeError("unknown variable index " + std::to_string(v));
}

} // namespace detail

/// All M(M-1)/2 brick pairs of the context partition, per variable.
inline ViewPlan plan_context(const EnsembleStore& store, const BrickPartition& part, const PipelineConfig& cfg) {
    detail::check_variables(store, cfg);
    ViewPlan plan;
    plan.level = query_level(store, cfg);
    plan.grid_a = part.bricks_per_axis;
    const ZOrderMap z(part.bricks_per_axis);
    std::vector<VoxelBox> boxes;
    for (std::int64_t r = 0; r < z.size(); ++r) {
        boxes.push_back(part.brick_box(z.linear_at(r)));
        plan.nodes.push_back(detail::node_input(store, cfg, boxes.back(), "brick " + std::to_string(r)));
    }
    plan.count_a = z.size();
    for (std::size_t v = 0; v < cfg.variables.size(); ++v)
        for (std::int64_t a = 0; a < z.size(); ++a)
            for (std::int64_t b = a + 1; b < z.size(); ++b)
                plan.pairs.push_back({a, b, static_cast<int>(v), detail::make_query(cfg, boxes[a], boxes[b], cfg.variables[v], cfg.variables[v], plan.level)});
    return plan;
}

/// Children of one side of a focus step; a single voxel stays as its own child.
inline Refinement refine_or_keep(const BrickHierarchy& h, const VoxelBox& box) {
    if (box.count() == 1) return Refinement{{1, 1, 1}, {box}, {{0, 0, 0}}, 0};
    return h.refine(box);
}

/**
 * Cross pairs between the children of `a` (bottom) and of `b` (top). With
 * a == b both sides show the same children and the pairs include each child
 * against its own copy.
 */
inline ViewPlan plan_focus(const EnsembleStore& store, const BrickHierarchy& h, const VoxelBox& a, const VoxelBox& b, const PipelineConfig& cfg) {
    detail::check_variables(store, cfg);
    if (a.count() == 1 && b.count() == 1) throw FinestLevelError("both bricks are single voxels; finest level reached");
    ViewPlan plan;
    plan.kind = "focus";
    plan.level = query_level(store, cfg);
    const auto ra = refine_or_keep(h, a), rb = refine_or_keep(h, b);
    plan.grid_a = ra.child_grid;
    plan.grid_b = rb.child_grid;
    plan.count_a = static_cast<std::int64_t>(ra.children.size());
    for (std::size_t i = 0; i < ra.children.size(); ++i) plan.nodes.push_back(detail::node_input(store, cfg, ra.children[i], "A" + std::to_string(i)));
    for (std::size_t i = 0; i < rb.children.size(); ++i) plan.nodes.push_back(detail::node_input(store, cfg, rb.children[i], "B" + std::to_string(i)));
    for (std::size_t v = 0; v < cfg.variables.size(); ++v)
        for (std::size_t i = 0; i < ra.children.size(); ++i)
            for (std::size_t j = 0; j < rb.children.size(); ++j)
                plan.pairs.push_back({static_cast<std::int64_t>(i), plan.count_a + static_cast<std::int64_t>(j), static_cast<int>(v),
                                      detail::make_query(cfg, ra.children[i], rb.children[j], cfg.variables[v], cfg.variables[v], plan.level)});
    return plan;
}

/// Pair values for the diagram; pairs without a result (or not ready) are pending.
inline std::vector<PairValue> pair_values(const ViewPlan& plan, const std::vector<PairResult>& results, const std::vector<std::atomic<bool>>* ready = nullptr) {
    std::vector<PairValue> out;
    out.reserve(plan.pairs.size());
    for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
        const auto& p = plan.pairs[i];
        PairValue v{p.a, p.b, p.variable, std::nullopt, 0.0, true};
        const bool have = i < results.size() && (!ready || (*ready)[i].load(std::memory_order_acquire));
        if (have) {
            v.pending = false;
            if (const auto& e = results[i].estimate) {
                v.value = e->value;
                v.strength = e->strength;
            }
        }
        out.push_back(v);
    }
    return out;
}

inline DiagramModel build_view(const EnsembleStore& store, const ViewPlan& plan, const std::vector<PairValue>& values, const PipelineConfig& cfg,
                               DiagramOptions opt) {
    opt.measure = cfg.measure;
    opt.variables = detail::variable_names(store, cfg);
    if (plan.kind == "context") return build_context_diagram(plan.grid_a, plan.nodes, values, opt);
    const std::vector<NodeInput> na(plan.nodes.begin(), plan.nodes.begin() + plan.count_a), nb(plan.nodes.begin() + plan.count_a, plan.nodes.end());
    return build_focus_diagram(plan.grid_a, na, plan.grid_b, nb, values, opt);
}

/// Inter-variable matrix over the context bricks: every ordered region pair.
struct MatrixPlan {
    std::vector<MatrixRegion> regions;
    std::vector<PlannedPair> pairs;  ///< a = column region, b = row region
    int level = 0;
};

inline MatrixPlan plan_matrix(const EnsembleStore& store, const BrickPartition& part, const PipelineConfig& cfg) {
    detail::check_variables(store, cfg);
    if (cfg.variables.size() != 2) throw RangeError("matrix mode needs two variables");
    MatrixPlan plan;
    plan.level = query_level(store, cfg);
    const ZOrderMap z(part.bricks_per_axis);
    std::vector<VoxelBox> boxes;
    for (std::int64_t r = 0; r < z.size(); ++r) {
        const auto box = part.brick_box(z.linear_at(r));
        boxes.push_back(box);
        plan.regions.push_back({box, "region " + std::to_string(r), store.spread(cfg.variables[0], box), store.spread(cfg.variables[1], box)});
    }
    for (std::int64_t row = 0; row < z.size(); ++row)
        for (std::int64_t col = 0; col < z.size(); ++col)
            plan.pairs.push_back({col, row, 0, detail::make_query(cfg, boxes[col], boxes[row], cfg.variables[0], cfg.variables[1], plan.level)});
    return plan;
}

inline MatrixModel build_matrix_view(const EnsembleStore& store, const MatrixPlan& plan, const std::vector<PairResult>& results, const PipelineConfig& cfg) {
    std::vector<MatrixEstimate> est;
    for (std::size_t i = 0; i < plan.pairs.size() && i < results.size(); ++i) {
        const auto& p = plan.pairs[i];
        MatrixEstimate e{static_cast<std::size_t>(p.b), static_cast<std::size_t>(p.a), std::nullopt, 0.0, false};
        if (const auto& r = results[i].estimate) {
            e.value = r->value;
            e.strength = r->strength;
        }
        est.push_back(e);
    }
    return build_matrix(plan.regions, store.grid().variable(cfg.variables[0]).name, store.grid().variable(cfg.variables[1]).name, est, cfg.measure);
}

} // namespace corrchord
