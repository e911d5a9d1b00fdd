#pragma once

// Datasets, sessions with focus-navigation history, and polled compute jobs.
// Transport-free; the HTTP layer maps these calls and exceptions to routes.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include "corrchord/ensemble/io.hpp"
#include "corrchord/ensemble/synthetic.hpp"
#include "corrchord/layout/json.hpp"
#include "corrchord/service/pipeline.hpp"

namespace corrchord {

class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A resource that existed but is no longer addressable (stale or filtered edge).
class GoneError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConflictError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    std::string id;
    std::string source;
    std::shared_ptr<const EnsembleStore> store;
    std::size_t memory_budget = kDefaultMemoryBudget;
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    int aggregate_level = 0;
};

/// Estimates for one cache key. Shared between coalesced requests.
struct Computation {
    std::string key;
    std::shared_ptr<const ViewPlan> view;      ///< chord views
    std::shared_ptr<const MatrixPlan> matrix;  ///< matrix view
    std::vector<PairResult> results;
    std::vector<std::atomic<bool>> ready;
    Progress progress;

    enum class State { Running, Done, Failed } state = State::Running;
    std::string error;
    int waiters = 0;
    std::mutex m;
    std::condition_variable cv;

    const std::vector<PlannedPair>& pairs() const { return view ? view->pairs : matrix->pairs; }
    double fraction() const {
        const auto t = progress.total.load();
        return t > 0 ? std::min(1.0, double(progress.done.load()) / double(t)) : 0.0;
    }
};

enum class JobState { Queued, Running, Done, Failed };

inline std::string to_string(JobState s) {
    switch (s) {
        case JobState::Queued: return "queued";
        case JobState::Running: return "running";
        case JobState::Done: return "done";
        default: return "failed";
    }
}

struct Job {
    std::string id;
    std::string kind;  ///< context | focus | matrix
    std::string session;
    std::string result;  ///< resource path of the result
    JobState state = JobState::Queued;
    std::string error;
    double progress = 0.0;  ///< monotone; read through Service::job_json
    bool cache_hit = false;
    std::shared_ptr<Computation> computation;
    std::shared_ptr<const ViewPlan> view;  ///< chord jobs
    std::atomic<bool> cancel{false};
    std::thread worker;
};

/// One level of focus navigation (level 0 is the context view).
struct NavEntry {
    std::string kind;
    VoxelBox a, b;  ///< refined bricks (focus)
    std::shared_ptr<Computation> computation;
    DiagramModel diagram;
};

struct Session {
    std::string id;
    std::string dataset;
    PipelineConfig config;
    DiagramOptions view;
    BrickPartition partition;
    std::unique_ptr<BrickHierarchy> hierarchy;
    std::vector<NavEntry> stack;
    std::shared_ptr<Computation> matrix;
    std::optional<MatrixModel> matrix_model;
    std::string active_job;
    std::mutex m;

    std::size_t depth() const noexcept { return stack.empty() ? 0 : stack.size() - 1; }
};

/// Raw voxel box covered by aggregate cell `c` at `level`.
inline VoxelBox cell_box(const Coord3& c, int level, const Dims3& grid) {
    VoxelBox b;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = c[a] << level;
        b.hi[a] = std::min(grid[a], (c[a] + 1) << level);
    }
    return b;
}

inline std::string edge_id(int a, int b, int variable) { return std::to_string(a) + "-" + std::to_string(b) + "-" + std::to_string(variable); }

inline std::tuple<int, int, int> parse_edge_id(const std::string& s) {
    int a = 0, b = 0, v = 0;
    char d1 = 0, d2 = 0;
    std::istringstream in(s);
    if (!(in >> a >> d1 >> b >> d2 >> v) || d1 != '-' || d2 != '-' || !in.eof()) throw DataError("malformed edge id '" + s + "'");
    return {a, b, v};
}

class Service {
public:
    explicit Service(std::size_t memory_budget = kDefaultMemoryBudget) : memory_budget_(memory_budget) {
        if (memory_budget_ == 0) throw RangeError("memory budget must be positive");
    }
    ~Service() { shutdown(); }
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Cancels running jobs and waits for their threads.
    void shutdown() {
        std::vector<std::shared_ptr<Job>> jobs;
        {
            std::lock_guard lk(m_);
            for (auto& [id, j] : jobs_) jobs.push_back(j);
        }
        for (auto& j : jobs) {
            j->cancel = true;
            if (auto c = j->computation) {
                c->progress.cancel = true;
                c->cv.notify_all();
            }
        }
        for (auto& j : jobs)
            if (j->worker.joinable()) j->worker.join();
    }

    /// Number of estimate sets actually computed (cache misses).
    std::int64_t computations() const noexcept { return computed_.load(); }

    // Datasets -------------------------------------------------------------

    Json open_dataset(const Json& body) {
        auto ds = std::make_shared<Dataset>();
        ds->memory_budget = memory_budget_;
        if (body.contains("memory_budget")) {
            const auto& b = body["memory_budget"];
            if (!b.is_number() || b.get<double>() < 1) throw RangeError("memory_budget must be a positive byte count");
            ds->memory_budget = b.get<std::size_t>();
        }
        if (body.contains("spacing")) {
            const auto& s = body["spacing"];
            if (!s.is_array() || s.size() != 3) throw DataError("spacing expects three numbers");
            for (int a = 0; a < 3; ++a) {
                ds->spacing[a] = s[a].get<double>();
                if (!(ds->spacing[a] > 0)) throw RangeError("spacing must be positive");
            }
        }
        std::optional<EnsembleGrid> grid;
        if (body.contains("path")) {
            const auto path = body["path"].get<std::string>();
            if (!std::filesystem::exists(path)) throw NotFoundError("no such file: " + path);
            grid = load_ensemble(path);
            ds->source = path;
        } else if (body.contains("synthetic")) {
            const auto& s = body["synthetic"];
            SynthSpec spec;
            if (s.is_string()) spec = parse_synth_spec(s.get<std::string>());
            else if (s.is_object() && s.value("preset", "") == "two_cluster") {
                Dims3 d{64, 64, 16};
                if (s.contains("dims")) d = {s["dims"][0].get<std::int64_t>(), s["dims"][1].get<std::int64_t>(), s["dims"][2].get<std::int64_t>()};
                spec = two_cluster_spec(d, s.value("members", std::int64_t{100}), s.value("seed", std::uint64_t{42}));
            } else throw DataError("synthetic expects spec text or {\"preset\": \"two_cluster\"}");
            grid = gen_synthetic(spec);
            ds->source = "synthetic";
        } else throw DataError("dataset request needs 'path' or 'synthetic'");
        ds->store = std::make_shared<const EnsembleStore>(std::move(*grid));
        ds->aggregate_level = ds->store->level_for_budget(ds->memory_budget);
        std::lock_guard lk(m_);
        ds->id = "d" + std::to_string(++next_dataset_);
        datasets_[ds->id] = ds;
        return dataset_json(*ds);
    }

    Json dataset_json(const std::string& id) const { return dataset_json(*dataset(id)); }

    static Json dataset_json(const Dataset& d) {
        const auto& g = d.store->grid();
        Json vars = Json::array();
        for (const auto& v : g.variables()) vars.push_back({{"name", v.name}, {"units", v.units}, {"min", v.min_value}, {"max", v.max_value}});
        return {{"id", d.id},
                {"source", d.source},
                {"dims", {g.dims().x, g.dims().y, g.dims().z}},
                {"members", g.members()},
                {"variables", vars},
                {"spacing", d.spacing},
                {"mean_tree_levels", d.store->max_level()},
                {"raw_bytes", g.raw_bytes()},
                {"memory_budget", d.memory_budget},
                {"fits_memory", d.aggregate_level == 0},
                {"aggregate_level", d.aggregate_level}};
    }

    // Sessions -------------------------------------------------------------

    Json create_session(const Json& body) {
        const auto ds = dataset(body.at("dataset").get<std::string>());
        auto s = std::make_shared<Session>();
        s->dataset = ds->id;
        s->config.memory_budget = ds->memory_budget;
        s->view.spacing = ds->spacing;
        apply_config(*s, *ds, body);
        std::lock_guard lk(m_);
        s->id = "s" + std::to_string(++next_session_);
        sessions_[s->id] = s;
        return session_json_locked(*s);
    }

    Json session_json(const std::string& id) {
        auto s = session(id);
        std::lock_guard lk(s->m);
        return session_json_locked(*s);
    }

    /// Starts the all-pairs context computation. Optional body overrides the session settings.
    Json compute_context(const std::string& sid, const Json& body) {
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        std::unique_lock lk(s->m);
        check_idle(*s);
        apply_config(*s, *ds, body);
        auto plan = std::make_shared<ViewPlan>(plan_context(*ds->store, s->partition, s->config));
        const auto key = ds->id + "|context|" + s->config.key();
        return start_view_job(s, ds, "context", std::move(plan), key, VoxelBox{}, VoxelBox{}, false);
    }

    /**
     * Refines an edge ({"edge": id}) or a single node ({"node": id}) of the
     * current diagram into a focus view pushed on the navigation stack.
     */
    Json refine_focus(const std::string& sid, const Json& body) {
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        std::unique_lock lk(s->m);
        check_idle(*s);
        if (s->stack.empty()) throw ConflictError("compute the context diagram first");
        const auto& cur = s->stack.back().diagram;
        int na = 0, nb = 0;
        if (body.contains("edge")) {
            const auto [a, b, v] = parse_edge_id(body["edge"].get<std::string>());
            const bool present = std::any_of(cur.edges.begin(), cur.edges.end(), [&](const DiagramEdge& e) { return e.a == a && e.b == b && e.variable == v; });
            if (!present) throw NotFoundError("edge " + body["edge"].get<std::string>() + " is not in the current diagram");
            na = a;
            nb = b;
        } else if (body.contains("node")) {
            na = nb = body["node"].get<int>();
        } else throw DataError("focus request needs 'edge' or 'node'");
        if (na < 0 || nb < 0 || na >= std::ssize(cur.nodes) || nb >= std::ssize(cur.nodes)) throw NotFoundError("node id out of range");
        const auto a = cur.nodes[na].box, b = cur.nodes[nb].box;
        auto plan = std::make_shared<ViewPlan>(plan_focus(*ds->store, *s->hierarchy, a, b, s->config));
        std::ostringstream key;
        key << ds->id << "|focus|" << s->config.key() << "|" << detail::box_label(a) << "|" << detail::box_label(b);
        return start_view_job(s, ds, "focus", std::move(plan), key.str(), a, b, true);
    }

    /// Pops k levels and returns the revealed diagram from the stack cache.
    Json navigate_back(const std::string& sid, int k) {
        auto s = session(sid);
        std::lock_guard lk(s->m);
        check_idle(*s);
        if (k < 1 || k > static_cast<int>(s->depth()))
            throw RangeError("cannot go back " + std::to_string(k) + " level(s) from depth " + std::to_string(s->depth()));
        s->stack.resize(s->stack.size() - static_cast<std::size_t>(k));
        return to_json(s->stack.back().diagram);
    }

    Json diagram(const std::string& sid) {
        auto s = session(sid);
        std::lock_guard lk(s->m);
        if (s->stack.empty()) throw NotFoundError("session has no diagram yet");
        return to_json(s->stack.back().diagram);
    }

    /// Re-filters the current diagram from cached estimates.
    Json set_filters(const std::string& sid, const Json& body) {
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        std::lock_guard lk(s->m);
        check_idle(*s);
        read_filters(s->view, body);
        if (s->stack.empty()) return session_json_locked(*s);
        auto& top = s->stack.back();
        top.diagram = rebuild(*ds, *s, top);
        return to_json(top.diagram);
    }

    Json edge_detail(const std::string& sid, const std::string& eid) {
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        std::lock_guard lk(s->m);
        if (s->stack.empty()) throw NotFoundError("session has no diagram yet");
        const auto [a, b, v] = parse_edge_id(eid);
        const auto& top = s->stack.back();
        const auto& edges = top.diagram.edges;
        const auto it = std::find_if(edges.begin(), edges.end(), [&](const DiagramEdge& e) { return e.a == a && e.b == b && e.variable == v; });
        if (it == edges.end()) throw GoneError("edge " + eid + " is not part of the current diagram");
        const auto& plan = *top.computation->view;
        const auto& nodes = top.diagram.nodes;
        Json j{{"id", eid}, {"bricks", {{"a", box_json(nodes[a].box)}, {"b", box_json(nodes[b].box)}}}, {"variable", top.diagram.variables[v]}};
        if (it->state == EdgeState::Pending) {
            j["state"] = "pending";
            return j;
        }
        std::size_t idx = 0;
        while (idx < plan.pairs.size() && !(plan.pairs[idx].a == a && plan.pairs[idx].b == b && plan.pairs[idx].variable == v)) ++idx;
        const auto& r = top.computation->results.at(idx);
        const auto& est = *r.estimate;
        const auto grid = ds->store->grid().dims();
        const auto level = plan.level;
        j["state"] = "ok";
        j["value"] = est.value;
        j["strength"] = est.strength;
        j["level"] = level;
        j["argmax"] = {{"a", {est.cell_a.x, est.cell_a.y, est.cell_a.z}},
                       {"b", {est.cell_b.x, est.cell_b.y, est.cell_b.z}},
                       {"voxels_a", box_json(cell_box(est.cell_a, level, grid))},
                       {"voxels_b", box_json(cell_box(est.cell_b, level, grid))}};
        j["samples"] = est.search.samples_used;
        j["attempts"] = est.search.attempts;
        j["strategy"] = to_string(est.search.strategy);
        j["uncertainty"] = est.search.uncertainty ? Json(*est.search.uncertainty) : Json(nullptr);
        j["elapsed_ms"] = est.search.elapsed * 1e3;
        return j;
    }

    /// Inter-variable matrix; with one variable this falls back to the chord diagram.
    Json compute_matrix(const std::string& sid, const Json& body) {
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        std::unique_lock lk(s->m);
        check_idle(*s);
        apply_config(*s, *ds, body);
        if (s->config.variables.size() < 2) {
            auto plan = std::make_shared<ViewPlan>(plan_context(*ds->store, s->partition, s->config));
            auto j = start_view_job(s, ds, "context", std::move(plan), ds->id + "|context|" + s->config.key(), VoxelBox{}, VoxelBox{}, false);
            j["fallback"] = "chord";
            return j;
        }
        auto plan = std::make_shared<MatrixPlan>(plan_matrix(*ds->store, s->partition, s->config));
        const auto key = ds->id + "|matrix|" + s->config.key();
        auto job = new_job("matrix", s->id, "/sessions/" + s->id + "/matrix");
        s->active_job = job->id;
        job->worker = std::thread([this, job, s, ds, plan, key, cfg = s->config] {
            run_job(job, ds, key, cfg, [&](const std::shared_ptr<Computation>& c) { c->matrix = plan; }, [&](const std::shared_ptr<Computation>& c) {
                std::lock_guard lk(s->m);
                s->matrix = c;
                s->matrix_model = build_matrix_view(*ds->store, *plan, c->results, s->config);
                s->active_job.clear();
            }, [&] {
                std::lock_guard lk(s->m);
                s->active_job.clear();
            });
        });
        return job_json_locked(*job);
    }

    Json matrix(const std::string& sid) {
        auto s = session(sid);
        std::lock_guard lk(s->m);
        if (!s->matrix_model) throw NotFoundError("session has no matrix yet");
        return to_json(*s->matrix_model);
    }

    // Jobs -----------------------------------------------------------------

    Json job_json(const std::string& id) {
        auto j = job(id);
        std::lock_guard lk(m_);
        return job_json_locked(*j);
    }

    Json cancel_job(const std::string& id) {
        auto j = job(id);
        j->cancel = true;
        {
            std::lock_guard lk(m_);
            if (auto c = j->computation) {
                std::lock_guard ck(c->m);
                if (c->waiters <= 1) c->progress.cancel = true;
            }
            if (auto c = j->computation) c->cv.notify_all();
        }
        return job_json(id);
    }

    /// Diagram of a running view job with unfinished pairs marked pending.
    Json job_partial(const std::string& id) {
        auto j = job(id);
        std::shared_ptr<Computation> c;
        std::string sid;
        {
            std::lock_guard lk(m_);
            c = j->computation;
            sid = j->session;
        }
        if (!j->view) throw NotFoundError("job has no chord view");
        auto s = session(sid);
        const auto ds = dataset(s->dataset);
        PipelineConfig cfg;
        DiagramOptions opt;
        {
            std::lock_guard lk(s->m);
            cfg = s->config;
            opt = s->view;
        }
        if (!c) return to_json(build_view(*ds->store, *j->view, pair_values(*j->view, {}), cfg, opt));
        return to_json(build_view(*ds->store, *c->view, pair_values(*c->view, c->results, &c->ready), cfg, opt));
    }

    /// Blocks until the job is terminal (test and CLI helper).
    Json wait_job(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(10)) {
        const auto end = std::chrono::steady_clock::now() + timeout;
        while (std::chrono::steady_clock::now() < end) {
            auto j = job_json(id);
            if (j["state"] == "done" || j["state"] == "failed") return j;
            std::this_thread::sleep_for(std::chrono::milliseconds(5));
        }
        throw ConflictError("job " + id + " did not finish in time");
    }

private:
    std::shared_ptr<Dataset> dataset(const std::string& id) const {
        std::lock_guard lk(m_);
        auto it = datasets_.find(id);
        if (it == datasets_.end()) throw NotFoundError("unknown dataset " + id);
        return it->second;
    }
    std::shared_ptr<Session> session(const std::string& id) const {
        std::lock_guard lk(m_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
        return it->second;
    }
    std::shared_ptr<Job> job(const std::string& id) const {
        std::lock_guard lk(m_);
        auto it = jobs_.find(id);
        if (it == jobs_.end()) throw NotFoundError("unknown job " + id);
        return it->second;
    }

    static void check_idle(const Session& s) {
        if (!s.active_job.empty()) throw ConflictError("session " + s.id + " has a running job " + s.active_job);
    }

    static std::optional<Range> read_range(const Json& j) {
        if (j.is_null()) return std::nullopt;
        if (!j.is_array() || j.size() != 2) throw DataError("range expects [lo, hi]");
        Range r{j[0].get<double>(), j[1].get<double>()};
        if (!(r.lo <= r.hi)) throw RangeError("range must satisfy lo <= hi");
        return r;
    }

    static void read_filters(DiagramOptions& v, const Json& body) {
        const Json& f = body.contains("filters") ? body["filters"] : body;
        if (f.contains("value")) v.value_filter = read_range(f["value"]);
        if (f.contains("distance")) v.distance_filter = read_range(f["distance"]);
        if (f.contains("color")) v.color_range = read_range(f["color"]);
        if (body.contains("beta")) v.beta = body["beta"].get<double>();
    }

    /// Reads session settings from a request; the partition follows the brick settings.
    static void apply_config(Session& s, const Dataset& ds, const Json& body) {
        auto& c = s.config;
        const auto& g = ds.store->grid();
        if (body.contains("variables")) {
            c.variables.clear();
            for (const auto& v : body["variables"]) c.variables.push_back(v.is_string() ? g.variable_index(v.get<std::string>()) : v.get<std::size_t>());
        }
        if (body.contains("measure")) c.measure = parse_measure(body["measure"].get<std::string>());
        if (body.contains("brick_edge")) c.brick_edge = body["brick_edge"].get<std::int64_t>();
        if (body.contains("bricks")) c.bricks = body["bricks"].get<std::int64_t>();
        if (body.contains("strategy")) {
            const auto st = body["strategy"].get<std::string>();
            if (st == "auto") c.strategy.reset();
            else c.strategy = parse_strategy(st);
        }
        if (body.contains("budget")) c.search.budget = body["budget"].get<int>();
        if (body.contains("init_count")) c.search.init_count = body["init_count"].get<int>();
        if (body.contains("kappa")) c.search.kappa = body["kappa"].get<double>();
        if (body.contains("seed")) c.search.seed = body["seed"].get<std::uint64_t>();
        if (body.contains("level")) c.level = body["level"].is_null() ? std::nullopt : std::optional<int>(body["level"].get<int>());
        if (body.contains("k")) c.k = body["k"].is_null() ? std::nullopt : std::optional<int>(body["k"].get<int>());
        read_filters(s.view, body);
        if (c.variables.empty() || c.variables.size() > 2) throw RangeError("one or two variables expected");
        for (auto v : c.variables) g.variable(v);
        if (c.search.budget < 1) throw RangeError("budget must be >= 1");
        query_level(*ds.store, c);
        s.partition = make_partition(g.dims(), c);
        s.hierarchy = std::make_unique<BrickHierarchy>(s.partition, std::max<std::int64_t>(2, s.partition.count()));
    }

    Json session_json_locked(const Session& s) const {
        Json crumbs = Json::array();
        for (const auto& e : s.stack) {
            Json c{{"kind", e.kind}};
            if (e.kind == "focus") c["bricks"] = {box_json(e.a), box_json(e.b)};
            crumbs.push_back(c);
        }
        Json vars = Json::array();
        for (auto v : s.config.variables) vars.push_back(v);
        return {{"id", s.id},
                {"dataset", s.dataset},
                {"measure", to_string(s.config.measure)},
                {"variables", vars},
                {"bricks", s.partition.count()},
                {"brick_dims", {s.partition.brick_dims.x, s.partition.brick_dims.y, s.partition.brick_dims.z}},
                {"strategy", s.config.strategy ? to_string(*s.config.strategy) : "auto"},
                {"budget", s.config.search.budget},
                {"seed", s.config.search.seed},
                {"filters", {{"value", range_json(s.view.value_filter)}, {"distance", range_json(s.view.distance_filter)}}},
                {"depth", s.depth()},
                {"breadcrumb", crumbs},
                {"active_job", s.active_job.empty() ? Json(nullptr) : Json(s.active_job)}};
    }

    Json job_json_locked(Job& j) const {
        if (j.computation && j.state != JobState::Failed) j.progress = std::max(j.progress, j.computation->fraction());
        if (j.state == JobState::Done) j.progress = 1.0;
        return {{"id", j.id},
                {"kind", j.kind},
                {"session", j.session},
                {"state", to_string(j.state)},
                {"progress", j.progress},
                {"cache_hit", j.cache_hit},
                {"result", j.state == JobState::Done ? Json(j.result) : Json(nullptr)},
                {"error", j.error.empty() ? Json(nullptr) : Json(j.error)}};
    }

    std::shared_ptr<Job> new_job(const std::string& kind, const std::string& sid, const std::string& result) {
        auto job = std::make_shared<Job>();
        job->kind = kind;
        job->session = sid;
        job->result = result;
        std::lock_guard lk(m_);
        job->id = "j" + std::to_string(++next_job_);
        jobs_[job->id] = job;
        return job;
    }

    DiagramModel rebuild(const Dataset& ds, const Session& s, const NavEntry& e) const {
        auto d = build_view(*ds.store, *e.computation->view, pair_values(*e.computation->view, e.computation->results), s.config, s.view);
        d.first_pick = e.diagram.first_pick;
        d.second_pick = e.diagram.second_pick;
        return d;
    }

    // Must be called with the session locked; the job thread takes the lock itself.
    Json start_view_job(const std::shared_ptr<Session>& s, const std::shared_ptr<Dataset>& ds, const std::string& kind, std::shared_ptr<ViewPlan> plan,
                        const std::string& key, VoxelBox a, VoxelBox b, bool push) {
        auto job = new_job(kind, s->id, "/sessions/" + s->id + "/diagram");
        job->view = plan;
        s->active_job = job->id;
        job->worker = std::thread([this, job, s, ds, plan, key, kind, a, b, push, cfg = s->config] {
            run_job(job, ds, key, cfg, [&](const std::shared_ptr<Computation>& c) { c->view = plan; }, [&](const std::shared_ptr<Computation>& c) {
                std::lock_guard lk(s->m);
                NavEntry e{kind, a, b, c, {}};
                e.diagram = build_view(*ds->store, *c->view, pair_values(*c->view, c->results), s->config, s->view);
                if (!push) s->stack.clear();
                s->stack.push_back(std::move(e));
                s->active_job.clear();
            }, [&] {
                std::lock_guard lk(s->m);
                s->active_job.clear();
            });
        });
        std::lock_guard lk(m_);
        return job_json_locked(*job);
    }

    /// Gets or computes the estimates for `key`, coalescing identical requests.
    template <typename Init, typename Finish, typename Fail>
    void run_job(const std::shared_ptr<Job>& job, const std::shared_ptr<Dataset>& ds, const std::string& key, const PipelineConfig& cfg, Init init,
                 Finish finish, Fail fail) {
        std::shared_ptr<Computation> c;
        bool owner = false;
        try {
            {
                std::lock_guard lk(m_);
                auto it = cache_.find(key);
                if (it != cache_.end()) c = it->second;
                else {
                    c = std::make_shared<Computation>();
                    c->key = key;
                    init(c);
                    c->ready = std::vector<std::atomic<bool>>(c->pairs().size());
                    c->results.resize(c->pairs().size());
                    c->progress.ready = &c->ready;
                    cache_[key] = c;
                    owner = true;
                }
                job->computation = c;
                job->state = JobState::Running;
                std::lock_guard ck(c->m);
                ++c->waiters;
                job->cache_hit = !owner && c->state == Computation::State::Done;
            }
            if (owner) {
                ++computed_;
                try {
                    run_pairs(*ds->store, c->pairs(), cfg, c->results, &c->progress);
                    std::lock_guard ck(c->m);
                    c->state = Computation::State::Done;
                } catch (const std::exception& e) {
                    {
                        std::lock_guard lk(m_);
                        cache_.erase(key);  // partial results are discarded
                    }
                    std::lock_guard ck(c->m);
                    c->state = Computation::State::Failed;
                    c->error = dynamic_cast<const CancelledError*>(&e) ? "cancelled" : e.what();
                }
                c->cv.notify_all();
            } else {
                std::unique_lock ck(c->m);
                c->cv.wait(ck, [&] { return c->state != Computation::State::Running || job->cancel.load(); });
                if (job->cancel && c->state == Computation::State::Running) {
                    --c->waiters;
                    throw CancelledError();
                }
            }
            {
                std::lock_guard ck(c->m);
                --c->waiters;
                if (c->state == Computation::State::Failed) throw std::runtime_error(c->error);
            }
            finish(c);
            std::lock_guard lk(m_);
            job->state = JobState::Done;
            job->progress = 1.0;
        } catch (const std::exception& e) {
            fail();
            std::lock_guard lk(m_);
            job->state = JobState::Failed;
            job->error = dynamic_cast<const CancelledError*>(&e) ? "cancelled" : e.what();
        }
    }

    std::size_t memory_budget_;
    mutable std::mutex m_;
    std::map<std::string, std::shared_ptr<Dataset>> datasets_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::map<std::string, std::shared_ptr<Job>> jobs_;
    std::map<std::string, std::shared_ptr<Computation>> cache_;
    std::int64_t next_dataset_ = 0, next_session_ = 0, next_job_ = 0;
    std::atomic<std::int64_t> computed_{0};
};

} // namespace corrchord
