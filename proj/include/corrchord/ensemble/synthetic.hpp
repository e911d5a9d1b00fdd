#pragma once

// Synthetic correlation ensembles.
//
// Every grid point p of member e holds (1 - w(p)) * noise(p, e) + w(p) * signal(c, e),
// where noise is i.i.d. standard normal per (variable, point, member), signal is one
// standard-normal draw per signal group and member, and c is the cluster whose
// centre is nearest to p in the l-infinity norm (ties: lowest cluster id). The
// weight w is 1 inside the cluster core and falls linearly to 0 at the cluster
// radius.
//
// Text schema (one directive per line, '#' starts a comment):
//   dims <X> <Y> <Z>
//   members <E>
//   seed <u64>
//   variable <name> [units]                      (repeatable, default "synth")
//   cluster <cx> <cy> <cz> <radius> [core=<r>] [signal=<group>]   (repeatable)
// Clusters without signal= get their own group. Clusters sharing a group are
// perfectly correlated at their cores.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "corrchord/ensemble/grid.hpp"

namespace corrchord {

struct SynthCluster {
    double cx = 0, cy = 0, cz = 0;
    double radius = 0;
    double core = 0;
    int signal = -1;  ///< signal group; -1 means "own group"
};

struct SynthSpec {
    Dims3 dims{32, 32, 8};
    std::int64_t members = 100;
    std::uint64_t seed = 42;
    std::vector<std::pair<std::string, std::string>> variables;  ///< (name, units)
    std::vector<SynthCluster> clusters;
};

class SynthSpecError : public DataError {
public:
    SynthSpecError(int line, const std::string& msg)
        : DataError("synthetic spec line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

inline SynthSpec parse_synth_spec(std::istream& in) {
    SynthSpec spec;
    std::string raw;
    int lineno = 0;
    bool have_dims = false;
    while (std::getline(in, raw)) {
        ++lineno;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string key;
        if (!(ls >> key)) continue;
        auto fail = [&](const std::string& msg) { throw SynthSpecError(lineno, msg); };
        auto expect_end = [&] {
            std::string extra;
            if (ls >> extra) fail("unexpected token '" + extra + "' after '" + key + "'");
        };
        if (key == "dims") {
            if (!(ls >> spec.dims.x >> spec.dims.y >> spec.dims.z)) fail("dims expects three integers");
            if (spec.dims.x < 1 || spec.dims.y < 1 || spec.dims.z < 1) fail("dims must be >= 1");
            expect_end();
            have_dims = true;
        } else if (key == "members") {
            if (!(ls >> spec.members) || spec.members < 2) fail("members expects an integer >= 2");
            expect_end();
        } else if (key == "seed") {
            if (!(ls >> spec.seed)) fail("seed expects an unsigned integer");
            expect_end();
        } else if (key == "variable") {
            std::string name, units;
            if (!(ls >> name)) fail("variable expects a name");
            ls >> units;
            expect_end();
            spec.variables.emplace_back(name, units);
        } else if (key == "cluster") {
            SynthCluster c;
            if (!(ls >> c.cx >> c.cy >> c.cz >> c.radius)) fail("cluster expects <cx> <cy> <cz> <radius>");
            std::string opt;
            while (ls >> opt) {
                const auto eq = opt.find('=');
                if (eq == std::string::npos) fail("cluster option '" + opt + "' must be key=value");
                const auto k = opt.substr(0, eq);
                const auto v = opt.substr(eq + 1);
                try {
                    if (k == "core") c.core = std::stod(v);
                    else if (k == "signal") c.signal = std::stoi(v);
                    else fail("unknown cluster option '" + k + "'");
                } catch (const std::logic_error&) {
                    fail("cluster option '" + opt + "' has a malformed value");
                }
            }
            if (c.radius < 0) fail("cluster radius must be >= 0");
            if (c.core < 0 || c.core > c.radius) fail("cluster core must lie in [0, radius]");
            spec.clusters.push_back(c);
        } else {
            fail("unknown directive '" + key + "'");
        }
    }
    if (!have_dims) throw SynthSpecError(lineno, "missing 'dims' directive");
    for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
        const auto& c = spec.clusters[i];
        if (c.cx < 0 || c.cy < 0 || c.cz < 0 || c.cx > double(spec.dims.x - 1) || c.cy > double(spec.dims.y - 1) ||
            c.cz > double(spec.dims.z - 1))
            throw SynthSpecError(lineno, "cluster " + std::to_string(i) + " centre lies outside the domain");
    }
    return spec;
}

inline SynthSpec parse_synth_spec(const std::string& text) {
    std::istringstream in(text);
    return parse_synth_spec(in);
}

inline SynthSpec load_synth_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open synthetic spec '" + path + "'");
    return parse_synth_spec(in);
}

/// Blend weight and owning cluster of one grid point.
struct SynthWeight {
    double w = 0.0;
    int cluster = -1;
};

inline SynthWeight synth_weight(const SynthSpec& spec, double x, double y, double z) {
    SynthWeight best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
        const auto& c = spec.clusters[i];
        const double d = std::max({std::abs(x - c.cx), std::abs(y - c.cy), std::abs(z - c.cz)});
        if (d < best_d) {
            best_d = d;
            best.cluster = static_cast<int>(i);
        }
    }
    if (best.cluster < 0) return best;
    const auto& c = spec.clusters[best.cluster];
    if (best_d <= c.core) best.w = 1.0;
    else if (best_d >= c.radius) best.w = 0.0;
    else best.w = 1.0 - (best_d - c.core) / (c.radius - c.core);
    return best;
}

/// Deterministic for a fixed spec (including its seed).
inline EnsembleGrid gen_synthetic(const SynthSpec& spec) {
    if (spec.members < 2) throw DataError("synthetic ensemble needs at least 2 members");
    auto var_names = spec.variables;
    if (var_names.empty()) var_names.emplace_back("synth", "");

    // Map cluster -> signal group.
    std::map<int, int> explicit_groups;
    std::vector<int> group_of(spec.clusters.size());
    int next_group = 0;
    for (std::size_t i = 0; i < spec.clusters.size(); ++i) {
        const int g = spec.clusters[i].signal;
        if (g < 0) {
            group_of[i] = next_group++;
        } else {
            auto [it, inserted] = explicit_groups.emplace(g, next_group);
            if (inserted) ++next_group;
            group_of[i] = it->second;
        }
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto E = spec.members;
    std::vector<double> signals(static_cast<std::size_t>(next_group * E));
    for (auto& s : signals) s = normal(rng);

    const Dims3 dims = spec.dims;
    const auto n = dims.count();
    std::vector<double> weight(static_cast<std::size_t>(n));
    std::vector<int> group(static_cast<std::size_t>(n), -1);
    for (std::int64_t i = 0; i < n; ++i) {
        const auto c = coord_of(dims, i);
        const auto sw = synth_weight(spec, double(c.x), double(c.y), double(c.z));
        weight[i] = sw.w;
        if (sw.cluster >= 0) group[i] = group_of[sw.cluster];
    }

    std::vector<float> values(static_cast<std::size_t>(n * E) * var_names.size());
    std::size_t o = 0;
    for (std::size_t v = 0; v < var_names.size(); ++v) {
        for (std::int64_t e = 0; e < E; ++e) {
            for (std::int64_t i = 0; i < n; ++i) {
                const double eta = normal(rng);
                const double w = weight[i];
                double val = eta;
                if (w > 0.0) val = (1.0 - w) * eta + w * signals[group[i] * E + e];
                values[o++] = static_cast<float>(val);
            }
        }
    }
    std::vector<VariableMeta> metas;
    for (const auto& [name, units] : var_names) metas.push_back(VariableMeta{name, units});
    return EnsembleGrid(dims, E, std::move(metas), std::move(values));
}

/// Two correlated clusters (a large one with two satellites, and a second
/// large one), all driven by one shared signal.
inline SynthSpec two_cluster_spec(Dims3 dims = {64, 64, 16}, std::int64_t members = 100, std::uint64_t seed = 42) {
    SynthSpec s;
    s.dims = dims;
    s.members = members;
    s.seed = seed;
    const auto fx = [&](double f) { return std::floor(f * double(dims.x - 1)); };
    const auto fy = [&](double f) { return std::floor(f * double(dims.y - 1)); };
    const double cz = std::floor(0.5 * double(dims.z - 1));
    const double unit = double(std::min(dims.x, dims.y)) / 64.0;
    s.clusters.push_back({fx(0.25), fy(0.25), cz, 12 * unit, 5 * unit, 0});
    s.clusters.push_back({fx(0.56), fy(0.16), cz, 5 * unit, 2 * unit, 0});
    s.clusters.push_back({fx(0.16), fy(0.56), cz, 5 * unit, 2 * unit, 0});
    s.clusters.push_back({fx(0.72), fy(0.72), cz, 12 * unit, 5 * unit, 0});
    return s;
}

} // namespace corrchord
