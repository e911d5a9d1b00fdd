#pragma once

// Wire format of diagrams and matrices. Coordinates are rounded to 1e-6 so
// the output is compact and stable across platforms.

#include <cmath>
#include <string>

#include <json.hpp>

#include "corrchord/layout/diagram.hpp"

namespace corrchord {

using Json = nlohmann::ordered_json;

inline double wire(double v) { return std::round(v * 1e6) / 1e6; }

inline Json box_json(const VoxelBox& b) {
    return Json{{"lo", {b.lo.x, b.lo.y, b.lo.z}}, {"hi", {b.hi.x, b.hi.y, b.hi.z}}};
}

inline Json range_json(const std::optional<Range>& r) {
    if (!r) return nullptr;
    return Json::array({r->lo, r->hi});
}

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json to_json(const DiagramModel& m) {
    Json j;
    j["kind"] = m.kind;
    j["measure"] = to_string(m.measure);
    j["variables"] = m.variables;
    j["candidate_edges"] = m.candidate_edges;
    j["filters"] = {{"value", range_json(m.value_filter)}, {"distance", range_json(m.distance_filter)}};
    j["color_range"] = Json::array({m.color_range.lo, m.color_range.hi});
    j["selection"] = {{"first", m.first_pick ? Json(*m.first_pick) : Json(nullptr)},
                      {"second", m.second_pick ? Json(*m.second_pick) : Json(nullptr)}};
    auto& nodes = j["nodes"] = Json::array();
    for (const auto& n : m.nodes) {
        Json s = Json::array();
        for (double v : n.spread) s.push_back(v);
        nodes.push_back({{"id", n.id},
                         {"label", n.label},
                         {"angle", wire(n.angle)},
                         {"x", wire(n.x)},
                         {"y", wire(n.y)},
                         {"side", n.side == 0 ? "circle" : (n.side == 1 ? "bottom" : "top")},
                         {"box", box_json(n.box)},
                         {"spread", s}});
    }
    auto& edges = j["edges"] = Json::array();
    for (const auto& e : m.edges) {
        Json poly = Json::array();
        for (const auto& p : e.polyline) poly.push_back({wire(p[0]), wire(p[1])});
        edges.push_back({{"id", std::to_string(e.a) + "-" + std::to_string(e.b) + "-" + std::to_string(e.variable)},
                         {"a", e.a},
                         {"b", e.b},
                         {"variable", e.variable},
                         {"state", e.state == EdgeState::Pending ? "pending" : "ok"},
                         {"value", opt_json(e.value)},
                         {"strength", e.strength},
                         {"rank", e.rank},
                         {"color", e.color},
                         {"polyline", poly}});
    }
    auto& ring = j["ring"] = Json::array();
    for (const auto& r : m.ring)
        ring.push_back({{"node", r.node},
                        {"variable", r.variable},
                        {"start", wire(r.start)},
                        {"end", wire(r.end)},
                        {"spread", r.spread},
                        {"level", r.level}});
    return j;
}

inline Json to_json(const MatrixModel& m) {
    Json j;
    j["kind"] = "matrix";
    j["measure"] = to_string(m.measure);
    j["variables"] = {m.variable1, m.variable2};
    j["orientation"] = "cell[row][col] = measure(variable1 at region col, variable2 at region row)";
    j["color_range"] = Json::array({m.color_range.lo, m.color_range.hi});
    auto& regions = j["regions"] = Json::array();
    for (const auto& r : m.regions)
        regions.push_back({{"label", r.label}, {"box", box_json(r.box)}, {"spread1", r.spread1}, {"spread2", r.spread2}});
    auto& rows = j["cells"] = Json::array();
    for (std::size_t r = 0; r < m.size(); ++r) {
        Json row = Json::array();
        for (std::size_t c = 0; c < m.size(); ++c) {
            const auto& cell = m.cell(r, c);
            const char* state = cell.pending ? "pending" : (cell.value ? "ok" : "undefined");
            row.push_back({{"state", state}, {"value", opt_json(cell.value)}, {"strength", cell.strength}});
        }
        rows.push_back(std::move(row));
    }
    return j;
}

/// Serialized text with a trailing newline.
inline std::string dump(const Json& j, int indent = -1) { return j.dump(indent) + "\n"; }

} // namespace corrchord
