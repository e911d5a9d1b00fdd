#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "corrchord/layout/diagram.hpp"

namespace corrchord {

struct SvgOptions {
    int width = 512;
    int height = 512;
    double stroke = 1.0;
    Palette palette{};
};

namespace detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

struct Viewport {
    double cx, cy, scale;
    double px(double x) const { return cx + scale * x; }
    double py(double y) const { return cy - scale * y; }
};

inline Viewport viewport(const SvgOptions& o) {
    if (o.width <= 0 || o.height <= 0) throw RangeError("svg: viewport must have positive size");
    return {0.5 * o.width, 0.5 * o.height, 0.40 * std::min(o.width, o.height)};
}

// Annular sector between radii r0 < r1 over [a0, a1] (clockwise from 12 o'clock).
inline std::string sector(const Viewport& v, double r0, double r1, double a0, double a1) {
    const auto P = [&](double r, double a) { return fmt(v.px(r * std::sin(a))) + "," + fmt(v.py(r * std::cos(a))); };
    const int large = (a1 - a0) > 3.141592653589793 ? 1 : 0;
    std::string d = "M" + P(r0, a0) + " L" + P(r1, a0);
    d += " A" + fmt(r1 * v.scale) + "," + fmt(r1 * v.scale) + " 0 " + std::to_string(large) + " 1 " + P(r1, a1);
    d += " L" + P(r0, a1);
    d += " A" + fmt(r0 * v.scale) + "," + fmt(r0 * v.scale) + " 0 " + std::to_string(large) + " 0 " + P(r0, a0) + " Z";
    return d;
}

} // namespace detail

/// Deterministic SVG rendering of a chord diagram; edges appear in rank order.
inline std::string export_svg(const DiagramModel& m, const SvgOptions& o = {}) {
    const auto v = detail::viewport(o);
    using detail::fmt;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height << "\" viewBox=\"0 0 " << o.width << ' '
      << o.height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s << "<circle class=\"outline\" cx=\"" << fmt(v.cx) << "\" cy=\"" << fmt(v.cy) << "\" r=\"" << fmt(v.scale) << "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
    if (m.kind == "focus") {
        // Bottom half belongs to the first pick, top half to the second.
        const double r = 1.16 * v.scale;
        s << "<path class=\"semicircle\" d=\"M" << fmt(v.cx + r) << ',' << fmt(v.cy) << " A" << fmt(r) << ',' << fmt(r) << " 0 0 1 " << fmt(v.cx - r) << ','
          << fmt(v.cy) << "\" fill=\"none\" stroke=\"" << to_hex(o.palette.first_pick) << "\" stroke-width=\"2\"/>\n";
        s << "<path class=\"semicircle\" d=\"M" << fmt(v.cx - r) << ',' << fmt(v.cy) << " A" << fmt(r) << ',' << fmt(r) << " 0 0 1 " << fmt(v.cx + r) << ','
          << fmt(v.cy) << "\" fill=\"none\" stroke=\"" << to_hex(o.palette.second_pick) << "\" stroke-width=\"2\"/>\n";
    }
    s << "<g class=\"edges\" fill=\"none\">\n";
    for (const auto& e : m.edges) {
        s << "<path class=\"edge\" data-rank=\"" << e.rank << "\" stroke=\"" << e.color << "\" stroke-width=\"" << fmt(o.stroke) << "\" d=\"";
        for (std::size_t i = 0; i < e.polyline.size(); ++i)
            s << (i ? " L" : "M") << fmt(v.px(e.polyline[i][0])) << ',' << fmt(v.py(e.polyline[i][1]));
        s << "\"/>\n";
    }
    s << "</g>\n<g class=\"ring\">\n";
    const int nvar = std::max<int>(1, static_cast<int>(m.variables.size()));
    for (const auto& r : m.ring) {
        const double w = 0.08 / nvar;
        const double r0 = 1.04 + w * r.variable, r1 = r0 + w;
        const int g = static_cast<int>(std::lround(235.0 - 200.0 * std::clamp(r.level, 0.0, 1.0)));
        s << "<path class=\"ring-segment\" fill=\"" << to_hex({g, g, g}) << "\" d=\"" << detail::sector(v, r0, r1, r.start, r.end) << "\"/>\n";
    }
    s << "</g>\n<g class=\"nodes\">\n";
    for (const auto& n : m.nodes)
        s << "<circle class=\"node\" data-id=\"" << n.id << "\" cx=\"" << fmt(v.px(n.x)) << "\" cy=\"" << fmt(v.py(n.y)) << "\" r=\"2\" fill=\"#444444\"/>\n";
    s << "</g>\n";
    const auto marker = [&](int id, Rgb color) {
        if (id < 0 || id >= static_cast<int>(m.nodes.size())) return;
        const auto& n = m.nodes[id];
        const double r0 = 1.2, r1 = 1.3, da = 0.04;
        const auto P = [&](double r, double a) { return fmt(v.px(r * std::sin(a))) + "," + fmt(v.py(r * std::cos(a))); };
        s << "<polygon class=\"selection\" fill=\"" << to_hex(color) << "\" points=\"" << P(r0, n.angle) << ' ' << P(r1, n.angle - da) << ' '
          << P(r1, n.angle + da) << "\"/>\n";
    };
    if (m.first_pick) marker(*m.first_pick, o.palette.first_pick);
    if (m.second_pick) marker(*m.second_pick, o.palette.second_pick);
    s << "</svg>\n";
    return s.str();
}

/// Matrix view: filled cells plus spread strips along the top row and left column.
inline std::string export_svg(const MatrixModel& m, const SvgOptions& o = {}) {
    if (o.width <= 0 || o.height <= 0) throw RangeError("svg: viewport must have positive size");
    using detail::fmt;
    const auto n = m.size();
    const double side = std::min(o.width, o.height);
    const double cell = n ? side / double(n + 1) : side;
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.width << "\" height=\"" << o.height << "\" viewBox=\"0 0 " << o.width << ' '
      << o.height << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    double mx1 = 0.0, mx2 = 0.0;
    for (const auto& r : m.regions) {
        mx1 = std::max(mx1, r.spread1);
        mx2 = std::max(mx2, r.spread2);
    }
    const auto grey = [](double level) {
        const int g = static_cast<int>(std::lround(235.0 - 200.0 * std::clamp(level, 0.0, 1.0)));
        return to_hex({g, g, g});
    };
    for (std::size_t i = 0; i < n; ++i) {
        // Columns carry variable 1, rows variable 2.
        s << "<rect class=\"spread\" x=\"" << fmt(cell * double(i + 1)) << "\" y=\"0.000\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell)
          << "\" fill=\"" << grey(mx1 > 0 ? m.regions[i].spread1 / mx1 : 0.0) << "\"/>\n";
        s << "<rect class=\"spread\" x=\"0.000\" y=\"" << fmt(cell * double(i + 1)) << "\" width=\"" << fmt(cell) << "\" height=\"" << fmt(cell)
          << "\" fill=\"" << grey(mx2 > 0 ? m.regions[i].spread2 / mx2 : 0.0) << "\"/>\n";
    }
    const Palette& pal = o.palette;
    const double w = m.color_range.hi - m.color_range.lo;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) {
            const auto& x = m.cell(r, c);
            std::string fill, cls = "cell";
            if (x.pending) fill = to_hex(pal.background), cls += " pending";
            else if (!x.value) fill = "#ffffff", cls += " undefined";
            else fill = to_hex(mix(pal.background, pal.keys.front(), w > 0 ? (x.strength - m.color_range.lo) / w : 1.0));
            s << "<rect class=\"" << cls << "\" x=\"" << fmt(cell * double(c + 1)) << "\" y=\"" << fmt(cell * double(r + 1)) << "\" width=\"" << fmt(cell)
              << "\" height=\"" << fmt(cell) << "\" fill=\"" << fill << "\"";
            if (!x.pending && !x.value) s << " stroke=\"#999999\" stroke-dasharray=\"2,2\"";
            s << "/>\n";
        }
    s << "</svg>\n";
    return s.str();
}

} // namespace corrchord
