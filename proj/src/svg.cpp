#include "herdsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "herdsim/export.hpp"
#include "herdsim/reach_avoid.hpp"

namespace herdsim {

namespace {

struct Bounds {
    double min_x = std::numeric_limits<double>::infinity();
    double min_y = std::numeric_limits<double>::infinity();
    double max_x = -std::numeric_limits<double>::infinity();
    double max_y = -std::numeric_limits<double>::infinity();

    void include(Vec2 p, double pad = 0.0) {
        min_x = std::min(min_x, p.x - pad);
        min_y = std::min(min_y, p.y - pad);
        max_x = std::max(max_x, p.x + pad);
        max_y = std::max(max_y, p.y + pad);
    }
};

// Ground -> pixel mapping with the y axis flipped (SVG grows downward).
struct Mapper {
    Bounds bounds;
    double scale = 24.0;

    double width() const { return (bounds.max_x - bounds.min_x) * scale; }
    double height() const { return (bounds.max_y - bounds.min_y) * scale; }
    double x(double gx) const { return (gx - bounds.min_x) * scale; }
    double y(double gy) const { return (bounds.max_y - gy) * scale; }
    double len(double meters) const { return meters * scale; }
};

const char* kDefenderColors[] = {"#1f77b4", "#2ca02c", "#9467bd", "#8c564b",
                                 "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};

std::string num(double v) { return format_number(v); }

void circle(std::ostringstream& out, const Mapper& m, Vec2 center, double radius,
            const std::string& attrs) {
    out << "  <circle cx=\"" << num(m.x(center.x)) << "\" cy=\"" << num(m.y(center.y))
        << "\" r=\"" << num(m.len(radius)) << "\" " << attrs << "/>\n";
}

void polyline(std::ostringstream& out, const Mapper& m, const std::vector<Vec2>& points,
              const std::string& attrs, bool close) {
    if (points.empty()) return;
    out << (close ? "  <polygon points=\"" : "  <polyline points=\"");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i) out << ' ';
        out << num(m.x(points[i].x)) << ',' << num(m.y(points[i].y));
    }
    out << "\" " << attrs << "/>\n";
}

}  // namespace

std::string render_snapshot(const SimConfig& config, const TrajectoryLog& log, double time,
                            const SnapshotStyle& style) {
    const std::vector<StepRecord>& records = log.records;
    if (records.empty()) throw std::out_of_range("snapshot: empty trajectory log");
    if (time < records.front().t - 1e-9 || time > records.back().t + 1e-9)
        throw std::out_of_range("snapshot: time " + format_number(time) +
                                " is outside the logged range [" +
                                format_number(records.front().t) + ", " +
                                format_number(records.back().t) + "]");

    // Nearest record to the requested time (records are evenly spaced).
    std::size_t index = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < records.size(); ++k) {
        const double d = std::abs(records[k].t - time);
        if (d < best) {
            best = d;
            index = k;
        }
    }
    const StepRecord& snap = records[index];
    const std::size_t n = snap.defenders.size();

    Bounds bounds;
    bounds.include(config.protected_center, config.protected_radius);
    bounds.include(config.target_center, config.target_radius);
    for (const Obstacle& obs : config.obstacles)
        bounds.include(obs.position_at(snap.t), obs.radius);
    for (std::size_t k = 0; k <= index; ++k) {
        bounds.include(records[k].attacker);
        for (const Vec2& p : records[k].defenders) bounds.include(p);
        for (const Vec2& p : records[k].beacons) bounds.include(p);
    }
    if (style.draw_apollonius) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                const ApolloniusCircle ac =
                    apollonius_circle(snap.attacker, snap.defenders[i],
                                      config.formation.design_speed_ratio);
                bounds.include(ac.center, ac.radius);
            } catch (const std::exception&) {
            }
        }
    }
    bounds.include({bounds.min_x - style.margin_meters, bounds.min_y - style.margin_meters});
    bounds.include({bounds.max_x + style.margin_meters, bounds.max_y + style.margin_meters});

    Mapper m;
    m.bounds = bounds;
    m.scale = style.pixels_per_meter;

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(m.width())
        << "\" height=\"" << num(m.height()) << "\" viewBox=\"0 0 " << num(m.width()) << ' '
        << num(m.height()) << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";

    // Mission areas.
    circle(out, m, config.protected_center, config.protected_radius,
           "fill=\"#d62728\" fill-opacity=\"0.12\" stroke=\"#d62728\" stroke-width=\"1.5\"");
    circle(out, m, config.target_center, config.target_radius,
           "fill=\"#2ca02c\" fill-opacity=\"0.12\" stroke=\"#2ca02c\" stroke-width=\"1.5\"");

    // Obstacles at the snapshot time.
    for (const Obstacle& obs : config.obstacles) {
        const bool moving = obs.kind == Obstacle::Kind::Dynamic;
        circle(out, m, obs.position_at(snap.t), obs.radius,
               std::string("fill=\"#7f7f7f\" fill-opacity=\"0.45\" stroke=\"#4d4d4d\" "
                           "stroke-width=\"1\"") +
                   (moving ? " stroke-dasharray=\"4 3\"" : ""));
    }

    // Trails up to the snapshot.
    if (style.draw_trails && index > 0) {
        std::vector<Vec2> trail;
        trail.reserve(index + 1);
        for (std::size_t i = 0; i < n; ++i) {
            trail.clear();
            for (std::size_t k = 0; k <= index; ++k) trail.push_back(records[k].defenders[i]);
            polyline(out, m, trail,
                     std::string("fill=\"none\" stroke=\"") + kDefenderColors[i % 8] +
                         "\" stroke-width=\"1\" stroke-opacity=\"0.6\"",
                     false);
        }
        trail.clear();
        for (std::size_t k = 0; k <= index; ++k) trail.push_back(records[k].attacker);
        polyline(out, m, trail,
                 "fill=\"none\" stroke=\"#111111\" stroke-width=\"1\" stroke-opacity=\"0.6\"",
                 false);
    }

    // Fence polygon (virtual slots during capture, live fence afterwards).
    polyline(out, m, snap.beacons,
             snap.stage == Stage::Capture
                 ? "fill=\"none\" stroke=\"#ff7f0e\" stroke-width=\"1.2\" stroke-dasharray=\"5 4\""
                 : "fill=\"#ff7f0e\" fill-opacity=\"0.07\" stroke=\"#ff7f0e\" stroke-width=\"1.6\"",
             true);
    for (const Vec2& b : snap.beacons)
        circle(out, m, b, 0.09, "fill=\"#ff7f0e\" stroke=\"none\"");

    // Reach discs (attacker vs each defender at the design speed ratio).
    if (style.draw_apollonius) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                const ApolloniusCircle ac =
                    apollonius_circle(snap.attacker, snap.defenders[i],
                                      config.formation.design_speed_ratio);
                circle(out, m, ac.center, ac.radius,
                       std::string("fill=\"none\" stroke=\"") + kDefenderColors[i % 8] +
                           "\" stroke-width=\"1\" stroke-dasharray=\"2 3\"");
            } catch (const std::exception&) {
            }
        }
    }

    // Agents.
    for (std::size_t i = 0; i < n; ++i)
        circle(out, m, snap.defenders[i], 0.16,
               std::string("fill=\"") + kDefenderColors[i % 8] + "\" stroke=\"none\"");
    circle(out, m, snap.attacker, 0.16, "fill=\"#111111\" stroke=\"none\"");

    out << "</svg>\n";
    return out.str();
}

}  // namespace herdsim
