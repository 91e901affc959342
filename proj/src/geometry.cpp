#include "herdsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace herdsim {

DefenseLineFrame DefenseLineFrame::from_edge(Vec2 b0, Vec2 b1) {
    const Vec2 e = b1 - b0;
    const double len = e.norm();
    if (len < 1e-12) throw std::invalid_argument("defense line edge is degenerate");
    const Vec2 u = e / len;
    DefenseLineFrame f;
    f.origin = b0;
    f.axis = u;
    // Choose theta so the frame->ground matrix columns are (-u) and the
    // outward normal: cos = -u.x, sin = u.y.
    f.theta = std::atan2(u.y, -u.x);
    f.length = len;
    return f;
}

Vec2 DefenseLineFrame::frame_to_ground(Vec2 v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 DefenseLineFrame::ground_to_frame(Vec2 v) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 Obstacle::position_at(double t) const {
    if (kind == Kind::Static || waypoints.empty()) return center;
    if (t <= waypoints.front().t) return waypoints.front().pos;
    for (std::size_t k = 1; k < waypoints.size(); ++k) {
        if (t <= waypoints[k].t) {
            const auto& a = waypoints[k - 1];
            const auto& b = waypoints[k];
            const double span = b.t - a.t;
            if (span <= 0.0) return b.pos;
            const double w = (t - a.t) / span;
            return a.pos + (b.pos - a.pos) * w;
        }
    }
    return waypoints.back().pos;
}

Vec2 Obstacle::velocity_at(double t) const {
    if (kind == Kind::Static || waypoints.size() < 2) return {};
    if (t <= waypoints.front().t || t > waypoints.back().t) return {};
    for (std::size_t k = 1; k < waypoints.size(); ++k) {
        if (t <= waypoints[k].t) {
            const auto& a = waypoints[k - 1];
            const auto& b = waypoints[k];
            const double span = b.t - a.t;
            if (span <= 0.0) return {};
            return (b.pos - a.pos) / span;
        }
    }
    return {};
}

Obstacle Obstacle::at_time(double t) const {
    Obstacle o = *this;
    o.center = position_at(t);
    o.velocity = velocity_at(t);
    return o;
}

Clearance min_distance_to_obstacle(Vec2 x, const Obstacle& obs) {
    const Vec2 d = x - obs.center;
    const double r = d.norm();
    Clearance c;
    c.distance = r - obs.radius;
    // For a point at the exact center the closest boundary point is ambiguous;
    // pick the +x direction deterministically.
    const Vec2 dir = r < 1e-12 ? Vec2{1.0, 0.0} : d / r;
    c.closest = obs.center + dir * obs.radius;
    return c;
}

LosGeometry los_geometry(Vec2 xa, Vec2 xd, Vec2 b0, Vec2 b1) {
    const Vec2 e = b1 - b0;
    const double len = e.norm();
    if (len < 1e-12) throw std::invalid_argument("los_geometry: degenerate edge");
    const Vec2 sight = xa - xd;
    const double sep = sight.norm();
    if (sep < 1e-12) throw std::invalid_argument("los_geometry: coincident agents");

    const Vec2 n = rotate90(e);  // norm == len
    LosGeometry g;
    g.attacker_dist = std::abs(dot(xa - b0, n)) / len;
    g.defender_dist = std::abs(dot(xd - b0, n)) / len;
    double q = dot(sight / sep, e / len);
    q = std::clamp(q, -1.0, 1.0);
    g.los_angle = kPi - std::acos(q);
    g.angle_error = kPi / 2.0 - g.los_angle;
    return g;
}

bool left_of_line(Vec2 x, Vec2 b0, Vec2 b1) {
    return dot(x - b0, rotate90(b1 - b0)) > 0.0;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len_sq = ab.norm_sq();
    if (len_sq < 1e-24) return distance(p, a);
    const double t = std::clamp(dot(p - a, ab) / len_sq, 0.0, 1.0);
    return distance(p, a + ab * t);
}

}  // namespace herdsim
