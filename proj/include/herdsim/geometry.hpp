#pragma once

#include <vector>

#include "herdsim/vec2.hpp"

namespace herdsim {

/// Local frame attached to one defense line (the segment between two
/// consecutive beacons). The frame's vertical axis is the outward normal
/// (defender side) and its horizontal axis is the reversed edge direction,
/// which is the unique right-handed pair mapped by the frame_to_ground
/// matrix [[cos t, sin t], [-sin t, cos t]].
struct DefenseLineFrame {
    Vec2 origin;   ///< first beacon of the edge
    Vec2 axis;     ///< unit direction from the first beacon to the second
    double theta;  ///< rotation angle of the frame<->ground map
    double length; ///< edge length (m)

    /// Build the frame for the edge b0 -> b1. Beacons are expected in
    /// counter-clockwise order so that the fence interior is to the left of
    /// the edge. Degenerate edges (length below 1e-12) are rejected.
    static DefenseLineFrame from_edge(Vec2 b0, Vec2 b1);

    /// Apply [[cos t, sin t], [-sin t, cos t]] to a frame-coordinate vector.
    Vec2 frame_to_ground(Vec2 v) const;
    /// Inverse of frame_to_ground (transpose of the matrix).
    Vec2 ground_to_frame(Vec2 v) const;

    /// Unit normal pointing away from the fence interior (defender side).
    Vec2 outward_normal() const { return frame_to_ground({0.0, 1.0}); }
    /// Frame horizontal unit vector expressed in ground coordinates (= -axis).
    Vec2 along() const { return frame_to_ground({1.0, 0.0}); }
};

/// Circular obstacle, either fixed or following a piecewise-linear waypoint
/// schedule (constant velocity on each segment, at rest past the last entry).
struct Obstacle {
    enum class Kind { Static, Dynamic };

    struct Waypoint {
        double t{0.0};
        Vec2 pos;
    };

    Kind kind{Kind::Static};
    Vec2 center;          ///< current (or initial) center
    double radius{1.0};
    Vec2 velocity;        ///< current velocity (derived for dynamic obstacles)
    std::vector<Waypoint> waypoints;  ///< dynamic only; strictly increasing t

    Vec2 position_at(double t) const;
    Vec2 velocity_at(double t) const;
    /// Copy with center/velocity resolved at time t.
    Obstacle at_time(double t) const;
};

/// Signed clearance from a point to an obstacle boundary: positive outside,
/// negative inside (penetration depth).
struct Clearance {
    double distance{0.0};
    Vec2 closest;  ///< closest boundary point
};
Clearance min_distance_to_obstacle(Vec2 x, const Obstacle& obs);

/// Line-of-sight geometry between an attacker and a defender relative to the
/// infinite line through one defense edge.
struct LosGeometry {
    double attacker_dist{0.0};  ///< unsigned distance from the attacker to the line
    double defender_dist{0.0};  ///< unsigned distance from the defender to the line
    double los_angle{0.0};      ///< angle between defender->attacker ray and the edge direction, in [0, pi]
    double angle_error{0.0};    ///< pi/2 - los_angle, zero when the sight line is perpendicular
};

/// Computes LosGeometry for attacker xa and defender xd against the edge
/// b0 -> b1. Throws std::invalid_argument when the edge is degenerate or the
/// two agents coincide (the sight line is undefined).
LosGeometry los_geometry(Vec2 xa, Vec2 xd, Vec2 b0, Vec2 b1);

/// True when x lies on the left side of the directed line b0 -> b1
/// (the fence-interior side for counter-clockwise beacons).
bool left_of_line(Vec2 x, Vec2 b0, Vec2 b1);

/// Unsigned distance from point p to the segment [a, b].
double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace herdsim
