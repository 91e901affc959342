#pragma once

#include <span>

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Capture-stage potential-field control: linear attraction to the assigned
// slot, short-range obstacle repulsion, and inter-defender exclusion, with the
// resulting force saturated to the defender speed limit.

struct CaptureGains {
    double attract = 1.0;             // 1/s, slot attraction
    double repulse = 2.0;             // obstacle repulsion gain
    double obstacle_threshold = 8.0;  // meters, repulsion support radius
    double internal = 1.0;            // inter-defender exclusion gain
    double internal_threshold = 1.0;  // meters, exclusion support radius
};

Vec2 attractive_force(const Vec2& x, const Vec2& target, double gain);

// Zero at or beyond the threshold; otherwise gain*(1/d - 1/threshold)*(x - p)/d^3
// where p is the closest obstacle-boundary point and d the clearance to it.
Vec2 repulsive_force(const Vec2& x, const Obstacle& obs, double obstacle_time, double gain,
                     double threshold);

// Zero at or beyond the threshold; otherwise gain*(1/rho - 1/threshold)*(xi - xj).
// Coincident defenders produce a capped-magnitude deterministic push.
Vec2 inter_defender_force(const Vec2& xi, const Vec2& xj, double gain, double threshold);

// Full capture command: saturate(attract + sum repulsive + sum exclusion, v_max).
// `peers` must contain the other defenders only (not the one being commanded).
Vec2 capture_input(const Vec2& x, const Vec2& target, std::span<const Obstacle> obstacles,
                   double obstacle_time, std::span<const Vec2> peers, const CaptureGains& gains,
                   double v_max);

}  // namespace herdsim
