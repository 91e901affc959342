#pragma once

#include <span>

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Escort-stage plan layer: a joint potential field over all defenders yields
// one shared translation command for the beacon fence, bounded so the escort
// speed-ratio guarantee survives the moving frame.

struct PlanGains {
    double target_gain = 0.05;        // attraction toward the drop-off point
    double protected_gain = 5.0;      // repulsion from the protected area center
    double obstacle_gain = 2.0;       // obstacle repulsion gain
    double obstacle_threshold = 8.0;  // meters, obstacle repulsion support
};

// Per-defender virtual force: target_gain*(x_Tc - x)
// + protected_gain*(x - x_Pc)/|x - x_Pc|^4 + short-range obstacle repulsion.
// A defender exactly at the protected center gets a capped deterministic push.
Vec2 defender_plan_force(const Vec2& x, const Vec2& target_center, const Vec2& protected_center,
                         std::span<const Obstacle> obstacles, double obstacle_time,
                         const PlanGains& gains);

// Superposition of defender_plan_force over all defenders (leader-side
// aggregation of everyone's sensed obstacles).
Vec2 joint_force(std::span<const Vec2> defenders, const Vec2& target_center,
                 const Vec2& protected_center, std::span<const Obstacle> obstacles,
                 double obstacle_time, const PlanGains& gains);

// Largest admissible fence translation speed:
// min((ratio*v_defender - v_attacker)/(1 + ratio), v_attacker).
// Throws std::invalid_argument when ratio <= v_attacker/v_defender (the moving
// fence would void the speed-ratio design).
double beacon_speed_bound(double defender_speed_max, double attacker_speed_max, double ratio);

struct BeaconCommand {
    Vec2 velocity;      // shared by every beacon
    double bound = 0.0; // the active speed bound
};

BeaconCommand beacon_velocity(const Vec2& joint, double speed_bound);

}  // namespace herdsim
