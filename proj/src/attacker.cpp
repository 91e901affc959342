#include "herdsim/attacker.hpp"

#include <cmath>

#include "herdsim/capture_control.hpp"

namespace herdsim {

Vec2 seeker_input(const Vec2& xa, const Vec2& protected_center,
                  std::span<const Obstacle> obstacles, double obstacle_time,
                  const AttackerConfig& config) {
    Vec2 total = protected_center - xa;
    for (const Obstacle& o : obstacles)
        total += repulsive_force(xa, o, obstacle_time, config.obstacle_gain,
                                 config.obstacle_threshold);
    return saturate(total, config.speed_max);
}

Vec2 evade_or_random(const Vec2& xa, std::span<const Vec2> defenders,
                     std::span<const Obstacle> obstacles, double obstacle_time,
                     const AttackerConfig& config, SplitMix64& rng, AttackerRoamState& roam) {
    Vec2 repulsion{0.0, 0.0};
    bool threatened = false;
    for (const Vec2& xd : defenders) {
        const Vec2 away = xa - xd;
        const double d = away.norm();
        if (d > config.escape_range) continue;
        threatened = true;
        if (d <= 1e-9) {
            repulsion += Vec2{1e3 * config.evade_gain, 0.0};
        } else {
            repulsion += (config.evade_gain / (d * d * d)) * away;
        }
    }
    if (threatened) {
        roam.heading_valid = false;  // restart the heading hold after the scare
        for (const Obstacle& o : obstacles)
            repulsion += repulsive_force(xa, o, obstacle_time, config.obstacle_gain,
                                         config.obstacle_threshold);
        return saturate(repulsion, config.speed_max);
    }
    if (!roam.heading_valid || roam.steps_since_resample >= config.resample_period) {
        const double angle = 2.0 * kPi * rng.uniform();
        roam.heading = Vec2{std::cos(angle), std::sin(angle)};
        roam.heading_valid = true;
        roam.steps_since_resample = 0;
    }
    ++roam.steps_since_resample;
    return config.speed_max * roam.heading;
}

Vec2 scripted_input(double t, std::span<const ScriptEntry> script, double speed_max) {
    for (const ScriptEntry& entry : script) {
        if (t < entry.until) return saturate(entry.velocity, speed_max);
    }
    return {0.0, 0.0};
}

}  // namespace herdsim
