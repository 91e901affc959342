#include "herdsim/escort_plan.hpp"

#include <cmath>
#include <stdexcept>

#include "herdsim/capture_control.hpp"

namespace herdsim {

Vec2 defender_plan_force(const Vec2& x, const Vec2& target_center, const Vec2& protected_center,
                         std::span<const Obstacle> obstacles, double obstacle_time,
                         const PlanGains& gains) {
    Vec2 total = gains.target_gain * (target_center - x);

    const Vec2 away = x - protected_center;
    const double d = away.norm();
    const double cap = 1e3 * gains.protected_gain;
    if (d <= 1e-9) {
        total += Vec2{cap, 0.0};  // deterministic push off the singularity
    } else {
        Vec2 rep = (gains.protected_gain / (d * d * d * d)) * away;
        if (rep.norm() > cap) rep = cap * normalized(rep);
        total += rep;
    }

    for (const Obstacle& o : obstacles)
        total += repulsive_force(x, o, obstacle_time, gains.obstacle_gain, gains.obstacle_threshold);
    return total;
}

Vec2 joint_force(std::span<const Vec2> defenders, const Vec2& target_center,
                 const Vec2& protected_center, std::span<const Obstacle> obstacles,
                 double obstacle_time, const PlanGains& gains) {
    if (defenders.empty()) throw std::invalid_argument("joint_force: no defenders");
    Vec2 total{0.0, 0.0};
    for (const Vec2& x : defenders)
        total += defender_plan_force(x, target_center, protected_center, obstacles, obstacle_time,
                                     gains);
    return total;
}

double beacon_speed_bound(double defender_speed_max, double attacker_speed_max, double ratio) {
    if (!(defender_speed_max > 0.0) || !(attacker_speed_max >= 0.0))
        throw std::invalid_argument("beacon_speed_bound: speeds must be positive");
    if (!(ratio > attacker_speed_max / defender_speed_max && ratio < 1.0))
        throw std::invalid_argument(
            "beacon_speed_bound: design ratio must exceed the attacker/defender speed ratio");
    return std::min((ratio * defender_speed_max - attacker_speed_max) / (1.0 + ratio),
                    attacker_speed_max);
}

BeaconCommand beacon_velocity(const Vec2& joint, double speed_bound) {
    return {saturate(joint, speed_bound), speed_bound};
}

}  // namespace herdsim
