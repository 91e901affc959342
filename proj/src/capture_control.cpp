#include "herdsim/capture_control.hpp"

#include <cmath>

namespace herdsim {

Vec2 attractive_force(const Vec2& x, const Vec2& target, double gain) {
    return gain * (target - x);
}

Vec2 repulsive_force(const Vec2& x, const Obstacle& obs, double obstacle_time, double gain,
                     double threshold) {
    const Obstacle snap = obs.at_time(obstacle_time);
    const Clearance c = min_distance_to_obstacle(x, snap);
    const double d = c.distance;
    if (d >= threshold) return {0.0, 0.0};
    const Vec2 away = x - c.closest;
    if (d <= 1e-9) {
        // Penetration or contact: push radially outward at the capped magnitude.
        const Vec2 dir = normalized(x - snap.center);
        const Vec2 fallback = (dir.norm_sq() > 0.0) ? dir : Vec2{1.0, 0.0};
        return (1e3 * gain) * fallback;
    }
    Vec2 f = (gain * (1.0 / d - 1.0 / threshold) / (d * d * d)) * away;
    const double cap = 1e3 * gain;
    if (f.norm() > cap) f = cap * normalized(f);
    return f;
}

Vec2 inter_defender_force(const Vec2& xi, const Vec2& xj, double gain, double threshold) {
    const Vec2 diff = xi - xj;
    const double rho = diff.norm();
    if (rho >= threshold) return {0.0, 0.0};
    if (rho <= 1e-9) return {1e3 * gain, 0.0};  // deterministic coincidence push
    Vec2 f = (gain * (1.0 / rho - 1.0 / threshold)) * diff;
    const double cap = 1e3 * gain;
    if (f.norm() > cap) f = cap * normalized(f);
    return f;
}

Vec2 capture_input(const Vec2& x, const Vec2& target, std::span<const Obstacle> obstacles,
                   double obstacle_time, std::span<const Vec2> peers, const CaptureGains& gains,
                   double v_max) {
    Vec2 total = attractive_force(x, target, gains.attract);
    for (const Obstacle& o : obstacles)
        total += repulsive_force(x, o, obstacle_time, gains.repulse, gains.obstacle_threshold);
    for (const Vec2& p : peers)
        total += inter_defender_force(x, p, gains.internal, gains.internal_threshold);
    return saturate(total, v_max);
}

}  // namespace herdsim
