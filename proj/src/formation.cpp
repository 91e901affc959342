#include "herdsim/formation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "herdsim/reach_avoid.hpp"

namespace herdsim {

namespace {

void check_design_inputs(int n, double eps_p, double kp, double ratio) {
    if (n < 3) throw std::invalid_argument("formation needs at least 3 defenders");
    if (!(eps_p > 0.0)) throw std::invalid_argument("pursuit radius must be positive");
    if (!(kp >= 1.0)) throw std::invalid_argument("expansion factor must be >= 1");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("design speed ratio must lie in (0, 1)");
}

}  // namespace

std::optional<PursuitCircle> pc_update(const PursuitCircle& pc, Vec2 xa) {
    if (distance(xa, pc.center) < pc.radius) return std::nullopt;
    PursuitCircle next = pc;
    next.center = xa;
    next.update_count = pc.update_count + 1;
    return next;
}

double compute_eps_d(int n, double eps_p, double kp, double ratio) {
    check_design_inputs(n, eps_p, kp, ratio);
    const double half_sector = kPi / n;
    const double psi = std::asin(ratio);  // sight-angle limit of the tangent construction
    const double root = std::sqrt(1.0 - ratio * ratio);
    if (psi <= half_sector) return kp * eps_p / root;
    return kp * eps_p * (std::sin(half_sector) * ratio / root + std::cos(half_sector));
}

CriticalDistance critical_vertical_distance(double eps_p, double eps_d,
                                            double ratio, double sector) {
    if (!(eps_p > 0.0) || !(eps_d > eps_p))
        throw std::invalid_argument("critical_vertical_distance: need 0 < pursuit radius < ring radius");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("critical_vertical_distance: ratio must lie in (0, 1)");
    if (!(sector > 0.0 && sector <= 2.0 * kPi / 3.0 + 1e-12))
        throw std::invalid_argument("critical_vertical_distance: sector angle out of range");

    const double k = 1.0 - ratio * ratio;
    const auto f = [&](double eta) {
        const double c = std::cos(eta);
        const double reach = std::sqrt(eps_p * eps_p + eps_d * eps_d - 2.0 * eps_p * eps_d * c);
        return (eps_d - eps_p * c - ratio * reach) / k;
    };

    CriticalDistance r;
    r.f_at_zero = f(0.0);
    r.f_at_half_sector = f(sector / 2.0);
    r.min_distance = std::min(r.f_at_zero, r.f_at_half_sector);

    const double chi = (eps_p * eps_p + k * eps_d * eps_d) / (2.0 * eps_p * eps_d);
    if (chi <= 1.0) {
        const double eta = std::acos(chi);
        if (eta >= 0.0 && eta <= sector / 2.0) {
            r.interior_angle = eta;
            r.f_at_interior = f(eta);
            r.min_distance = std::min(r.min_distance, *r.f_at_interior);
        }
    }
    return r;
}

double compute_eps_b(double eps_d, double l_min, double sector) {
    if (!(l_min > 0.0)) throw std::invalid_argument("compute_eps_b: critical distance must be positive");
    if (!(eps_d > l_min)) throw std::invalid_argument("compute_eps_b: ring radius <= critical distance");
    return (eps_d - l_min) / std::cos(sector / 2.0);
}

FormationParams FormationParams::design(int n, double eps_p, double kp, double ratio) {
    check_design_inputs(n, eps_p, kp, ratio);
    FormationParams p;
    p.defender_count = n;
    p.pursuit_radius = eps_p;
    p.expansion_factor = kp;
    p.design_speed_ratio = ratio;
    p.sector_angle = 2.0 * kPi / n;
    p.ring_radius = compute_eps_d(n, eps_p, kp, ratio);
    const CriticalDistance cd =
        critical_vertical_distance(eps_p, p.ring_radius, ratio, p.sector_angle);
    p.critical_distance = cd.min_distance;
    p.fence_radius = compute_eps_b(p.ring_radius, p.critical_distance, p.sector_angle);

    if (!(p.apothem() > eps_p))
        throw std::invalid_argument("formation infeasible: fence apothem does not clear the pursuit circle");

    // Soundness of the synthesized fence. Each edge's guarantee domain is its
    // own sector arc (half sector either side of the slot axis): there the
    // defender slot must win the race to its line for any attacker on the
    // pursuit circle (J >= 0 up to numerical slack), and the sight-angle
    // condition must hold out to the expanded arc the slot was built for.
    const FormationLayout lay = layout({0.0, 0.0}, p);
    const double band = std::acos(ratio);
    for (int i = 0; i < n; ++i) {
        const Vec2 b0 = lay.beacon_slots[i];
        const Vec2 b1 = lay.beacon_slots[(i + 1) % n];
        const double axis = (i + 0.5) * p.sector_angle;
        for (int s = 0; s <= 120; ++s) {
            const double eta = -p.sector_angle / 2.0 + p.sector_angle * s / 120.0;
            const Vec2 on_pc{eps_p * std::cos(axis + eta), eps_p * std::sin(axis + eta)};
            const LosGeometry g = los_geometry(on_pc, lay.defender_slots[i], b0, b1);
            if (judgment(g.attacker_dist, g.defender_dist, g.los_angle, ratio) < -1e-9)
                throw std::invalid_argument("formation infeasible: synthesized fence loses the line race");

            const Vec2 on_arc{kp * eps_p * std::cos(axis + eta), kp * eps_p * std::sin(axis + eta)};
            const LosGeometry ga = los_geometry(on_arc, lay.defender_slots[i], b0, b1);
            if (std::abs(ga.angle_error) > band + 1e-9)
                throw std::invalid_argument("formation infeasible: sight-angle margin violated on expanded arc");
        }
    }
    return p;
}

double FormationParams::apothem() const {
    return fence_radius * std::cos(sector_angle / 2.0);
}

FormationLayout layout(Vec2 center, const FormationParams& p) {
    FormationLayout lay;
    lay.defender_slots.reserve(p.defender_count);
    lay.beacon_slots.reserve(p.defender_count);
    for (int i = 0; i < p.defender_count; ++i) {
        const double ad = (i + 0.5) * p.sector_angle;
        const double ab = i * p.sector_angle;
        lay.defender_slots.push_back(center + Vec2{std::cos(ad), std::sin(ad)} * p.ring_radius);
        lay.beacon_slots.push_back(center + Vec2{std::cos(ab), std::sin(ab)} * p.fence_radius);
    }
    return lay;
}

bool point_in_fence(Vec2 p, std::span<const Vec2> beacons) {
    const std::size_t n = beacons.size();
    if (n < 3) throw std::invalid_argument("point_in_fence: need at least 3 beacons");
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = beacons[i];
        const Vec2 b = beacons[(i + 1) % n];
        const Vec2 c = beacons[(i + 2) % n];
        if (cross(b - a, c - b) <= 0.0)
            throw std::invalid_argument("point_in_fence: polygon is not strictly convex counter-clockwise");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = beacons[i];
        const Vec2 b = beacons[(i + 1) % n];
        if (cross(b - a, p - a) <= 0.0) return false;
    }
    return true;
}

}  // namespace herdsim
