#pragma once

#include <optional>
#include <span>
#include <vector>

#include "herdsim/vec2.hpp"

namespace herdsim {

/// Event-triggered pursuit circle: the disc of radius `radius` around the
/// attacker position sampled at the last update.
struct PursuitCircle {
    Vec2 center;
    double radius{0.5};
    int update_count{0};
};

/// Re-centers the circle on the attacker when it has reached the boundary
/// (discrete-time rule: trigger at distance >= radius). Returns the updated
/// circle, or nullopt while the attacker is strictly inside.
std::optional<PursuitCircle> pc_update(const PursuitCircle& pc, Vec2 xa);

/// Geometry of the capture/escort formation for N defenders, derived from the
/// pursuit radius, the expansion factor applied to it for the angle margin,
/// and the design speed ratio the guarantees are proved against.
struct FormationParams {
    int defender_count{3};
    double pursuit_radius{0.5};     ///< roaming radius between updates (m)
    double expansion_factor{2.0};   ///< >= 1, enlarges the circle for angle margin
    double design_speed_ratio{0.65};///< in (0,1); attacker/defender speed bound used in design
    double sector_angle{0.0};       ///< 2*pi/N
    double ring_radius{0.0};        ///< defender slot distance from the circle center (m)
    double critical_distance{0.0};  ///< worst-case admissible defender-to-line distance (m)
    double fence_radius{0.0};       ///< beacon slot distance from the circle center (m)

    /// Full pipeline: ring radius, critical vertical distance, fence radius,
    /// with feasibility validation. Throws std::invalid_argument on bad
    /// inputs or an infeasible combination.
    static FormationParams design(int defender_count, double pursuit_radius,
                                  double expansion_factor, double design_speed_ratio);

    double apothem() const;  ///< fence inradius: fence_radius * cos(sector/2)
};

/// Defender slot distance from the circle center (tangent construction on the
/// expanded circle). Branches on whether the half sector angle exceeds
/// asin(design ratio); both branches agree at the crossover.
double compute_eps_d(int defender_count, double pursuit_radius,
                     double expansion_factor, double design_speed_ratio);

/// Minimum over the half sector of the critical defender-to-line distance
/// f(eta) for an attacker on the pursuit-circle arc at angle eta from the
/// sector axis. Also reports the interior stationary angle when it exists.
struct CriticalDistance {
    double min_distance{0.0};
    double f_at_zero{0.0};
    double f_at_half_sector{0.0};
    std::optional<double> interior_angle;  ///< arccos(chi) when inside [0, sector/2]
    std::optional<double> f_at_interior;
};
CriticalDistance critical_vertical_distance(double pursuit_radius, double ring_radius,
                                            double design_speed_ratio, double sector_angle);

/// Beacon slot radius: places each defense line at the critical distance from
/// its defender slot, converting the line offset into a polygon circumradius.
double compute_eps_b(double ring_radius, double min_critical_distance,
                     double sector_angle);

/// Concrete slot positions around a center: defenders at half-sector offsets,
/// beacons at sector multiples, counter-clockwise.
struct FormationLayout {
    std::vector<Vec2> defender_slots;
    std::vector<Vec2> beacon_slots;
};
FormationLayout layout(Vec2 center, const FormationParams& p);

/// Strict interior test for a convex counter-clockwise polygon; boundary
/// points (vertices included) are outside. Throws std::invalid_argument for
/// polygons that are not strictly convex counter-clockwise.
bool point_in_fence(Vec2 p, std::span<const Vec2> beacons);

}  // namespace herdsim
