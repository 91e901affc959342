#pragma once

#include <span>

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

/// Disc of points a slower attacker can reach no later than one defender:
/// { p : |p - xa| <= ratio * |p - xd| } for a speed ratio in (0, 1).
struct ApolloniusCircle {
    Vec2 center;
    double radius{0.0};
};

/// Constructs the attacker-vs-one-defender reach disc. ratio must lie in
/// (0, 1) and the two positions must not coincide.
ApolloniusCircle apollonius_circle(Vec2 xa, Vec2 xd, double ratio);

/// Sign test for one defender guarding the infinite line of a defense edge:
/// positive means the attacker's reach disc clears the line (defender wins
/// the race to it), zero is the barrier configuration, negative means the
/// line is reachable. la/ld are the unsigned line distances of attacker and
/// defender, phi the line-of-sight angle in (0, pi), ratio in (0, 1).
double judgment(double la, double ld, double phi, double ratio);

/// Same sign as judgment but expressed as a length: the gap between the
/// reach-disc boundary and the line (disc center distance minus radius).
double risk_margin(double la, double ld, double phi, double ratio);

/// The two checks that together are equivalent to judgment > 0 on the valid
/// domain: the sight-line angle within the winnable band, and the defender
/// close enough to the line relative to the attacker.
struct NecessaryConditions {
    bool angle_ok{false};
    bool distance_ok{false};
    bool both() const { return angle_ok && distance_ok; }
};
NecessaryConditions conditions(double la, double ld, double phi, double ratio);

enum class GameTag { DefenderWins, OnBarrier, LineReachable };

struct GameStatus {
    GameTag tag{GameTag::OnBarrier};
    double judgment_value{0.0};
    double margin{0.0};  ///< risk margin (m)
};

/// Classifies one defender/edge configuration; |judgment| <= tol is reported
/// as the barrier.
GameStatus classify(double la, double ld, double phi, double ratio, double tol = 1e-9);

/// Membership in the attacker's combined reachable set against all defenders
/// (intersection of the per-defender reach discs, non-strict boundary).
bool reachable_set_contains(Vec2 p, Vec2 xa, std::span<const Vec2> defenders,
                            double ratio);

/// True when the combined reachable set meets any fence edge segment with
/// positive measure. Analytic: intersects every defender's reach-disc chord
/// interval on each edge line (tangent contact does not count).
bool fence_breach_possible(Vec2 xa, std::span<const Vec2> defenders,
                           std::span<const Vec2> beacons, double ratio);

/// Sampling oracle for fence_breach_possible: walks each edge at `step`
/// resolution and tests strict membership of each sample in the combined
/// reachable set.
bool fence_breach_possible_sampled(Vec2 xa, std::span<const Vec2> defenders,
                                   std::span<const Vec2> beacons, double ratio,
                                   double step = 0.01);

}  // namespace herdsim
