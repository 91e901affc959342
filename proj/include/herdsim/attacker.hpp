#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Adversary behaviors: protected-area seeking, defender evasion with random
// roaming, and scripted probes. All randomness flows through an explicit,
// portable generator state so equal seeds give bitwise-equal trajectories.

// splitmix64: fixed, documented sequence independent of platform and stdlib.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        state += 0x9E3779B97f4A7C15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 significant bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

enum class AttackerStrategy { Seeker, EvadeRandom, Scripted };

struct ScriptEntry {
    double until = 0.0;  // command applies while t < until
    Vec2 velocity;
};

struct AttackerConfig {
    double speed_max = 1.2;          // meters/s
    double escape_range = 0.8;       // meters, defender-evasion trigger radius
    double evade_gain = 1.0;         // defender repulsion gain (1/d^2 falloff)
    double obstacle_gain = 2.0;      // obstacle repulsion gain
    double obstacle_threshold = 3.0; // meters, obstacle repulsion support
    uint64_t seed = 0;
    int resample_period = 20;        // steps between random heading draws
    AttackerStrategy strategy = AttackerStrategy::EvadeRandom;
    std::vector<ScriptEntry> script; // Scripted strategy only
};

// Heading-hold bookkeeping for the random-roam mode.
struct AttackerRoamState {
    Vec2 heading{1.0, 0.0};
    int steps_since_resample = 0;
    bool heading_valid = false;
};

// Potential-field drive toward the protected center with obstacle repulsion,
// saturated at the attacker speed limit.
Vec2 seeker_input(const Vec2& xa, const Vec2& protected_center,
                  std::span<const Obstacle> obstacles, double obstacle_time,
                  const AttackerConfig& config);

// If any defender is within escape_range: repulsion from those defenders plus
// obstacle repulsion, saturated. Otherwise: hold a uniformly drawn heading for
// resample_period steps at full speed (no obstacle term in this mode).
Vec2 evade_or_random(const Vec2& xa, std::span<const Vec2> defenders,
                     std::span<const Obstacle> obstacles, double obstacle_time,
                     const AttackerConfig& config, SplitMix64& rng, AttackerRoamState& roam);

// Piecewise-constant velocity lookup, saturated; zero once the script is over.
Vec2 scripted_input(double t, std::span<const ScriptEntry> script, double speed_max);

}  // namespace herdsim
