#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "herdsim/assignment.hpp"
#include "herdsim/attacker.hpp"
#include "herdsim/capture_control.hpp"
#include "herdsim/escort_game.hpp"
#include "herdsim/escort_plan.hpp"
#include "herdsim/formation.hpp"
#include "herdsim/geometry.hpp"
#include "herdsim/vec2.hpp"

namespace herdsim {

// Deterministic fixed-step world integration with a two-stage machine:
// capture (event-triggered encirclement) then escort (per-edge reach-avoid
// control plus collective fence translation), ending Done, Failed, or timed
// out.

enum class Stage { Capture, Escort, Done, Failed };

enum class FailureReason {
    ProtectedAreaEntered,  // attacker penetrated the protected disc
    FenceCrossed,          // attacker touched or crossed a defense line
    FunnelViolated,        // a channel error left its performance funnel
    ObstaclePenetrated,    // an agent overlapped an obstacle
    ChannelSingular,       // an escort channel normalizer collapsed
};

enum class OutcomeKind { Done, Failed, Timeout };

const char* to_string(Stage s);
const char* to_string(FailureReason r);
const char* to_string(OutcomeKind k);

struct SimConfig {
    std::string name = "unnamed";
    double dt = 0.05;        // seconds, control period
    double max_time = 200.0; // seconds

    Vec2 protected_center{5.0, 20.0};
    double protected_radius = 2.0;
    Vec2 target_center{20.0, 20.0};
    double target_radius = 2.0;
    std::vector<Obstacle> obstacles;

    double defender_speed_max = 3.0;
    double attacker_speed_max = 1.2;

    FormationParams formation = FormationParams::design(3, 0.5, 2.0, 0.65);
    CaptureGains capture;
    double arrival_position_tol = 0.05;  // meters, slot-settled test
    double arrival_speed_tol = 0.05;     // meters/s, command-quiet test
    // Extra handoff conditions: every escort channel must initialize with
    // |normalized error| <= this fraction of the initial funnel width AND with
    // at least handoff_margin meters of raw slack to the funnel boundary, so
    // the escort guarantees attach with margin instead of on their boundary
    // (the raw-slack term covers the first-step cost of the zero-initialized
    // derivative estimates when the attacker sits close to one edge).
    double handoff_occupancy_limit = 0.8;
    double handoff_margin = 0.1;  // meters

    GameLayerParams game;
    PlanGains plan;
    double assignment_clearance = 0.5;    // meters, path-overlap width
    double assignment_overlap_weight = 1.0;

    AttackerConfig attacker;
    std::vector<Vec2> defender_starts;
    Vec2 attacker_start{0.0, 0.0};
};

// Per-defender escort telemetry, evaluated on post-step states. NaN outside
// the escort stage (and for channel fields that are undefined mid-failure).
struct DefenderTelemetry {
    double e_h = std::numeric_limits<double>::quiet_NaN();
    double e_v = std::numeric_limits<double>::quiet_NaN();
    double e_tilde_h = std::numeric_limits<double>::quiet_NaN();
    double e_tilde_v = std::numeric_limits<double>::quiet_NaN();
    double eps_h = std::numeric_limits<double>::quiet_NaN();
    double eps_v = std::numeric_limits<double>::quiet_NaN();
    double g_h = std::numeric_limits<double>::quiet_NaN();
    double g_v = std::numeric_limits<double>::quiet_NaN();
    double rho = std::numeric_limits<double>::quiet_NaN();
    double judgment = std::numeric_limits<double>::quiet_NaN();
};

struct StepRecord {
    double t = 0.0;
    Stage stage = Stage::Capture;
    Vec2 attacker;
    Vec2 attacker_cmd;  // NaN on the initial record
    std::vector<Vec2> defenders;
    std::vector<Vec2> defender_cmds;
    std::vector<Vec2> beacons;  // virtual slots during capture, fence afterwards
    Vec2 fence_cmd;             // NaN outside escort
    std::vector<DefenderTelemetry> telemetry;
    int pc_updates = 0;  // cumulative pursuit-circle update count
};

struct TrajectoryLog {
    std::vector<StepRecord> records;
};

struct RunMetrics {
    double min_escort_judgment = std::numeric_limits<double>::quiet_NaN();
    double max_funnel_occupancy = std::numeric_limits<double>::quiet_NaN();
    double max_plan_speed_ratio = std::numeric_limits<double>::quiet_NaN();
    double min_obstacle_clearance = std::numeric_limits<double>::quiet_NaN();
    int pc_update_count = 0;
};

struct Outcome {
    OutcomeKind kind = OutcomeKind::Timeout;
    std::optional<FailureReason> failure;
    std::string message;
    double t_f1 = std::numeric_limits<double>::quiet_NaN();  // capture->escort handoff
    double t_f2 = std::numeric_limits<double>::quiet_NaN();  // escort completion
    double end_time = 0.0;
    RunMetrics metrics;
};

struct WorldState {
    double t = 0.0;
    long step_index = 0;
    Stage stage = Stage::Capture;
    std::optional<FailureReason> failure;

    Vec2 attacker;
    Vec2 attacker_velocity;
    std::vector<Vec2> defenders;
    std::vector<Vec2> defender_velocities;
    std::vector<Vec2> beacons;
    Vec2 fence_velocity{std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};

    PursuitCircle pursuit_circle;
    std::vector<int> slot_of_defender;  // defender i pursues slot/edge slot_of_defender[i]
    FormationLayout layout;             // slots around the current circle center

    SplitMix64 rng{0};
    AttackerRoamState roam;

    double t_f1 = std::numeric_limits<double>::quiet_NaN();
    double t_f2 = std::numeric_limits<double>::quiet_NaN();
    std::vector<bool> vertical_branch_positive;  // frozen at the handoff

    // Backward-difference memory for the escort rate terms.
    bool diffs_valid = false;
    std::vector<double> prev_f_tilde;
    std::vector<double> prev_g_tilde;
    std::vector<double> prev_ell_d;
    Vec2 prev_attacker;
};

class SimEngine {
  public:
    // Validates the config (throws std::invalid_argument), performs the
    // initial layout and assignment, and logs the initial record.
    explicit SimEngine(SimConfig config);

    const SimConfig& config() const { return config_; }
    const WorldState& world() const { return world_; }
    const TrajectoryLog& log() const { return log_; }
    const RunMetrics& metrics() const { return metrics_; }

    // Advances one control period. Returns false when the run has already
    // terminated. Throws std::runtime_error on numeric non-finiteness.
    bool step();

    // Steps until Done/Failed/max_time and summarizes.
    Outcome run();

    // Pure diagnostic on the current world (escort stage): lists every
    // violated escort guarantee, empty when all hold.
    std::vector<std::string> check_escort_guarantees() const;

    // Escort telemetry of the current world state (NaN fields when a channel
    // is undefined). Valid only during escort.
    std::vector<DefenderTelemetry> evaluate_escort_telemetry() const;

  private:
    void validate_config() const;
    void relayout_and_assign();
    Vec2 attacker_input(double t);
    bool handoff_ready() const;
    void begin_escort();
    void fail(FailureReason reason, std::string message);
    std::vector<DefenderTelemetry> telemetry_at(double tau) const;
    bool escort_controls(std::vector<Vec2>& cmds, Vec2& fence_cmd);
    void post_state_checks();
    void append_record(const Vec2& attacker_cmd, const std::vector<Vec2>& defender_cmds,
                       const Vec2& fence_cmd);

    SimConfig config_;
    WorldState world_;
    TrajectoryLog log_;
    RunMetrics metrics_;
    double beacon_bound_ = 0.0;
    std::string message_;
    std::vector<DefenderTelemetry> telemetry_scratch_;
};

}  // namespace herdsim
