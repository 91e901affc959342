#include "herdsim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "herdsim/reach_avoid.hpp"

namespace herdsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void keep_min(double& slot, double value) {
    if (std::isnan(slot) || value < slot) slot = value;
}

void keep_max(double& slot, double value) {
    if (std::isnan(slot) || value > slot) slot = value;
}

}  // namespace

const char* to_string(Stage s) {
    switch (s) {
        case Stage::Capture: return "capture";
        case Stage::Escort: return "escort";
        case Stage::Done: return "done";
        case Stage::Failed: return "failed";
    }
    return "unknown";
}

const char* to_string(FailureReason r) {
    switch (r) {
        case FailureReason::ProtectedAreaEntered: return "protected_area_entered";
        case FailureReason::FenceCrossed: return "fence_crossed";
        case FailureReason::FunnelViolated: return "funnel_violated";
        case FailureReason::ObstaclePenetrated: return "obstacle_penetrated";
        case FailureReason::ChannelSingular: return "channel_singular";
    }
    return "unknown";
}

const char* to_string(OutcomeKind k) {
    switch (k) {
        case OutcomeKind::Done: return "done";
        case OutcomeKind::Failed: return "failed";
        case OutcomeKind::Timeout: return "timeout";
    }
    return "unknown";
}

SimEngine::SimEngine(SimConfig config) : config_(std::move(config)) {
    // Single-authority copies for parameters that appear in two sub-configs.
    config_.game.design_ratio = config_.formation.design_speed_ratio;
    config_.attacker.speed_max = config_.attacker_speed_max;
    validate_config();
    beacon_bound_ = beacon_speed_bound(config_.defender_speed_max, config_.attacker_speed_max,
                                       config_.game.design_ratio);

    const int n = config_.formation.defender_count;
    world_.attacker = config_.attacker_start;
    world_.attacker_velocity = Vec2{};
    world_.defenders = config_.defender_starts;
    world_.defender_velocities.assign(static_cast<std::size_t>(n), Vec2{});
    world_.pursuit_circle = PursuitCircle{config_.attacker_start, config_.formation.pursuit_radius, 0};
    world_.rng = SplitMix64{config_.attacker.seed};
    relayout_and_assign();
    world_.beacons = world_.layout.beacon_slots;

    telemetry_scratch_.assign(static_cast<std::size_t>(n), DefenderTelemetry{});
    append_record(Vec2{kNaN, kNaN}, std::vector<Vec2>(static_cast<std::size_t>(n), Vec2{kNaN, kNaN}),
                  Vec2{kNaN, kNaN});
}

void SimEngine::validate_config() const {
    const auto bad = [](const std::string& what) { throw std::invalid_argument("sim config: " + what); };

    if (!(config_.dt > 0.0) || !std::isfinite(config_.dt)) bad("dt must be positive and finite");
    if (!(config_.max_time >= 0.0) || !std::isfinite(config_.max_time)) bad("max_time must be non-negative");
    if (!(config_.defender_speed_max > 0.0)) bad("defender_speed_max must be positive");
    if (!(config_.attacker_speed_max > 0.0)) bad("attacker_speed_max must be positive");
    if (!(config_.protected_radius > 0.0)) bad("protected_radius must be positive");
    if (!(config_.target_radius > 0.0)) bad("target_radius must be positive");
    if (!is_finite(config_.protected_center) || !is_finite(config_.target_center) ||
        !is_finite(config_.attacker_start))
        bad("positions must be finite");

    const int n = config_.formation.defender_count;
    if (config_.defender_starts.size() != static_cast<std::size_t>(n))
        bad("defender_starts must list exactly one position per defender");
    for (const Vec2& p : config_.defender_starts)
        if (!is_finite(p)) bad("defender start positions must be finite");

    if (!(config_.arrival_position_tol > 0.0)) bad("arrival_position_tol must be positive");
    if (!(config_.arrival_speed_tol > 0.0)) bad("arrival_speed_tol must be positive");
    if (!(config_.handoff_occupancy_limit > 0.0) || config_.handoff_occupancy_limit > 1.0)
        bad("handoff_occupancy_limit must lie in (0, 1]");
    if (config_.handoff_margin < 0.0) bad("handoff_margin must be non-negative");

    if (!(config_.capture.attract > 0.0)) bad("capture attract gain must be positive");
    if (config_.capture.repulse < 0.0 || config_.capture.internal < 0.0)
        bad("capture repulsion gains must be non-negative");
    if (!(config_.capture.obstacle_threshold > 0.0) || !(config_.capture.internal_threshold > 0.0))
        bad("capture repulsion thresholds must be positive");

    const GameLayerParams& g = config_.game;
    if (!(g.k_delta > 0.0) || !(g.k_delta < 1.0)) bad("k_delta must lie in (0, 1)");
    if (!(g.funnel_decay > 0.0)) bad("funnel_decay must be positive");
    if (!(g.funnel_floor > 0.0) || !(g.funnel_floor < 1.0)) bad("funnel_floor must lie in (0, 1)");
    if (!(g.vertical_gain > 0.0) || !(g.horizontal_gain > 0.0)) bad("channel gains must be positive");
    if (!(g.design_ratio > 0.0) || !(g.design_ratio < 1.0)) bad("design ratio must lie in (0, 1)");

    if (!(config_.plan.target_gain > 0.0)) bad("plan target_gain must be positive");
    if (config_.plan.protected_gain < 0.0 || config_.plan.obstacle_gain < 0.0)
        bad("plan repulsion gains must be non-negative");
    if (!(config_.plan.obstacle_threshold > 0.0)) bad("plan obstacle_threshold must be positive");

    if (!(config_.assignment_clearance > 0.0)) bad("assignment_clearance must be positive");
    if (config_.assignment_overlap_weight < 0.0) bad("assignment_overlap_weight must be non-negative");

    if (config_.attacker.resample_period < 1) bad("attacker resample_period must be at least 1");
    if (!(config_.attacker.escape_range > 0.0)) bad("attacker escape_range must be positive");
    if (config_.attacker.evade_gain < 0.0 || config_.attacker.obstacle_gain < 0.0)
        bad("attacker gains must be non-negative");
    if (!(config_.attacker.obstacle_threshold > 0.0)) bad("attacker obstacle_threshold must be positive");
    double prev_until = -std::numeric_limits<double>::infinity();
    for (const ScriptEntry& entry : config_.attacker.script) {
        if (!std::isfinite(entry.until) || !is_finite(entry.velocity))
            bad("script entries must be finite");
        if (entry.until <= prev_until) bad("script entries must have strictly increasing 'until' times");
        prev_until = entry.until;
    }

    for (const Obstacle& obs : config_.obstacles) {
        if (!(obs.radius > 0.0)) bad("obstacle radius must be positive");
        if (!is_finite(obs.center)) bad("obstacle center must be finite");
        if (obs.kind == Obstacle::Kind::Dynamic) {
            if (obs.waypoints.empty()) bad("dynamic obstacles need at least one waypoint");
            double prev_t = -std::numeric_limits<double>::infinity();
            for (const Obstacle::Waypoint& w : obs.waypoints) {
                if (!std::isfinite(w.t) || !is_finite(w.pos)) bad("obstacle waypoints must be finite");
                if (w.t <= prev_t) bad("obstacle waypoint times must be strictly increasing");
                prev_t = w.t;
            }
        }
    }
    // beacon_speed_bound (called right after) rejects speed pairs whose
    // fence-translation budget would be non-positive.
}

void SimEngine::relayout_and_assign() {
    world_.layout = layout(world_.pursuit_circle.center, config_.formation);
    const int n = config_.formation.defender_count;
    std::vector<std::vector<PathEstimate>> paths(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        paths[static_cast<std::size_t>(i)].reserve(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            paths[static_cast<std::size_t>(i)].push_back(
                shortest_path(world_.defenders[static_cast<std::size_t>(i)],
                              world_.layout.defender_slots[static_cast<std::size_t>(j)],
                              config_.obstacles, config_.defender_speed_max, world_.t));
        }
    }
    const AssignmentProblem problem = build_assignment_problem(paths, config_.assignment_clearance,
                                                               config_.assignment_overlap_weight);
    world_.slot_of_defender = solve_assignment(problem).perm;
    if (world_.stage == Stage::Capture) world_.beacons = world_.layout.beacon_slots;
}

Vec2 SimEngine::attacker_input(double t) {
    switch (config_.attacker.strategy) {
        case AttackerStrategy::Seeker:
            return seeker_input(world_.attacker, config_.protected_center, config_.obstacles, t,
                                config_.attacker);
        case AttackerStrategy::EvadeRandom:
            return evade_or_random(world_.attacker, world_.defenders, config_.obstacles, t,
                                   config_.attacker, world_.rng, world_.roam);
        case AttackerStrategy::Scripted:
            return scripted_input(t, config_.attacker.script, config_.attacker.speed_max);
    }
    return Vec2{};
}

bool SimEngine::handoff_ready() const {
    const std::vector<Vec2>& fence = world_.layout.beacon_slots;
    if (!point_in_fence(world_.attacker, fence)) return false;
    const int n = config_.formation.defender_count;
    const double limit = config_.handoff_occupancy_limit;
    for (int i = 0; i < n; ++i) {
        const int j = world_.slot_of_defender[static_cast<std::size_t>(i)];
        const Vec2 b0 = fence[static_cast<std::size_t>(j)];
        const Vec2 b1 = fence[static_cast<std::size_t>((j + 1) % n)];
        try {
            const DefenseLineFrame frame = DefenseLineFrame::from_edge(b0, b1);
            const Vec2 xd = world_.defenders[static_cast<std::size_t>(i)];
            const LosGeometry geo = los_geometry(world_.attacker, xd, b0, b1);
            const double l_d = frame.ground_to_frame(xd - b0).y;
            const double e_h = frame.ground_to_frame(xd - world_.attacker).x;
            const double ell = desired_distance(geo.attacker_dist, geo.angle_error, config_.game);
            const double e_v = l_d - ell;
            const bool positive = e_v >= 0.0;
            const Normalizers nz =
                normalizers(geo.attacker_dist, l_d, geo.angle_error, config_.game, positive);
            // rho(0) = 1: both the relative-occupancy and the raw-slack
            // conditions are evaluated against the initial funnel width.
            const double slack = config_.handoff_margin;
            if (!(std::abs(e_h) <= limit * nz.horizontal)) return false;
            if (!(std::abs(e_v) <= limit * nz.vertical)) return false;
            if (!(nz.horizontal - std::abs(e_h) >= slack)) return false;
            if (!(nz.vertical - std::abs(e_v) >= slack)) return false;
        } catch (const std::exception&) {
            return false;  // a channel is undefined here; keep holding the slots
        }
    }
    return true;
}

void SimEngine::begin_escort() {
    const int n = config_.formation.defender_count;
    world_.stage = Stage::Escort;
    world_.t_f1 = world_.t;
    world_.beacons = world_.layout.beacon_slots;
    world_.vertical_branch_positive.assign(static_cast<std::size_t>(n), true);
    for (int i = 0; i < n; ++i) {
        const int j = world_.slot_of_defender[static_cast<std::size_t>(i)];
        const Vec2 b0 = world_.beacons[static_cast<std::size_t>(j)];
        const Vec2 b1 = world_.beacons[static_cast<std::size_t>((j + 1) % n)];
        const DefenseLineFrame frame = DefenseLineFrame::from_edge(b0, b1);
        const Vec2 xd = world_.defenders[static_cast<std::size_t>(i)];
        const LosGeometry geo = los_geometry(world_.attacker, xd, b0, b1);
        const double l_d = frame.ground_to_frame(xd - b0).y;
        const double ell = desired_distance(geo.attacker_dist, geo.angle_error, config_.game);
        world_.vertical_branch_positive[static_cast<std::size_t>(i)] = (l_d - ell) >= 0.0;
    }
    world_.diffs_valid = false;
    world_.prev_f_tilde.assign(static_cast<std::size_t>(n), 0.0);
    world_.prev_g_tilde.assign(static_cast<std::size_t>(n), 0.0);
    world_.prev_ell_d.assign(static_cast<std::size_t>(n), 0.0);
    world_.prev_attacker = world_.attacker;
}

void SimEngine::fail(FailureReason reason, std::string message) {
    if (world_.stage == Stage::Failed) return;
    world_.stage = Stage::Failed;
    world_.failure = reason;
    message_ = std::move(message);
}

bool SimEngine::escort_controls(std::vector<Vec2>& cmds, Vec2& fence_cmd) {
    const int n = config_.formation.defender_count;
    const double tau = world_.t - world_.t_f1;
    const double rho = ppf_rho(tau, config_.game);
    const double rho_rate = ppf_rho_rate(tau, config_.game);

    // Fence translation command first: the game-layer channels are defined
    // relative to the moving defense lines, so each defender's vertical
    // command must ride along with its line's normal velocity.
    const Vec2 joint = joint_force(world_.defenders, config_.target_center,
                                   config_.protected_center, config_.obstacles, world_.t,
                                   config_.plan);
    const BeaconCommand fence_command = beacon_velocity(joint, beacon_bound_);

    std::vector<double> f_now(static_cast<std::size_t>(n));
    std::vector<double> g_now(static_cast<std::size_t>(n));
    std::vector<double> ell_now(static_cast<std::size_t>(n));

    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const int j = world_.slot_of_defender[ii];
        const Vec2 b0 = world_.beacons[static_cast<std::size_t>(j)];
        const Vec2 b1 = world_.beacons[static_cast<std::size_t>((j + 1) % n)];
        std::ostringstream where;
        where << "defender " << i << " (edge " << j << ", t=" << world_.t << "): ";
        try {
            const DefenseLineFrame frame = DefenseLineFrame::from_edge(b0, b1);
            const Vec2 xd = world_.defenders[ii];
            const LosGeometry geo = los_geometry(world_.attacker, xd, b0, b1);
            const double l_d = frame.ground_to_frame(xd - b0).y;
            const double e_h = frame.ground_to_frame(xd - world_.attacker).x;
            const double ell = desired_distance(geo.attacker_dist, geo.angle_error, config_.game);
            const double e_v = l_d - ell;
            const bool positive = world_.vertical_branch_positive[ii];
            const Normalizers nz =
                normalizers(geo.attacker_dist, l_d, geo.angle_error, config_.game, positive);
            const double delta_f = vertical_delta(config_.game.k_delta, positive);
            const ChannelState horizontal = make_channel_state(e_h, nz.horizontal, rho, 1.0, true);
            const ChannelState vertical = make_channel_state(e_v, nz.vertical, rho, delta_f, positive);

            const double dt = config_.dt;
            const double f_rate = world_.diffs_valid ? (nz.vertical - world_.prev_f_tilde[ii]) / dt : 0.0;
            const double g_rate = world_.diffs_valid ? (nz.horizontal - world_.prev_g_tilde[ii]) / dt : 0.0;
            const double ell_rate = world_.diffs_valid ? (ell - world_.prev_ell_d[ii]) / dt : 0.0;
            const double attacker_along =
                world_.diffs_valid
                    ? frame.ground_to_frame((world_.attacker - world_.prev_attacker) / dt).x
                    : 0.0;

            const double g_v = vertical_control(vertical, f_rate, rho_rate, ell_rate,
                                                config_.game.vertical_gain);
            const double g_h = horizontal_control(horizontal, g_rate, rho_rate, attacker_along,
                                                  config_.game.horizontal_gain);
            // l_d is measured to a line that itself translates at the fence
            // velocity; the commanded normal rate must add that velocity so the
            // channel tracks the line, not the ground.
            const double line_normal_rate = frame.ground_to_frame(fence_command.velocity).y;
            cmds[ii] = escort_input(g_h, g_v + line_normal_rate, frame,
                                    config_.defender_speed_max);

            f_now[ii] = nz.vertical;
            g_now[ii] = nz.horizontal;
            ell_now[ii] = ell;
        } catch (const std::domain_error& e) {
            fail(FailureReason::FunnelViolated, where.str() + e.what());
            return false;
        } catch (const std::invalid_argument& e) {
            fail(FailureReason::ChannelSingular, where.str() + e.what());
            return false;
        } catch (const std::runtime_error& e) {
            fail(FailureReason::ChannelSingular, where.str() + e.what());
            return false;
        }
    }

    world_.prev_f_tilde = std::move(f_now);
    world_.prev_g_tilde = std::move(g_now);
    world_.prev_ell_d = std::move(ell_now);
    world_.prev_attacker = world_.attacker;
    world_.diffs_valid = true;

    fence_cmd = fence_command.velocity;
    world_.fence_velocity = fence_command.velocity;
    return true;
}

bool SimEngine::step() {
    if (world_.stage != Stage::Capture && world_.stage != Stage::Escort) return false;

    const double t = world_.t;
    const int n = config_.formation.defender_count;
    Vec2 attacker_cmd{};
    std::vector<Vec2> cmds(static_cast<std::size_t>(n), Vec2{});
    Vec2 fence_cmd{kNaN, kNaN};

    if (world_.stage == Stage::Capture) {
        if (const std::optional<PursuitCircle> updated = pc_update(world_.pursuit_circle, world_.attacker)) {
            world_.pursuit_circle = *updated;
            relayout_and_assign();
        }
        attacker_cmd = attacker_input(t);
        bool settled = true;
        for (int i = 0; i < n; ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            const Vec2 slot =
                world_.layout.defender_slots[static_cast<std::size_t>(world_.slot_of_defender[ii])];
            std::vector<Vec2> peers;
            peers.reserve(static_cast<std::size_t>(n - 1));
            for (int k = 0; k < n; ++k)
                if (k != i) peers.push_back(world_.defenders[static_cast<std::size_t>(k)]);
            cmds[ii] = capture_input(world_.defenders[ii], slot, config_.obstacles, t, peers,
                                     config_.capture, config_.defender_speed_max);
            if (distance(world_.defenders[ii], slot) > config_.arrival_position_tol ||
                !(cmds[ii].norm() < config_.arrival_speed_tol))
                settled = false;
        }
        if (settled && handoff_ready()) {
            begin_escort();
            if (distance(world_.attacker, config_.target_center) <= config_.target_radius) {
                // Captured on top of the drop-off point: the escort is over the
                // moment it starts. No time passes, so no extra record is logged.
                world_.stage = Stage::Done;
                world_.t_f2 = world_.t;
                return false;
            }
            if (!escort_controls(cmds, fence_cmd)) return false;
        }
    } else {
        attacker_cmd = attacker_input(t);
        if (!escort_controls(cmds, fence_cmd)) return false;
    }

    const double dt = config_.dt;
    world_.attacker += dt * attacker_cmd;
    world_.attacker_velocity = attacker_cmd;
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        world_.defenders[ii] += dt * cmds[ii];
        world_.defender_velocities[ii] = cmds[ii];
    }
    if (world_.stage == Stage::Escort && is_finite(fence_cmd))
        for (Vec2& b : world_.beacons) b += dt * fence_cmd;
    ++world_.step_index;
    world_.t = static_cast<double>(world_.step_index) * dt;

    post_state_checks();
    append_record(attacker_cmd, cmds, fence_cmd);
    return world_.stage == Stage::Capture || world_.stage == Stage::Escort;
}

void SimEngine::post_state_checks() {
    const int n = config_.formation.defender_count;
    const double t = world_.t;

    if (!is_finite(world_.attacker))
        throw std::runtime_error("numeric blow-up: attacker state is not finite at t=" + std::to_string(t));
    for (int i = 0; i < n; ++i)
        if (!is_finite(world_.defenders[static_cast<std::size_t>(i)]))
            throw std::runtime_error("numeric blow-up: defender " + std::to_string(i) +
                                     " state is not finite at t=" + std::to_string(t));
    for (const Vec2& b : world_.beacons)
        if (!is_finite(b))
            throw std::runtime_error("numeric blow-up: a beacon state is not finite at t=" +
                                     std::to_string(t));

    const bool escorting = world_.stage == Stage::Escort;

    // Mission success is checked before any failure predicate.
    if (escorting && distance(world_.attacker, config_.target_center) <= config_.target_radius) {
        world_.stage = Stage::Done;
        world_.t_f2 = t;
    }

    // Obstacle clearance metric over every physical agent (also used by the
    // penetration check below).
    double step_clearance = kNaN;
    for (const Obstacle& obs : config_.obstacles) {
        const Obstacle snapshot = obs.at_time(t);
        keep_min(step_clearance, min_distance_to_obstacle(world_.attacker, snapshot).distance);
        for (const Vec2& d : world_.defenders)
            keep_min(step_clearance, min_distance_to_obstacle(d, snapshot).distance);
    }
    if (!std::isnan(step_clearance)) keep_min(metrics_.min_obstacle_clearance, step_clearance);

    // Escort telemetry for the log and the funnel/judgment checks.
    if (std::isfinite(world_.t_f1)) {
        telemetry_scratch_ = telemetry_at(t - world_.t_f1);
    } else {
        telemetry_scratch_.assign(static_cast<std::size_t>(n), DefenderTelemetry{});
    }

    if (world_.stage != Stage::Done) {
        if (distance(world_.attacker, config_.protected_center) < config_.protected_radius) {
            fail(FailureReason::ProtectedAreaEntered,
                 "attacker entered the protected area at t=" + std::to_string(t));
        } else if (escorting && !point_in_fence(world_.attacker, world_.beacons)) {
            fail(FailureReason::FenceCrossed,
                 "attacker reached a defense line at t=" + std::to_string(t));
        } else if (escorting) {
            for (int i = 0; i < n && world_.stage != Stage::Failed; ++i) {
                const DefenderTelemetry& tm = telemetry_scratch_[static_cast<std::size_t>(i)];
                const bool positive = world_.vertical_branch_positive[static_cast<std::size_t>(i)];
                const double delta_f = vertical_delta(config_.game.k_delta, positive);
                const double rho = tm.rho;
                const bool h_ok = std::isfinite(tm.e_tilde_h) && std::abs(tm.e_tilde_h) < rho;
                const bool v_ok = std::isfinite(tm.e_tilde_v) &&
                                  (positive ? (tm.e_tilde_v < rho && tm.e_tilde_v > -delta_f * rho)
                                            : (tm.e_tilde_v > -rho && tm.e_tilde_v < delta_f * rho));
                if (!h_ok || !v_ok) {
                    std::ostringstream msg;
                    msg << "defender " << i << (h_ok ? " vertical" : " horizontal")
                        << " channel left its funnel at t=" << t;
                    fail(FailureReason::FunnelViolated, msg.str());
                }
            }
        }
        if (world_.stage != Stage::Failed && !std::isnan(step_clearance) && step_clearance <= 0.0) {
            fail(FailureReason::ObstaclePenetrated,
                 "an agent overlapped an obstacle at t=" + std::to_string(t));
        }
    }

    // Run metrics from escort telemetry.
    if (std::isfinite(world_.t_f1)) {
        for (int i = 0; i < n; ++i) {
            const DefenderTelemetry& tm = telemetry_scratch_[static_cast<std::size_t>(i)];
            if (std::isfinite(tm.judgment)) keep_min(metrics_.min_escort_judgment, tm.judgment);
            const bool positive = world_.vertical_branch_positive[static_cast<std::size_t>(i)];
            const double delta_f = vertical_delta(config_.game.k_delta, positive);
            if (std::isfinite(tm.e_tilde_h) && tm.rho > 0.0)
                keep_max(metrics_.max_funnel_occupancy, std::abs(tm.e_tilde_h) / tm.rho);
            if (std::isfinite(tm.e_tilde_v) && tm.rho > 0.0) {
                const double up = positive ? tm.e_tilde_v / tm.rho : -tm.e_tilde_v / tm.rho;
                const double down = positive ? -tm.e_tilde_v / (delta_f * tm.rho)
                                             : tm.e_tilde_v / (delta_f * tm.rho);
                keep_max(metrics_.max_funnel_occupancy, std::max(up, down));
            }
        }
        if (is_finite(world_.fence_velocity)) {
            const double fence_speed = world_.fence_velocity.norm();
            keep_max(metrics_.max_plan_speed_ratio,
                     (config_.attacker_speed_max + fence_speed) /
                         (config_.defender_speed_max - fence_speed));
        }
    }
    metrics_.pc_update_count = world_.pursuit_circle.update_count;
}

std::vector<DefenderTelemetry> SimEngine::telemetry_at(double tau) const {
    const int n = config_.formation.defender_count;
    std::vector<DefenderTelemetry> out(static_cast<std::size_t>(n));
    if (!std::isfinite(tau) ||
        world_.vertical_branch_positive.size() != static_cast<std::size_t>(n))
        return out;

    const double rho = ppf_rho(tau, config_.game);
    const double rho_rate = ppf_rho_rate(tau, config_.game);
    for (int i = 0; i < n; ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        DefenderTelemetry& tm = out[ii];
        tm.rho = rho;
        const int j = world_.slot_of_defender[ii];
        const Vec2 b0 = world_.beacons[static_cast<std::size_t>(j)];
        const Vec2 b1 = world_.beacons[static_cast<std::size_t>((j + 1) % n)];

        DefenseLineFrame frame;
        LosGeometry geo;
        try {
            frame = DefenseLineFrame::from_edge(b0, b1);
            geo = los_geometry(world_.attacker, world_.defenders[ii], b0, b1);
        } catch (const std::exception&) {
            continue;  // sight line undefined; every channel field stays NaN
        }
        const Vec2 xd = world_.defenders[ii];
        const double l_d = frame.ground_to_frame(xd - b0).y;
        tm.e_h = frame.ground_to_frame(xd - world_.attacker).x;

        if (l_d >= 0.0) {
            try {
                tm.judgment = judgment(geo.attacker_dist, l_d, geo.los_angle,
                                       config_.game.design_ratio);
            } catch (const std::exception&) {
            }
        }

        const bool positive = world_.vertical_branch_positive[ii];
        const double delta_f = vertical_delta(config_.game.k_delta, positive);
        try {
            const Normalizers nz =
                normalizers(geo.attacker_dist, l_d, geo.angle_error, config_.game, positive);
            tm.e_tilde_h = tm.e_h / nz.horizontal;
            const double ell = desired_distance(geo.attacker_dist, geo.angle_error, config_.game);
            tm.e_v = l_d - ell;
            tm.e_tilde_v = tm.e_v / nz.vertical;
            const ChannelState horizontal = make_channel_state(tm.e_h, nz.horizontal, rho, 1.0, true);
            tm.eps_h = horizontal.epsilon;
            const ChannelState vertical = make_channel_state(tm.e_v, nz.vertical, rho, delta_f, positive);
            tm.eps_v = vertical.epsilon;

            const double dt = config_.dt;
            const double f_rate = world_.diffs_valid ? (nz.vertical - world_.prev_f_tilde[ii]) / dt : 0.0;
            const double g_rate = world_.diffs_valid ? (nz.horizontal - world_.prev_g_tilde[ii]) / dt : 0.0;
            const double ell_rate = world_.diffs_valid ? (ell - world_.prev_ell_d[ii]) / dt : 0.0;
            const double attacker_along =
                world_.diffs_valid
                    ? frame.ground_to_frame((world_.attacker - world_.prev_attacker) / config_.dt).x
                    : 0.0;
            tm.g_v = vertical_control(vertical, f_rate, rho_rate, ell_rate, config_.game.vertical_gain);
            tm.g_h = horizontal_control(horizontal, g_rate, rho_rate, attacker_along,
                                        config_.game.horizontal_gain);
        } catch (const std::exception&) {
            // channel undefined (outside funnel / cone / singular): leave NaN
        }
    }
    return out;
}

std::vector<DefenderTelemetry> SimEngine::evaluate_escort_telemetry() const {
    return telemetry_at(world_.t - world_.t_f1);
}

std::vector<std::string> SimEngine::check_escort_guarantees() const {
    std::vector<std::string> violations;
    const int n = config_.formation.defender_count;
    if (world_.vertical_branch_positive.size() != static_cast<std::size_t>(n)) {
        violations.push_back("escort stage has not started");
        return violations;
    }

    if (!point_in_fence(world_.attacker, world_.beacons))
        violations.push_back("attacker is not strictly inside the fence");

    const std::vector<DefenderTelemetry> tms = telemetry_at(world_.t - world_.t_f1);
    for (int i = 0; i < n; ++i) {
        const DefenderTelemetry& tm = tms[static_cast<std::size_t>(i)];
        std::ostringstream tag;
        tag << "defender " << i << " (edge " << world_.slot_of_defender[static_cast<std::size_t>(i)]
            << ")";
        if (!std::isfinite(tm.judgment) || tm.judgment <= 0.0)
            violations.push_back(tag.str() + ": line-race judgment is not positive");
        const bool positive = world_.vertical_branch_positive[static_cast<std::size_t>(i)];
        const double delta_f = vertical_delta(config_.game.k_delta, positive);
        if (!std::isfinite(tm.e_tilde_h) || !(std::abs(tm.e_tilde_h) < tm.rho))
            violations.push_back(tag.str() + ": horizontal error is outside its funnel");
        const bool v_ok = std::isfinite(tm.e_tilde_v) &&
                          (positive ? (tm.e_tilde_v < tm.rho && tm.e_tilde_v > -delta_f * tm.rho)
                                    : (tm.e_tilde_v > -tm.rho && tm.e_tilde_v < delta_f * tm.rho));
        if (!v_ok) violations.push_back(tag.str() + ": vertical error is outside its funnel");
    }

    for (const Obstacle& obs : config_.obstacles) {
        const Obstacle snapshot = obs.at_time(world_.t);
        if (min_distance_to_obstacle(world_.attacker, snapshot).distance <= 0.0)
            violations.push_back("attacker overlaps an obstacle");
        for (int i = 0; i < n; ++i)
            if (min_distance_to_obstacle(world_.defenders[static_cast<std::size_t>(i)], snapshot)
                    .distance <= 0.0)
                violations.push_back("defender " + std::to_string(i) + " overlaps an obstacle");
    }

    if (is_finite(world_.fence_velocity) &&
        world_.fence_velocity.norm() > beacon_bound_ + 1e-12)
        violations.push_back("fence speed exceeds its bound");

    return violations;
}

void SimEngine::append_record(const Vec2& attacker_cmd, const std::vector<Vec2>& defender_cmds,
                              const Vec2& fence_cmd) {
    StepRecord record;
    record.t = world_.t;
    record.stage = world_.stage;
    record.attacker = world_.attacker;
    record.attacker_cmd = attacker_cmd;
    record.defenders = world_.defenders;
    record.defender_cmds = defender_cmds;
    record.beacons = world_.beacons;
    record.fence_cmd = fence_cmd;
    record.telemetry = telemetry_scratch_;
    record.pc_updates = world_.pursuit_circle.update_count;
    log_.records.push_back(std::move(record));
}

Outcome SimEngine::run() {
    while ((world_.stage == Stage::Capture || world_.stage == Stage::Escort) &&
           world_.t + config_.dt <= config_.max_time + 1e-9)
        step();

    metrics_.pc_update_count = world_.pursuit_circle.update_count;
    Outcome outcome;
    outcome.t_f1 = world_.t_f1;
    outcome.t_f2 = world_.t_f2;
    outcome.end_time = world_.t;
    outcome.metrics = metrics_;
    switch (world_.stage) {
        case Stage::Done:
            outcome.kind = OutcomeKind::Done;
            outcome.message = "attacker escorted into the target region";
            break;
        case Stage::Failed:
            outcome.kind = OutcomeKind::Failed;
            outcome.failure = world_.failure;
            outcome.message = message_;
            break;
        default:
            outcome.kind = OutcomeKind::Timeout;
            outcome.message = "time limit reached before the escort completed";
            break;
    }
    return outcome;
}

}  // namespace herdsim
