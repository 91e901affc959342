// Whole-loop tests for the discrete-time engine: validation, explicit-Euler
// integration, stage transitions, failure reporting, metrics, determinism.
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "herdsim/sim_engine.hpp"

using namespace herdsim;
using doctest::Approx;

namespace {

// The three-defender mission world used across these tests: guarded disc at
// (5,20), drop-off disc at (20,20), two static discs plus one oscillating disc
// in between, and the defenders starting on a ring around the guarded area.
SimConfig mission_config(std::uint64_t seed) {
    SimConfig c;
    c.name = "mission";
    c.dt = 0.05;
    c.max_time = 200.0;
    c.protected_center = {5.0, 20.0};
    c.protected_radius = 2.0;
    c.target_center = {20.0, 20.0};
    c.target_radius = 2.0;

    Obstacle o1;
    o1.center = {8.0, 6.0};
    o1.radius = 1.5;
    Obstacle o2;
    o2.center = {16.0, 19.0};
    o2.radius = 1.2;
    Obstacle o3;
    o3.kind = Obstacle::Kind::Dynamic;
    o3.radius = 1.0;
    for (int k = 0; k < 8; ++k)
        o3.waypoints.push_back({30.0 * k, {12.0, k % 2 == 0 ? 10.0 : 16.0}});
    c.obstacles = {o1, o2, o3};

    c.defender_speed_max = 3.0;
    c.attacker_speed_max = 1.2;
    c.formation = FormationParams::design(3, 0.5, 2.0, 0.65);
    c.capture.attract = 12.0;
    c.capture.repulse = 2.0;
    c.capture.obstacle_threshold = 8.0;
    c.capture.internal = 1.0;
    c.capture.internal_threshold = 1.0;

    c.attacker.strategy = AttackerStrategy::EvadeRandom;
    c.attacker.speed_max = 1.2;
    c.attacker.escape_range = 0.8;
    c.attacker.evade_gain = 1.0;
    c.attacker.obstacle_gain = 2.0;
    c.attacker.obstacle_threshold = 3.0;
    c.attacker.resample_period = 20;
    c.attacker.seed = seed;

    c.attacker_start = {0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const double a = 2.0 * kPi * static_cast<double>(i) / 3.0;
        c.defender_starts.push_back(c.protected_center + 8.0 * Vec2{std::cos(a), std::sin(a)});
    }
    return c;
}

// A quiet world: defenders parked exactly on their slots, a motionless
// scripted attacker, no obstacles, and the mission discs far away.
SimConfig parked_config() {
    SimConfig c = mission_config(1);
    c.obstacles.clear();
    c.attacker.strategy = AttackerStrategy::Scripted;
    c.attacker.script.clear();
    c.capture.attract = 1.0;
    c.defender_starts = layout(c.attacker_start, c.formation).defender_slots;
    return c;
}

Vec2 centroid(const std::vector<Vec2>& pts) {
    Vec2 s{};
    for (const Vec2& p : pts) s += p;
    return s / static_cast<double>(pts.size());
}

bool is_permutation_of_indices(const std::vector<int>& v) {
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != static_cast<int>(i)) return false;
    return true;
}

}  // namespace

TEST_CASE("sim engine: constructor rejects invalid configurations") {
    {
        SimConfig c = mission_config(1);
        c.dt = 0.0;
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.defender_starts.pop_back();
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.handoff_occupancy_limit = 0.0;
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.handoff_occupancy_limit = 1.5;
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.attacker.strategy = AttackerStrategy::Scripted;
        c.attacker.script = {{2.0, {1.0, 0.0}}, {1.0, {0.0, 0.0}}};  // not increasing
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.obstacles[2].waypoints[3].t = c.obstacles[2].waypoints[2].t;  // stalled time
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        SimConfig c = mission_config(1);
        c.game.k_delta = 0.0;
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
    {
        // Speed pair incompatible with the formation's speed ratio: no valid
        // fence speed bound exists, so construction must fail.
        SimConfig c = mission_config(1);
        c.defender_speed_max = 1.5;
        CHECK_THROWS_AS(SimEngine{c}, std::invalid_argument);
    }
}

TEST_CASE("sim engine: initial record captures the starting world") {
    const SimConfig c = mission_config(1);
    SimEngine eng(c);

    CHECK(eng.world().t == 0.0);
    CHECK(eng.world().stage == Stage::Capture);
    REQUIRE(eng.log().records.size() == 1);

    const StepRecord& r0 = eng.log().records.front();
    CHECK(r0.t == 0.0);
    CHECK(r0.stage == Stage::Capture);
    CHECK(r0.pc_updates == 0);
    CHECK(std::isnan(r0.attacker_cmd.x));
    CHECK(std::isnan(r0.attacker_cmd.y));
    CHECK(r0.attacker == c.attacker_start);
    REQUIRE(r0.defenders.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(r0.defenders[i] == c.defender_starts[i]);

    // Fence markers start on the virtual slots laid out around the attacker.
    const FormationLayout lay = layout(c.attacker_start, c.formation);
    REQUIRE(r0.beacons.size() == lay.beacon_slots.size());
    for (std::size_t i = 0; i < lay.beacon_slots.size(); ++i)
        CHECK(r0.beacons[i] == lay.beacon_slots[i]);

    CHECK(is_permutation_of_indices(eng.world().slot_of_defender));
}

TEST_CASE("sim engine: zero time budget times out without stepping") {
    SimConfig c = mission_config(1);
    c.max_time = 0.0;
    SimEngine eng(c);
    const Outcome out = eng.run();
    CHECK(out.kind == OutcomeKind::Timeout);
    CHECK(out.end_time == 0.0);
    CHECK(eng.log().records.size() == 1);
    CHECK(std::isnan(out.t_f1));
    CHECK(std::isnan(out.t_f2));
}

TEST_CASE("sim engine: first step integrates the published control laws") {
    SimConfig c = mission_config(1);
    c.obstacles.clear();
    c.attacker.strategy = AttackerStrategy::Scripted;
    c.attacker.script = {{1000.0, {0.3, 0.4}}};
    c.defender_starts = {{-10.0, -10.0}, {10.0, -10.0}, {0.0, 15.0}};
    c.protected_center = {0.0, 50.0};
    c.target_center = {50.0, 0.0};

    SimEngine eng(c);
    const FormationLayout lay = eng.world().layout;
    const std::vector<int> assign = eng.world().slot_of_defender;
    const std::vector<Vec2> starts = eng.world().defenders;

    REQUIRE(eng.step());

    // Attacker: explicit Euler with the saturated scripted velocity.
    const Vec2 expected_attacker = c.attacker_start + c.dt * saturate(Vec2{0.3, 0.4}, 1.2);
    CHECK(eng.world().attacker == expected_attacker);

    // Defenders: explicit Euler with the capture-stage command, recomputed
    // here from the same published function and pre-step state.
    for (int i = 0; i < 3; ++i) {
        std::vector<Vec2> peers;
        for (int k = 0; k < 3; ++k)
            if (k != i) peers.push_back(starts[static_cast<std::size_t>(k)]);
        const Vec2 slot = lay.defender_slots[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        const Vec2 cmd = capture_input(starts[static_cast<std::size_t>(i)], slot, c.obstacles, 0.0,
                                       peers, c.capture, c.defender_speed_max);
        const Vec2 expected = starts[static_cast<std::size_t>(i)] + c.dt * cmd;
        CHECK(eng.world().defenders[static_cast<std::size_t>(i)] == expected);
        CHECK(cmd.norm() <= c.defender_speed_max + 1e-12);
    }

    REQUIRE(eng.log().records.size() == 2);
    CHECK(eng.log().records.back().t == c.dt);
    CHECK(eng.world().t == c.dt);
}

TEST_CASE("sim engine: settled defenders hold formation while the handoff is blocked") {
    SimConfig c = parked_config();
    c.handoff_margin = 10.0;  // no channel offers ten meters of slack
    c.max_time = 2.0;
    SimEngine eng(c);
    const Outcome out = eng.run();

    CHECK(out.kind == OutcomeKind::Timeout);
    CHECK(out.end_time == 2.0);
    REQUIRE(eng.log().records.size() == 41);  // initial record + 40 steps

    for (const StepRecord& r : eng.log().records) {
        CHECK(r.stage == Stage::Capture);
        CHECK(r.pc_updates == 0);
        CHECK(r.attacker == c.attacker_start);
        for (std::size_t i = 0; i < r.defenders.size(); ++i)
            CHECK(r.defenders[i] == c.defender_starts[i]);
    }
    // Timestamps are exact multiples of the control period.
    for (std::size_t k = 0; k < eng.log().records.size(); ++k)
        CHECK(eng.log().records[k].t == static_cast<double>(k) * c.dt);
}

TEST_CASE("sim engine: full mission completes and satisfies run-wide invariants") {
    const SimConfig c = mission_config(1);
    SimEngine eng(c);
    const Outcome out = eng.run();

    REQUIRE(out.kind == OutcomeKind::Done);
    CHECK(!out.failure.has_value());
    CHECK(out.t_f1 > 0.0);
    CHECK(out.t_f1 < out.t_f2);
    CHECK(out.t_f2 == out.end_time);
    CHECK(out.end_time <= c.max_time + 1e-9);

    const auto& recs = eng.log().records;
    REQUIRE(recs.size() >= 3);
    CHECK(recs.back().t == out.end_time);
    CHECK(recs.back().stage == Stage::Done);

    // Stage order is monotone: capture, then escort, then done.
    auto rank = [](Stage s) {
        switch (s) {
            case Stage::Capture: return 0;
            case Stage::Escort: return 1;
            case Stage::Done: return 2;
            default: return 3;
        }
    };
    bool saw_escort = false;
    for (std::size_t k = 1; k < recs.size(); ++k) {
        CHECK(rank(recs[k].stage) >= rank(recs[k - 1].stage));
        CHECK(rank(recs[k].stage) <= 2);
        if (recs[k].stage == Stage::Escort) saw_escort = true;
        CHECK(recs[k].t == static_cast<double>(k) * c.dt);
    }
    CHECK(saw_escort);

    // Mission-level guarantees over the whole log.
    for (const StepRecord& r : recs) {
        CHECK(distance(r.attacker, c.protected_center) > c.protected_radius);
    }
    CHECK(out.metrics.min_escort_judgment > 0.0);
    CHECK(out.metrics.max_funnel_occupancy < 1.0);
    CHECK(out.metrics.max_plan_speed_ratio <= c.formation.design_speed_ratio + 1e-9);
    CHECK(out.metrics.min_obstacle_clearance > 0.0);
    CHECK(out.metrics.pc_update_count >= 1);
    CHECK(out.metrics.pc_update_count == recs.back().pc_updates);

    // Per-step speed caps (positions move at most dt * bound per step).
    const double fence_bound = beacon_speed_bound(c.defender_speed_max, c.attacker_speed_max,
                                                  c.formation.design_speed_ratio);
    for (std::size_t k = 1; k < recs.size(); ++k) {
        CHECK(distance(recs[k].attacker, recs[k - 1].attacker) <=
              c.dt * c.attacker_speed_max + 1e-9);
        for (std::size_t i = 0; i < recs[k].defenders.size(); ++i)
            CHECK(distance(recs[k].defenders[i], recs[k - 1].defenders[i]) <=
                  c.dt * c.defender_speed_max + 1e-9);
        if (recs[k].stage != Stage::Capture && std::isfinite(recs[k].fence_cmd.x))
            CHECK(recs[k].fence_cmd.norm() <= fence_bound + 1e-12);
    }

    // Pursuit-circle bookkeeping reconstructed from the log: during capture
    // the fence markers sit on a rigid layout whose centroid is the circle
    // center; the center jumps to the attacker's pre-step position exactly
    // when the counter increments, and only once the attacker has reached the
    // circle boundary.
    for (std::size_t k = 1; k < recs.size(); ++k) {
        const StepRecord& prev = recs[k - 1];
        const StepRecord& cur = recs[k];
        if (prev.stage != Stage::Capture) {
            CHECK(cur.pc_updates == prev.pc_updates);
            continue;
        }
        const Vec2 c_prev = centroid(prev.beacons);
        if (cur.pc_updates > prev.pc_updates) {
            CHECK(cur.pc_updates == prev.pc_updates + 1);
            const Vec2 c_cur = centroid(cur.beacons);
            CHECK(distance(c_cur, prev.attacker) < 1e-9);
            CHECK(distance(c_prev, prev.attacker) >= c.formation.pursuit_radius - 1e-6);
        } else if (cur.stage == Stage::Capture) {
            for (std::size_t i = 0; i < cur.beacons.size(); ++i)
                CHECK(cur.beacons[i] == prev.beacons[i]);
            CHECK(distance(c_prev, prev.attacker) < c.formation.pursuit_radius + 1e-6);
        }
    }
}

TEST_CASE("sim engine: seeded runs are bitwise reproducible") {
    SimEngine a(mission_config(5));
    SimEngine b(mission_config(5));
    const Outcome oa = a.run();
    const Outcome ob = b.run();

    CHECK(oa.kind == ob.kind);
    CHECK(oa.end_time == ob.end_time);
    REQUIRE(a.log().records.size() == b.log().records.size());
    for (std::size_t k = 0; k < a.log().records.size(); ++k) {
        const StepRecord& ra = a.log().records[k];
        const StepRecord& rb = b.log().records[k];
        CHECK(ra.t == rb.t);
        CHECK(ra.stage == rb.stage);
        CHECK(ra.pc_updates == rb.pc_updates);
        CHECK(ra.attacker == rb.attacker);
        REQUIRE(ra.defenders.size() == rb.defenders.size());
        for (std::size_t i = 0; i < ra.defenders.size(); ++i) {
            CHECK(ra.defenders[i] == rb.defenders[i]);
            CHECK(ra.beacons[i] == rb.beacons[i]);
        }
    }

    // A different seed must diverge somewhere (the attacker roams randomly).
    SimEngine d(mission_config(6));
    const Outcome od = d.run();
    bool identical = od.end_time == oa.end_time &&
                     d.log().records.size() == a.log().records.size();
    if (identical) {
        for (std::size_t k = 0; k < a.log().records.size() && identical; ++k)
            if (!(d.log().records[k].attacker == a.log().records[k].attacker)) identical = false;
    }
    CHECK_FALSE(identical);
}

TEST_CASE("sim engine: handoff on the drop-off point completes instantly") {
    SimConfig c = parked_config();
    c.target_center = c.attacker_start;
    c.target_radius = 30.0;
    SimEngine eng(c);
    const Outcome out = eng.run();

    CHECK(out.kind == OutcomeKind::Done);
    CHECK(out.t_f1 == 0.0);
    CHECK(out.t_f2 == 0.0);
    CHECK(out.end_time == 0.0);
    // The transition consumed no time, so only the initial record exists.
    REQUIRE(eng.log().records.size() == 1);
    CHECK(eng.log().records.back().stage == Stage::Capture);
}

TEST_CASE("sim engine: a weak vertical gain ends with a funnel violation") {
    SimConfig c = mission_config(1);
    c.game.vertical_gain = 1e-6;
    SimEngine eng(c);
    const Outcome out = eng.run();
    REQUIRE(out.kind == OutcomeKind::Failed);
    REQUIRE(out.failure.has_value());
    CHECK(*out.failure == FailureReason::FunnelViolated);
    CHECK(out.message.find("funnel") != std::string::npos);
    CHECK(eng.log().records.back().stage == Stage::Failed);
}

TEST_CASE("sim engine: an attacker ramming a defense line fails the escort") {
    SimConfig c = parked_config();
    c.attacker.script = {{1e6, {1.2, 0.0}}};
    SimEngine eng(c);
    const Outcome out = eng.run();
    REQUIRE(out.kind == OutcomeKind::Failed);
    REQUIRE(out.failure.has_value());
    CHECK(*out.failure == FailureReason::FenceCrossed);
    CHECK(out.message.find("defense line") != std::string::npos);
    CHECK(std::isfinite(out.t_f1));  // the escort had started
    CHECK(std::isnan(out.t_f2));
}

TEST_CASE("sim engine: an attacker ramming an obstacle fails the run") {
    SimConfig c = parked_config();
    Obstacle wall;
    wall.center = {3.0, 0.0};
    wall.radius = 1.0;
    c.obstacles = {wall};
    c.attacker.script = {{1e6, {1.2, 0.0}}};
    c.handoff_margin = 10.0;  // hold the capture stage so the crash is the only event
    SimEngine eng(c);
    const Outcome out = eng.run();
    REQUIRE(out.kind == OutcomeKind::Failed);
    REQUIRE(out.failure.has_value());
    CHECK(*out.failure == FailureReason::ObstaclePenetrated);
    // 1.2 m/s from the origin reaches the disc edge at x=2 during step 34.
    CHECK(out.end_time == Approx(1.7).epsilon(1e-12));
    CHECK(eng.log().records.size() == 35);
}

TEST_CASE("sim engine: escort guarantee diagnostics and telemetry") {
    SimEngine eng(mission_config(1));

    // Before the handoff the diagnostic reports exactly one message and the
    // telemetry is undefined.
    const std::vector<std::string> before = eng.check_escort_guarantees();
    REQUIRE(before.size() == 1);
    CHECK(before.front() == "escort stage has not started");
    for (const DefenderTelemetry& d : eng.evaluate_escort_telemetry()) {
        CHECK(std::isnan(d.e_h));
        CHECK(std::isnan(d.judgment));
    }

    // Step into the escort stage and re-evaluate.
    int guard = 0;
    while (eng.world().stage == Stage::Capture && guard++ < 4000) eng.step();
    REQUIRE(eng.world().stage == Stage::Escort);

    CHECK(eng.check_escort_guarantees().empty());
    const std::vector<DefenderTelemetry> tel = eng.evaluate_escort_telemetry();
    REQUIRE(tel.size() == 3);
    for (const DefenderTelemetry& d : tel) {
        CHECK(std::isfinite(d.e_h));
        CHECK(std::isfinite(d.e_v));
        CHECK(std::isfinite(d.judgment));
        CHECK(d.rho > 0.0);
        CHECK(std::abs(d.e_tilde_h) < d.rho);
        CHECK(std::abs(d.e_tilde_v) < d.rho);
        CHECK(d.judgment > 0.0);
    }
}
