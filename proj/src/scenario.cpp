#include "herdsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "herdsim/escort_plan.hpp"

namespace herdsim {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& message) {
    throw ScenarioParseError(message, -1, -1);
}

void expect_object(const json& node, const std::string& path) {
    if (!node.is_object()) schema_error(path + " must be an object");
}

void reject_unknown_keys(const json& node, const std::string& path,
                         std::initializer_list<const char*> allowed) {
    for (const auto& item : node.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* k) { return item.key() == k; });
        if (!known) schema_error("unknown key '" + item.key() + "' in " + path);
    }
}

double get_number(const json& node, const std::string& path) {
    if (!node.is_number()) schema_error(path + " must be a number");
    return node.get<double>();
}

void read_number(const json& obj, const char* key, const std::string& path, double& out) {
    if (obj.contains(key)) out = get_number(obj.at(key), path + "." + key);
}

void read_int(const json& obj, const char* key, const std::string& path, int& out) {
    if (!obj.contains(key)) return;
    const json& node = obj.at(key);
    if (!node.is_number_integer()) schema_error(path + "." + key + " must be an integer");
    out = node.get<int>();
}

void read_seed(const json& obj, const char* key, const std::string& path, std::uint64_t& out) {
    if (!obj.contains(key)) return;
    const json& node = obj.at(key);
    if (node.is_number_unsigned()) {
        out = node.get<std::uint64_t>();
    } else if (node.is_number_integer() && node.get<long long>() >= 0) {
        out = static_cast<std::uint64_t>(node.get<long long>());
    } else {
        schema_error(path + "." + key + " must be a non-negative integer");
    }
}

Vec2 get_vec2(const json& node, const std::string& path) {
    if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number())
        schema_error(path + " must be an array of two numbers");
    return Vec2{node[0].get<double>(), node[1].get<double>()};
}

void read_vec2(const json& obj, const char* key, const std::string& path, Vec2& out) {
    if (obj.contains(key)) out = get_vec2(obj.at(key), path + "." + key);
}

std::string get_string(const json& node, const std::string& path) {
    if (!node.is_string()) schema_error(path + " must be a string");
    return node.get<std::string>();
}

Obstacle parse_obstacle(const json& node, const std::string& path) {
    expect_object(node, path);
    reject_unknown_keys(node, path, {"kind", "center", "radius", "waypoints"});
    Obstacle obs;
    std::string kind = "static";
    if (node.contains("kind")) kind = get_string(node.at("kind"), path + ".kind");
    if (kind == "static") {
        obs.kind = Obstacle::Kind::Static;
        if (node.contains("waypoints")) schema_error(path + ": static obstacles take no waypoints");
        if (!node.contains("center")) schema_error(path + ": static obstacles need a center");
        obs.center = get_vec2(node.at("center"), path + ".center");
    } else if (kind == "dynamic") {
        obs.kind = Obstacle::Kind::Dynamic;
        if (node.contains("center"))
            schema_error(path + ": dynamic obstacles take their position from waypoints");
        if (!node.contains("waypoints") || !node.at("waypoints").is_array() ||
            node.at("waypoints").empty())
            schema_error(path + ": dynamic obstacles need a non-empty waypoints array");
        int k = 0;
        for (const json& wnode : node.at("waypoints")) {
            const std::string wpath = path + ".waypoints[" + std::to_string(k++) + "]";
            expect_object(wnode, wpath);
            reject_unknown_keys(wnode, wpath, {"t", "pos"});
            if (!wnode.contains("t") || !wnode.contains("pos"))
                schema_error(wpath + " needs 't' and 'pos'");
            Obstacle::Waypoint w;
            w.t = get_number(wnode.at("t"), wpath + ".t");
            w.pos = get_vec2(wnode.at("pos"), wpath + ".pos");
            obs.waypoints.push_back(w);
        }
        obs.center = obs.waypoints.front().pos;
        obs.velocity = obs.velocity_at(obs.waypoints.front().t);
    } else {
        schema_error(path + ".kind must be 'static' or 'dynamic'");
    }
    if (!node.contains("radius")) schema_error(path + ": obstacles need a radius");
    obs.radius = get_number(node.at("radius"), path + ".radius");
    return obs;
}

AttackerStrategy parse_strategy(const std::string& name, const std::string& path) {
    if (name == "seeker") return AttackerStrategy::Seeker;
    if (name == "evade_random") return AttackerStrategy::EvadeRandom;
    if (name == "scripted") return AttackerStrategy::Scripted;
    schema_error(path + " must be 'seeker', 'evade_random', or 'scripted'");
}

const char* strategy_name(AttackerStrategy s) {
    switch (s) {
        case AttackerStrategy::Seeker: return "seeker";
        case AttackerStrategy::EvadeRandom: return "evade_random";
        case AttackerStrategy::Scripted: return "scripted";
    }
    return "evade_random";
}

}  // namespace

SimConfig default_scenario() {
    SimConfig config;
    config.name = "reference";
    return config;
}

SimConfig parse_scenario_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into a 1-based line/column pair.
        int line = 1;
        int column = 1;
        const std::size_t stop = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::ostringstream msg;
        msg << "scenario syntax error at line " << line << ", column " << column << ": "
            << e.what();
        throw ScenarioParseError(msg.str(), line, column);
    }

    expect_object(root, "scenario");
    reject_unknown_keys(root, "scenario",
                        {"name", "seed", "sim", "world", "speeds", "formation", "capture",
                         "escort", "assignment", "attacker", "defenders", "attacker_start"});

    SimConfig config = default_scenario();
    if (root.contains("name")) config.name = get_string(root.at("name"), "scenario.name");
    read_seed(root, "seed", "scenario", config.attacker.seed);
    read_vec2(root, "attacker_start", "scenario", config.attacker_start);

    if (root.contains("sim")) {
        const json& sim = root.at("sim");
        expect_object(sim, "sim");
        reject_unknown_keys(sim, "sim", {"dt", "max_time"});
        read_number(sim, "dt", "sim", config.dt);
        read_number(sim, "max_time", "sim", config.max_time);
    }

    if (root.contains("world")) {
        const json& world = root.at("world");
        expect_object(world, "world");
        reject_unknown_keys(world, "world",
                            {"protected_center", "protected_radius", "target_center",
                             "target_radius", "obstacles"});
        read_vec2(world, "protected_center", "world", config.protected_center);
        read_number(world, "protected_radius", "world", config.protected_radius);
        read_vec2(world, "target_center", "world", config.target_center);
        read_number(world, "target_radius", "world", config.target_radius);
        if (world.contains("obstacles")) {
            const json& list = world.at("obstacles");
            if (!list.is_array()) schema_error("world.obstacles must be an array");
            int k = 0;
            for (const json& node : list)
                config.obstacles.push_back(
                    parse_obstacle(node, "world.obstacles[" + std::to_string(k++) + "]"));
        }
    }

    if (root.contains("speeds")) {
        const json& speeds = root.at("speeds");
        expect_object(speeds, "speeds");
        reject_unknown_keys(speeds, "speeds", {"defender_max", "attacker_max"});
        read_number(speeds, "defender_max", "speeds", config.defender_speed_max);
        read_number(speeds, "attacker_max", "speeds", config.attacker_speed_max);
    }

    int defender_count = config.formation.defender_count;
    double pursuit_radius = config.formation.pursuit_radius;
    double expansion_factor = config.formation.expansion_factor;
    double design_ratio = config.formation.design_speed_ratio;
    if (root.contains("formation")) {
        const json& formation = root.at("formation");
        expect_object(formation, "formation");
        reject_unknown_keys(formation, "formation",
                            {"defender_count", "pursuit_radius", "expansion_factor",
                             "design_speed_ratio"});
        read_int(formation, "defender_count", "formation", defender_count);
        read_number(formation, "pursuit_radius", "formation", pursuit_radius);
        read_number(formation, "expansion_factor", "formation", expansion_factor);
        read_number(formation, "design_speed_ratio", "formation", design_ratio);
    }
    // Formation synthesis (throws std::invalid_argument on infeasible inputs).
    config.formation =
        FormationParams::design(defender_count, pursuit_radius, expansion_factor, design_ratio);
    config.game.design_ratio = config.formation.design_speed_ratio;

    if (root.contains("capture")) {
        const json& capture = root.at("capture");
        expect_object(capture, "capture");
        reject_unknown_keys(capture, "capture",
                            {"attract", "repulse", "obstacle_threshold", "internal",
                             "internal_threshold", "arrival_position_tol", "arrival_speed_tol",
                             "handoff_occupancy_limit", "handoff_margin"});
        read_number(capture, "attract", "capture", config.capture.attract);
        read_number(capture, "repulse", "capture", config.capture.repulse);
        read_number(capture, "obstacle_threshold", "capture", config.capture.obstacle_threshold);
        read_number(capture, "internal", "capture", config.capture.internal);
        read_number(capture, "internal_threshold", "capture", config.capture.internal_threshold);
        read_number(capture, "arrival_position_tol", "capture", config.arrival_position_tol);
        read_number(capture, "arrival_speed_tol", "capture", config.arrival_speed_tol);
        read_number(capture, "handoff_occupancy_limit", "capture",
                    config.handoff_occupancy_limit);
        read_number(capture, "handoff_margin", "capture", config.handoff_margin);
    }

    if (root.contains("escort")) {
        const json& escort = root.at("escort");
        expect_object(escort, "escort");
        reject_unknown_keys(escort, "escort", {"game", "plan"});
        if (escort.contains("game")) {
            const json& game = escort.at("game");
            expect_object(game, "escort.game");
            reject_unknown_keys(game, "escort.game",
                                {"vertical_gain", "horizontal_gain", "funnel_decay",
                                 "funnel_floor", "k_delta"});
            read_number(game, "vertical_gain", "escort.game", config.game.vertical_gain);
            read_number(game, "horizontal_gain", "escort.game", config.game.horizontal_gain);
            read_number(game, "funnel_decay", "escort.game", config.game.funnel_decay);
            read_number(game, "funnel_floor", "escort.game", config.game.funnel_floor);
            read_number(game, "k_delta", "escort.game", config.game.k_delta);
        }
        if (escort.contains("plan")) {
            const json& plan = escort.at("plan");
            expect_object(plan, "escort.plan");
            reject_unknown_keys(plan, "escort.plan",
                                {"target_gain", "protected_gain", "obstacle_gain",
                                 "obstacle_threshold"});
            read_number(plan, "target_gain", "escort.plan", config.plan.target_gain);
            read_number(plan, "protected_gain", "escort.plan", config.plan.protected_gain);
            read_number(plan, "obstacle_gain", "escort.plan", config.plan.obstacle_gain);
            read_number(plan, "obstacle_threshold", "escort.plan",
                        config.plan.obstacle_threshold);
        }
    }

    if (root.contains("assignment")) {
        const json& assignment = root.at("assignment");
        expect_object(assignment, "assignment");
        reject_unknown_keys(assignment, "assignment", {"clearance", "overlap_weight"});
        read_number(assignment, "clearance", "assignment", config.assignment_clearance);
        read_number(assignment, "overlap_weight", "assignment",
                    config.assignment_overlap_weight);
    }

    if (root.contains("attacker")) {
        const json& attacker = root.at("attacker");
        expect_object(attacker, "attacker");
        reject_unknown_keys(attacker, "attacker",
                            {"strategy", "escape_range", "evade_gain", "obstacle_gain",
                             "obstacle_threshold", "resample_period", "script"});
        if (attacker.contains("strategy"))
            config.attacker.strategy =
                parse_strategy(get_string(attacker.at("strategy"), "attacker.strategy"),
                               "attacker.strategy");
        read_number(attacker, "escape_range", "attacker", config.attacker.escape_range);
        read_number(attacker, "evade_gain", "attacker", config.attacker.evade_gain);
        read_number(attacker, "obstacle_gain", "attacker", config.attacker.obstacle_gain);
        read_number(attacker, "obstacle_threshold", "attacker",
                    config.attacker.obstacle_threshold);
        read_int(attacker, "resample_period", "attacker", config.attacker.resample_period);
        if (attacker.contains("script")) {
            const json& script = attacker.at("script");
            if (!script.is_array()) schema_error("attacker.script must be an array");
            int k = 0;
            for (const json& node : script) {
                const std::string path = "attacker.script[" + std::to_string(k++) + "]";
                expect_object(node, path);
                reject_unknown_keys(node, path, {"until", "velocity"});
                if (!node.contains("until") || !node.contains("velocity"))
                    schema_error(path + " needs 'until' and 'velocity'");
                ScriptEntry entry;
                entry.until = get_number(node.at("until"), path + ".until");
                entry.velocity = get_vec2(node.at("velocity"), path + ".velocity");
                config.attacker.script.push_back(entry);
            }
        }
    }
    config.attacker.speed_max = config.attacker_speed_max;

    std::string start_mode = "ring";
    double ring_radius = 8.0;
    std::vector<Vec2> positions;
    if (root.contains("defenders")) {
        const json& defenders = root.at("defenders");
        expect_object(defenders, "defenders");
        reject_unknown_keys(defenders, "defenders", {"start", "ring_radius", "positions"});
        if (defenders.contains("start"))
            start_mode = get_string(defenders.at("start"), "defenders.start");
        read_number(defenders, "ring_radius", "defenders", ring_radius);
        if (defenders.contains("positions")) {
            const json& list = defenders.at("positions");
            if (!list.is_array()) schema_error("defenders.positions must be an array");
            int k = 0;
            for (const json& node : list)
                positions.push_back(
                    get_vec2(node, "defenders.positions[" + std::to_string(k++) + "]"));
        }
    }
    if (start_mode == "ring") {
        // Default deployment: the defenders garrison the protected area and
        // sortie from a ring around its center.
        if (!positions.empty())
            schema_error("defenders.positions is only valid with start = 'positions'");
        if (!(ring_radius > 0.0)) schema_error("defenders.ring_radius must be positive");
        config.defender_starts.clear();
        const int n = config.formation.defender_count;
        for (int i = 0; i < n; ++i) {
            const double angle = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
            config.defender_starts.push_back(
                config.protected_center + ring_radius * Vec2{std::cos(angle), std::sin(angle)});
        }
    } else if (start_mode == "positions") {
        if (positions.size() != static_cast<std::size_t>(config.formation.defender_count))
            schema_error("defenders.positions must list exactly one start per defender");
        config.defender_starts = positions;
    } else {
        schema_error("defenders.start must be 'ring' or 'positions'");
    }

    // Escort feasibility: the fence-translation speed budget must be positive
    // (throws std::invalid_argument naming the violated bound).
    beacon_speed_bound(config.defender_speed_max, config.attacker_speed_max,
                       config.formation.design_speed_ratio);
    return config;
}

SimConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ScenarioIoError("cannot open scenario file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw ScenarioIoError("cannot read scenario file: " + path);
    return parse_scenario_text(buffer.str());
}

std::string scenario_to_json(const SimConfig& config) {
    json root;
    root["name"] = config.name;
    root["seed"] = config.attacker.seed;
    root["attacker_start"] = {config.attacker_start.x, config.attacker_start.y};
    root["sim"] = {{"dt", config.dt}, {"max_time", config.max_time}};

    json obstacles = json::array();
    for (const Obstacle& obs : config.obstacles) {
        json node;
        node["radius"] = obs.radius;
        if (obs.kind == Obstacle::Kind::Static) {
            node["kind"] = "static";
            node["center"] = {obs.center.x, obs.center.y};
        } else {
            node["kind"] = "dynamic";
            json waypoints = json::array();
            for (const Obstacle::Waypoint& w : obs.waypoints)
                waypoints.push_back({{"t", w.t}, {"pos", {w.pos.x, w.pos.y}}});
            node["waypoints"] = std::move(waypoints);
        }
        obstacles.push_back(std::move(node));
    }
    root["world"] = {{"protected_center", {config.protected_center.x, config.protected_center.y}},
                     {"protected_radius", config.protected_radius},
                     {"target_center", {config.target_center.x, config.target_center.y}},
                     {"target_radius", config.target_radius},
                     {"obstacles", std::move(obstacles)}};

    root["speeds"] = {{"defender_max", config.defender_speed_max},
                      {"attacker_max", config.attacker_speed_max}};
    root["formation"] = {{"defender_count", config.formation.defender_count},
                         {"pursuit_radius", config.formation.pursuit_radius},
                         {"expansion_factor", config.formation.expansion_factor},
                         {"design_speed_ratio", config.formation.design_speed_ratio}};
    root["capture"] = {{"attract", config.capture.attract},
                       {"repulse", config.capture.repulse},
                       {"obstacle_threshold", config.capture.obstacle_threshold},
                       {"internal", config.capture.internal},
                       {"internal_threshold", config.capture.internal_threshold},
                       {"arrival_position_tol", config.arrival_position_tol},
                       {"arrival_speed_tol", config.arrival_speed_tol},
                       {"handoff_occupancy_limit", config.handoff_occupancy_limit},
                       {"handoff_margin", config.handoff_margin}};
    root["escort"] = {{"game",
                       {{"vertical_gain", config.game.vertical_gain},
                        {"horizontal_gain", config.game.horizontal_gain},
                        {"funnel_decay", config.game.funnel_decay},
                        {"funnel_floor", config.game.funnel_floor},
                        {"k_delta", config.game.k_delta}}},
                      {"plan",
                       {{"target_gain", config.plan.target_gain},
                        {"protected_gain", config.plan.protected_gain},
                        {"obstacle_gain", config.plan.obstacle_gain},
                        {"obstacle_threshold", config.plan.obstacle_threshold}}}};
    root["assignment"] = {{"clearance", config.assignment_clearance},
                          {"overlap_weight", config.assignment_overlap_weight}};

    json attacker;
    attacker["strategy"] = strategy_name(config.attacker.strategy);
    attacker["escape_range"] = config.attacker.escape_range;
    attacker["evade_gain"] = config.attacker.evade_gain;
    attacker["obstacle_gain"] = config.attacker.obstacle_gain;
    attacker["obstacle_threshold"] = config.attacker.obstacle_threshold;
    attacker["resample_period"] = config.attacker.resample_period;
    if (!config.attacker.script.empty()) {
        json script = json::array();
        for (const ScriptEntry& entry : config.attacker.script)
            script.push_back(
                {{"until", entry.until}, {"velocity", {entry.velocity.x, entry.velocity.y}}});
        attacker["script"] = std::move(script);
    }
    root["attacker"] = std::move(attacker);

    json positions = json::array();
    for (const Vec2& p : config.defender_starts) positions.push_back({p.x, p.y});
    root["defenders"] = {{"start", "positions"}, {"positions", std::move(positions)}};

    return root.dump(2) + "\n";
}

}  // namespace herdsim
