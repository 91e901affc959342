// Python bindings for the herding simulator: formation synthesis, the
// reach-avoid primitives, the funnel transforms, path/assignment planning,
// and whole-mission runs from scenario files.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "herdsim/assignment.hpp"
#include "herdsim/escort_game.hpp"
#include "herdsim/escort_plan.hpp"
#include "herdsim/export.hpp"
#include "herdsim/formation.hpp"
#include "herdsim/reach_avoid.hpp"
#include "herdsim/scenario.hpp"
#include "herdsim/sim_engine.hpp"

namespace py = pybind11;
using namespace herdsim;

namespace {

using Pair = std::pair<double, double>;

Vec2 to_vec(const Pair& p) { return Vec2{p.first, p.second}; }
Pair to_pair(const Vec2& v) { return {v.x, v.y}; }

std::vector<Pair> to_pairs(const std::vector<Vec2>& v) {
    std::vector<Pair> out;
    out.reserve(v.size());
    for (const Vec2& p : v) out.push_back(to_pair(p));
    return out;
}

py::object num_or_none(double v) {
    if (std::isfinite(v)) return py::cast(v);
    return py::none();
}

std::vector<Obstacle> discs_to_obstacles(
    const std::vector<std::tuple<double, double, double>>& discs) {
    std::vector<Obstacle> obstacles;
    obstacles.reserve(discs.size());
    for (const auto& [cx, cy, r] : discs) {
        Obstacle o;
        o.center = {cx, cy};
        o.radius = r;
        obstacles.push_back(std::move(o));
    }
    return obstacles;
}

py::dict formation_dict(const FormationParams& p) {
    py::dict d;
    d["defender_count"] = p.defender_count;
    d["pursuit_radius"] = p.pursuit_radius;
    d["expansion_factor"] = p.expansion_factor;
    d["design_speed_ratio"] = p.design_speed_ratio;
    d["sector_angle"] = p.sector_angle;
    d["ring_radius"] = p.ring_radius;
    d["critical_distance"] = p.critical_distance;
    d["fence_radius"] = p.fence_radius;
    d["apothem"] = p.apothem();
    return d;
}

py::dict outcome_dict(const Outcome& out, const TrajectoryLog& log) {
    py::dict metrics;
    metrics["min_escort_judgment"] = num_or_none(out.metrics.min_escort_judgment);
    metrics["max_funnel_occupancy"] = num_or_none(out.metrics.max_funnel_occupancy);
    metrics["max_plan_speed_ratio"] = num_or_none(out.metrics.max_plan_speed_ratio);
    metrics["min_obstacle_clearance"] = num_or_none(out.metrics.min_obstacle_clearance);
    metrics["pc_update_count"] = out.metrics.pc_update_count;

    py::dict d;
    d["outcome"] = std::string(to_string(out.kind));
    d["failure_reason"] =
        out.failure ? py::cast(std::string(to_string(*out.failure))) : py::object(py::none());
    d["message"] = out.message;
    d["t_f1"] = num_or_none(out.t_f1);
    d["t_f2"] = num_or_none(out.t_f2);
    d["end_time"] = num_or_none(out.end_time);
    d["metrics"] = metrics;
    d["records"] = log.records.size();
    if (!log.records.empty()) {
        const StepRecord& last = log.records.back();
        d["final_attacker"] = to_pair(last.attacker);
        d["final_defenders"] = to_pairs(last.defenders);
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_herdsim, m) {
    m.doc() = "Deterministic two-stage herding simulator (capture, then per-edge escort)";
#ifdef HERDSIM_VERSION
    m.attr("__version__") = HERDSIM_VERSION;
#else
    m.attr("__version__") = "0.0.0";
#endif

    py::register_exception<ScenarioParseError>(m, "ScenarioParseError");
    py::register_exception<ScenarioIoError>(m, "ScenarioIoError");

    // ---------------------------------------------------------- formation
    m.def(
        "design_formation",
        [](int defender_count, double pursuit_radius, double expansion_factor,
           double design_speed_ratio) {
            return formation_dict(FormationParams::design(defender_count, pursuit_radius,
                                                          expansion_factor, design_speed_ratio));
        },
        py::arg("defender_count"), py::arg("pursuit_radius"), py::arg("expansion_factor"),
        py::arg("design_speed_ratio"),
        "Synthesize the capture/escort formation; raises ValueError when infeasible.");

    m.def(
        "formation_layout",
        [](const Pair& center, int defender_count, double pursuit_radius,
           double expansion_factor, double design_speed_ratio) {
            const FormationParams p = FormationParams::design(
                defender_count, pursuit_radius, expansion_factor, design_speed_ratio);
            const FormationLayout lay = layout(to_vec(center), p);
            py::dict d;
            d["defender_slots"] = to_pairs(lay.defender_slots);
            d["beacon_slots"] = to_pairs(lay.beacon_slots);
            return d;
        },
        py::arg("center"), py::arg("defender_count"), py::arg("pursuit_radius"),
        py::arg("expansion_factor"), py::arg("design_speed_ratio"),
        "Concrete defender/beacon slot positions around a center.");

    m.def(
        "point_in_fence",
        [](const Pair& p, const std::vector<Pair>& beacons) {
            std::vector<Vec2> poly;
            poly.reserve(beacons.size());
            for (const Pair& b : beacons) poly.push_back(to_vec(b));
            return point_in_fence(to_vec(p), poly);
        },
        py::arg("point"), py::arg("beacons"),
        "Strict interior test for the counter-clockwise fence polygon.");

    // --------------------------------------------------------- reach-avoid
    m.def(
        "apollonius_circle",
        [](const Pair& xa, const Pair& xd, double ratio) {
            const ApolloniusCircle c = apollonius_circle(to_vec(xa), to_vec(xd), ratio);
            return py::make_tuple(to_pair(c.center), c.radius);
        },
        py::arg("attacker"), py::arg("defender"), py::arg("ratio"),
        "((cx, cy), r) of the attacker's reach disc against one defender.");

    m.def("judgment", &judgment, py::arg("attacker_dist"), py::arg("defender_dist"),
          py::arg("los_angle"), py::arg("ratio"),
          "Sign test for one defender guarding a defense line (positive: line is safe).");
    m.def("risk_margin", &risk_margin, py::arg("attacker_dist"), py::arg("defender_dist"),
          py::arg("los_angle"), py::arg("ratio"),
          "Gap (m) between the attacker's reach disc and the defense line.");

    // -------------------------------------------------------- escort layer
    m.def(
        "desired_distance",
        [](double attacker_dist, double angle_error, double k_delta, double ratio) {
            GameLayerParams params;
            params.k_delta = k_delta;
            params.design_ratio = ratio;
            return desired_distance(attacker_dist, angle_error, params);
        },
        py::arg("attacker_dist"), py::arg("angle_error"), py::arg("k_delta"), py::arg("ratio"),
        "Adaptive stand-off distance from the defense line.");

    m.def(
        "ppf_rho",
        [](double t, double decay, double floor_value) {
            GameLayerParams params;
            params.funnel_decay = decay;
            params.funnel_floor = floor_value;
            return ppf_rho(t, params);
        },
        py::arg("t"), py::arg("decay"), py::arg("floor"),
        "Performance funnel width (1 - floor)*exp(-decay*t) + floor.");

    m.def("transform_error", &transform_error, py::arg("e_tilde"), py::arg("rho"),
          "artanh(e_tilde / rho); raises ValueError outside the funnel.");
    m.def("transform_error_general", &transform_error_general, py::arg("e_tilde"),
          py::arg("rho"), py::arg("delta"), py::arg("positive_branch"),
          "Asymmetric-band error transform.");

    m.def("beacon_speed_bound", &beacon_speed_bound, py::arg("defender_speed"),
          py::arg("attacker_speed"), py::arg("design_ratio"),
          "Fence translation speed budget; raises ValueError when infeasible.");

    // ----------------------------------------------------------- planning
    m.def(
        "shortest_path",
        [](const Pair& start, const Pair& goal,
           const std::vector<std::tuple<double, double, double>>& discs, double speed,
           double at_time) {
            const std::vector<Obstacle> obstacles = discs_to_obstacles(discs);
            const PathEstimate path =
                shortest_path(to_vec(start), to_vec(goal), obstacles, speed, at_time);
            py::dict d;
            d["length"] = path.length;
            d["travel_time"] = path.travel_time;
            d["polyline"] = to_pairs(path.polyline);
            return d;
        },
        py::arg("start"), py::arg("goal"), py::arg("discs"), py::arg("speed"),
        py::arg("at_time") = 0.0,
        "Shortest path around circular obstacles given as (cx, cy, r) triples.");

    m.def(
        "solve_assignment",
        [](const std::vector<std::vector<double>>& travel, double overlap_weight) {
            const int n = static_cast<int>(travel.size());
            AssignmentProblem prob = AssignmentProblem::zero(n);
            prob.overlap_weight = overlap_weight;
            for (int i = 0; i < n; ++i) {
                if (static_cast<int>(travel[static_cast<std::size_t>(i)].size()) != n)
                    throw std::invalid_argument("solve_assignment: travel matrix must be square");
                for (int j = 0; j < n; ++j)
                    prob.set_travel(i, j, travel[static_cast<std::size_t>(i)]
                                                 [static_cast<std::size_t>(j)]);
            }
            const Assignment a = solve_assignment(prob);
            return py::make_tuple(a.perm, a.objective);
        },
        py::arg("travel"), py::arg("overlap_weight") = 1.0,
        "Optimal defender-to-slot permutation for a travel-time matrix.");

    // ----------------------------------------------------------- scenarios
    m.def(
        "validate_scenario",
        [](const std::string& path) {
            const SimConfig config = load_scenario(path);
            SimEngine probe(config);  // "valid" means the engine can start stepping
            py::dict d;
            d["name"] = config.name;
            d["defender_count"] = config.formation.defender_count;
            d["obstacle_count"] = config.obstacles.size();
            d["dt"] = config.dt;
            d["max_time"] = config.max_time;
            return d;
        },
        py::arg("path"), "Load and fully validate a scenario file; raises on any problem.");

    m.def(
        "normalized_scenario_json",
        [](const std::string& path) { return scenario_to_json(load_scenario(path)); },
        py::arg("path"), "Canonical JSON serialization of a scenario file.");

    m.def(
        "run_scenario",
        [](const std::string& path, std::optional<std::uint64_t> seed,
           std::optional<double> max_time, bool include_csv) {
            SimConfig config = load_scenario(path);
            if (seed) config.attacker.seed = *seed;
            if (max_time) config.max_time = *max_time;
            SimEngine engine(config);
            const Outcome out = engine.run();
            py::dict d = outcome_dict(out, engine.log());
            d["scenario"] = config.name;
            d["seed"] = config.attacker.seed;
            if (include_csv)
                d["trajectory_csv"] =
                    trajectory_csv(engine.log(), config.formation.defender_count);
            return d;
        },
        py::arg("path"), py::arg("seed") = std::nullopt, py::arg("max_time") = std::nullopt,
        py::arg("include_csv") = false,
        "Run one mission and return the outcome summary (optionally with the CSV log).");
}
