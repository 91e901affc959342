// herdsim — command-line front end for the herding simulator.
//
// Verbs:
//   run <scenario> [--seed N] [--export-dir D] [--snapshots t1,t2,...]
//   batch <scenario> --seeds a..b [--jobs N] [--export-dir D]
//   validate <scenario>
//   params <scenario>
//
// Exit codes: 0 success, 1 validation error, 2 run failure (guarantee
// violation or numeric failure), 3 I/O error.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "herdsim/export.hpp"
#include "herdsim/scenario.hpp"
#include "herdsim/sim_engine.hpp"
#include "herdsim/svg.hpp"

namespace {

using herdsim::Outcome;
using herdsim::OutcomeKind;
using herdsim::SimConfig;
using herdsim::SimEngine;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRunFailure = 2;
constexpr int kExitIo = 3;

// Loads and fully validates a scenario, translating the library's exception
// taxonomy into exit codes. Returns nullopt after printing the error.
std::optional<SimConfig> load_or_report(const std::string& path, int& exit_code) {
    try {
        return herdsim::load_scenario(path);
    } catch (const herdsim::ScenarioIoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        exit_code = kExitIo;
    } catch (const herdsim::ScenarioParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        exit_code = kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        exit_code = kExitValidation;
    }
    return std::nullopt;
}

// "a..b" inclusive range, a single seed, or a comma list. Throws
// std::invalid_argument on anything else.
std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    auto parse_one = [](const std::string& s) -> std::uint64_t {
        std::size_t used = 0;
        const long long v = std::stoll(s, &used);
        if (used != s.size() || v < 0)
            throw std::invalid_argument("seeds must be non-negative integers");
        return static_cast<std::uint64_t>(v);
    };
    std::vector<std::uint64_t> seeds;
    const std::size_t dots = text.find("..");
    if (dots != std::string::npos) {
        const std::uint64_t a = parse_one(text.substr(0, dots));
        const std::uint64_t b = parse_one(text.substr(dots + 2));
        if (b < a) throw std::invalid_argument("seed range must be ascending (a..b)");
        for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
        return seeds;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) seeds.push_back(parse_one(item));
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    return seeds;
}

std::string snapshot_filename(double time) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "snapshot_%.2f.svg", time);
    return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    if (dir.back() == '/') return dir + name;
    return dir + "/" + name;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed,
            const std::string& export_dir, const std::vector<double>& snapshot_times) {
    int code = kExitOk;
    std::optional<SimConfig> config = load_or_report(path, code);
    if (!config) return code;
    if (seed) config->attacker.seed = *seed;

    Outcome outcome;
    std::optional<SimEngine> engine;
    try {
        engine.emplace(*config);
        outcome = engine->run();
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::runtime_error& e) {  // hard numeric failure
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRunFailure;
    }

    const std::string summary =
        herdsim::outcome_json(outcome, config->name, config->attacker.seed);
    std::fputs(summary.c_str(), stdout);

    // Renders first (a bad snapshot time is a usage error, not an I/O error),
    // then all file writes together.
    std::vector<std::pair<std::string, std::string>> files;
    try {
        if (!export_dir.empty()) {
            files.emplace_back(join_path(export_dir, "trajectory.csv"),
                               herdsim::trajectory_csv(engine->log(),
                                                       config->formation.defender_count));
            files.emplace_back(join_path(export_dir, "outcome.json"), summary);
        }
        for (double t : snapshot_times)
            files.emplace_back(join_path(export_dir, snapshot_filename(t)),
                               herdsim::render_snapshot(*config, engine->log(), t));
    } catch (const std::out_of_range& e) {  // snapshot time outside the log
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    try {
        for (const auto& [name, content] : files) herdsim::write_text_file(name, content);
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return outcome.kind == OutcomeKind::Done ? kExitOk : kExitRunFailure;
}

struct BatchResult {
    std::uint64_t seed = 0;
    Outcome outcome;
    double wall_ms = 0.0;
};

int cmd_batch(const std::string& path, const std::string& seed_spec, int jobs,
              const std::string& export_dir) {
    int code = kExitOk;
    std::optional<SimConfig> config = load_or_report(path, code);
    if (!config) return code;

    std::vector<std::uint64_t> seeds;
    try {
        seeds = parse_seed_list(seed_spec);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: --seeds: %s\n", e.what());
        return kExitValidation;
    }

    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    if (jobs <= 0) jobs = 1;
    jobs = std::min<int>(jobs, static_cast<int>(seeds.size()));

    // Fan the seeds out to a worker pool. Results land in per-seed slots, so
    // the aggregation below is independent of completion order; a hard
    // numeric error aborts the whole batch naming the offending seed.
    std::vector<BatchResult> results(seeds.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> aborted{false};
    std::mutex error_mutex;
    std::string error_text;

    auto worker = [&]() {
        while (!aborted.load(std::memory_order_relaxed)) {
            const std::size_t k = next.fetch_add(1, std::memory_order_relaxed);
            if (k >= seeds.size()) return;
            SimConfig run_config = *config;
            run_config.attacker.seed = seeds[k];
            const auto start = std::chrono::steady_clock::now();
            try {
                SimEngine engine(run_config);
                results[k].outcome = engine.run();
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error_text.empty())
                    error_text = "seed " + std::to_string(seeds[k]) + ": " + e.what();
                aborted.store(true, std::memory_order_relaxed);
                return;
            }
            const auto stop = std::chrono::steady_clock::now();
            results[k].seed = seeds[k];
            results[k].wall_ms =
                std::chrono::duration<double, std::milli>(stop - start).count();
        }
    };

    std::vector<std::future<void>> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();

    if (aborted.load()) {
        std::fprintf(stderr, "error: batch aborted by a hard numeric failure in %s\n",
                     error_text.c_str());
        return kExitRunFailure;
    }

    // Aggregate in seed order (the slots already are), so summaries are
    // invariant to scheduling and to the order seeds were listed.
    {
        std::vector<std::size_t> order(results.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return results[a].seed < results[b].seed;
        });
        std::vector<BatchResult> sorted;
        sorted.reserve(results.size());
        for (std::size_t i : order) sorted.push_back(std::move(results[i]));
        results = std::move(sorted);
    }

    int done = 0, failed = 0, timeout = 0;
    double min_judgment = std::numeric_limits<double>::quiet_NaN();
    double max_occupancy = std::numeric_limits<double>::quiet_NaN();
    double min_clearance = std::numeric_limits<double>::quiet_NaN();
    double t_f2_min = std::numeric_limits<double>::quiet_NaN();
    double t_f2_max = std::numeric_limits<double>::quiet_NaN();
    double t_f2_sum = 0.0;
    int t_f2_count = 0;
    double wall_total = 0.0;
    json runs = json::array();
    for (const BatchResult& r : results) {
        switch (r.outcome.kind) {
            case OutcomeKind::Done: ++done; break;
            case OutcomeKind::Failed: ++failed; break;
            case OutcomeKind::Timeout: ++timeout; break;
        }
        auto fold_min = [](double& acc, double v) {
            if (std::isfinite(v) && (!std::isfinite(acc) || v < acc)) acc = v;
        };
        auto fold_max = [](double& acc, double v) {
            if (std::isfinite(v) && (!std::isfinite(acc) || v > acc)) acc = v;
        };
        fold_min(min_judgment, r.outcome.metrics.min_escort_judgment);
        fold_max(max_occupancy, r.outcome.metrics.max_funnel_occupancy);
        fold_min(min_clearance, r.outcome.metrics.min_obstacle_clearance);
        if (r.outcome.kind == OutcomeKind::Done && std::isfinite(r.outcome.t_f2)) {
            fold_min(t_f2_min, r.outcome.t_f2);
            fold_max(t_f2_max, r.outcome.t_f2);
            t_f2_sum += r.outcome.t_f2;
            ++t_f2_count;
        }
        wall_total += r.wall_ms;
        json row = json::parse(
            herdsim::outcome_json(r.outcome, config->name, r.seed));
        runs.push_back(std::move(row));
    }

    auto num_or_null = [](double v) -> json {
        return std::isfinite(v) ? json(v) : json(nullptr);
    };
    json summary = {
        {"scenario", config->name},
        {"seeds", {{"count", seeds.size()},
                   {"first", results.front().seed},
                   {"last", results.back().seed}}},
        {"outcomes", {{"done", done}, {"failed", failed}, {"timeout", timeout}}},
        {"success_rate", results.empty() ? 0.0
                                         : static_cast<double>(done) /
                                               static_cast<double>(results.size())},
        {"min_escort_judgment", num_or_null(min_judgment)},
        {"max_funnel_occupancy", num_or_null(max_occupancy)},
        {"min_obstacle_clearance", num_or_null(min_clearance)},
        {"escort_end_time", {{"min", num_or_null(t_f2_min)},
                             {"max", num_or_null(t_f2_max)},
                             {"mean", num_or_null(t_f2_count > 0 ? t_f2_sum / t_f2_count
                                                                 : std::nan(""))}}},
        {"wall_clock_ms", {{"total", wall_total},
                           {"mean", results.empty() ? 0.0
                                                    : wall_total /
                                                          static_cast<double>(results.size())}}},
        {"runs", std::move(runs)},
    };
    const std::string text = summary.dump(2) + "\n";
    std::fputs(text.c_str(), stdout);
    if (!export_dir.empty()) {
        try {
            herdsim::write_text_file(join_path(export_dir, "summary.json"), text);
        } catch (const std::runtime_error& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitIo;
        }
    }
    return done == static_cast<int>(results.size()) ? kExitOk : kExitRunFailure;
}

int cmd_validate(const std::string& path) {
    int code = kExitOk;
    std::optional<SimConfig> config = load_or_report(path, code);
    if (!config) return code;
    // Probe-construct an engine so that "valid" means "can start stepping":
    // the engine-level checks (positive dt, waypoint monotonicity, reachable
    // formation slots, ...) run here instead of surfacing later under `run`.
    try {
        SimEngine probe(*config);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    }
    std::printf("OK: scenario '%s' is valid (%d defenders, %zu obstacle(s), dt=%s s)\n",
                config->name.c_str(), config->formation.defender_count,
                config->obstacles.size(), herdsim::format_number(config->dt).c_str());
    return kExitOk;
}

int cmd_params(const std::string& path) {
    int code = kExitOk;
    std::optional<SimConfig> config = load_or_report(path, code);
    if (!config) return code;

    const herdsim::FormationParams& f = config->formation;
    const double spacing = 2.0 * f.ring_radius * std::sin(0.5 * f.sector_angle);
    const double budget = herdsim::beacon_speed_bound(
        config->defender_speed_max, config->attacker_speed_max, f.design_speed_ratio);
    const double ratio = config->attacker_speed_max / config->defender_speed_max;
    auto num = [](double v) { return herdsim::format_number(v); };

    std::printf("scenario:            %s\n", config->name.c_str());
    std::printf("defenders:           %d (sector %s rad)\n", f.defender_count,
                num(f.sector_angle).c_str());
    std::printf("ring radius:         %s m   (adjacent spacing %s m)\n",
                num(f.ring_radius).c_str(), num(spacing).c_str());
    std::printf("critical distance:   %s m\n", num(f.critical_distance).c_str());
    std::printf("fence radius:        %s m   (apothem %s m)\n", num(f.fence_radius).c_str(),
                num(f.apothem()).c_str());
    std::printf("speed bounds:        defender %s m/s, attacker %s m/s (ratio %s)\n",
                num(config->defender_speed_max).c_str(),
                num(config->attacker_speed_max).c_str(), num(ratio).c_str());
    std::printf("design ratio:        %s\n", num(f.design_speed_ratio).c_str());
    std::printf("fence speed budget:  %s m/s\n", num(budget).c_str());
    std::printf("feasibility:         OK (speed ratio %s < design ratio %s, budget > 0)\n",
                num(ratio).c_str(), num(f.design_speed_ratio).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic two-stage herding simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string export_dir;
    std::string snapshots_spec;
    std::string seeds_spec;
    int jobs = 0;

    CLI::App* run = app.add_subcommand("run", "simulate one scenario and report the outcome");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt =
        run->add_option("--seed", seed_value, "override the scenario's attacker seed");
    run->add_option("--export-dir", export_dir,
                    "write trajectory.csv, outcome.json and snapshots here");
    run->add_option("--snapshots", snapshots_spec,
                    "comma-separated times (s) to render as SVG snapshots");

    CLI::App* batch = app.add_subcommand("batch", "run a seed sweep in parallel and summarize");
    batch->add_option("scenario", scenario_path, "scenario file")->required();
    batch->add_option("--seeds", seeds_spec, "seed range a..b or comma list")->required();
    batch->add_option("--jobs", jobs, "worker threads (default: hardware concurrency)");
    batch->add_option("--export-dir", export_dir, "write summary.json here");

    CLI::App* validate = app.add_subcommand("validate", "load and validate a scenario");
    validate->add_option("scenario", scenario_path, "scenario file")->required();

    CLI::App* params = app.add_subcommand("params", "print the derived formation parameters");
    params->add_option("scenario", scenario_path, "scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    if (run->parsed()) {
        if (seed_opt->count() > 0) seed = seed_value;
        std::vector<double> times;
        if (!snapshots_spec.empty()) {
            std::stringstream ss(snapshots_spec);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    std::size_t used = 0;
                    const double t = std::stod(item, &used);
                    if (used != item.size()) throw std::invalid_argument(item);
                    times.push_back(t);
                } catch (const std::exception&) {
                    std::fprintf(stderr, "validation error: bad snapshot time '%s'\n",
                                 item.c_str());
                    return kExitValidation;
                }
            }
        }
        return cmd_run(scenario_path, seed, export_dir, times);
    }
    if (batch->parsed()) return cmd_batch(scenario_path, seeds_spec, jobs, export_dir);
    if (validate->parsed()) return cmd_validate(scenario_path);
    return cmd_params(scenario_path);
}
