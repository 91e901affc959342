#pragma once

#include <string>

#include "herdsim/sim_engine.hpp"

namespace herdsim {

// Locale-independent number formatting used by every exporter: up to nine
// significant digits, "nan"/"inf" for the non-finite values.
std::string format_number(double value);

// One row per logged step. Columns: t, stage, pc_updates, attacker position
// and command, per-defender position and command, per-beacon position, fence
// command, and per-defender channel telemetry (judgment, raw/normalized
// errors, transformed errors, controls, funnel width).
std::string trajectory_csv(const TrajectoryLog& log, int defender_count);

// Inverse of trajectory_csv (for round-trip checks and offline tooling).
// Throws std::invalid_argument on malformed input.
TrajectoryLog parse_trajectory_csv(const std::string& text);

// Outcome summary (kind, failure, timings, metrics) as a JSON document.
// Non-finite values serialize as null.
std::string outcome_json(const Outcome& outcome, const std::string& scenario_name,
                         std::uint64_t seed);

// Writes content to path, creating parent directories. Throws
// std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace herdsim
