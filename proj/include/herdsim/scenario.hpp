#pragma once

#include <stdexcept>
#include <string>

#include "herdsim/sim_engine.hpp"

namespace herdsim {

// Scenario files are strict-schema JSON: every key must be known, every value
// well-typed; unspecified keys fall back to the documented defaults (the
// bundled reference values). Parse errors carry the 1-based line/column of the
// offending byte when it is known (-1 otherwise).

struct ScenarioParseError : std::runtime_error {
    ScenarioParseError(const std::string& message, int line_, int column_)
        : std::runtime_error(message), line(line_), column(column_) {}
    int line = -1;
    int column = -1;
};

// File-system failure (missing/unreadable file), distinct from parse and
// validation errors so callers can map it to an I/O exit code.
struct ScenarioIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The built-in defaults: the bundled reference engagement without its world
// content (no obstacles, ring starts unresolved). parse_scenario_text layers
// file content on top of this.
SimConfig default_scenario();

// Parses and fully resolves a scenario document (formation synthesis included,
// so infeasible design parameters throw std::invalid_argument here, not at
// engine construction). Throws ScenarioParseError for syntax/schema problems.
SimConfig parse_scenario_text(const std::string& text);

// Reads the file and delegates to parse_scenario_text. Throws ScenarioIoError
// when the file cannot be read.
SimConfig load_scenario(const std::string& path);

// Serializes every SimConfig field back to the scenario schema. The result
// re-parses to an identical configuration (round-trip identity).
std::string scenario_to_json(const SimConfig& config);

}  // namespace herdsim
