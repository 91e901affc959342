#pragma once

#include <string>

#include "herdsim/sim_engine.hpp"

namespace herdsim {

// Rendering options for snapshot SVGs. Everything is deterministic: fixed
// palette, no fonts, no external references.
struct SnapshotStyle {
    double pixels_per_meter = 24.0;
    double margin_meters = 2.0;        // padding around the drawn content
    bool draw_apollonius = true;       // one reach disc per defender
    bool draw_trails = true;           // trajectories up to the snapshot time
};

// Renders the logged state nearest to the requested time (obstacles resolved
// at that time, trajectories truncated there). The time must lie within the
// log's [first, last] record times; otherwise throws std::out_of_range.
std::string render_snapshot(const SimConfig& config, const TrajectoryLog& log, double time,
                            const SnapshotStyle& style = {});

}  // namespace herdsim
