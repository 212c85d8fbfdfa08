#pragma once
#include <string>
#include <vector>

#include "ic/world/oracle.hpp"

namespace ic::data {

using Dataset = std::vector<world::Trajectory>;

// Line-delimited JSON, one trajectory per line, integer/string fields only so
// write-then-read round-trips bit-exactly.
void write_trajectories(const std::string& path, const Dataset& dataset);
Dataset read_trajectories(const std::string& path);

std::string trajectory_to_json_line(const world::Trajectory& traj);
world::Trajectory trajectory_from_json_line(const std::string& line);

}  // namespace ic::data
