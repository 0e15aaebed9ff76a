#pragma once

// Locale-independent number formatting and the run output files.

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "bpsim/engine.hpp"

namespace bpsim {

/// 9 significant digits, '%g'-style, always '.' as decimal point.
std::string format_g9(double v);
/// Shortest representation that round-trips.
std::string format_shortest(double v);

/// Header `step,mean_queue,std_queue,active_fraction,sink_throughput`, then
/// `q_<id>` per tracked node when per_node is set. LF line endings.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool per_node);
std::string trajectory_csv(const Trajectory& traj, bool per_node);

nlohmann::json summary_json(const SimConfig& config, const Trajectory& traj);

void write_comparison_csv(std::ostream& os, const ComparisonTable& table);
nlohmann::json comparison_json(const ComparisonTable& table);

}  // namespace bpsim
