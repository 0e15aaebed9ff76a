#include "bpsim/format.hpp"

#include <charconv>
#include <ostream>
#include <sstream>

#include "bpsim/config.hpp"

namespace bpsim {

std::string format_g9(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    return std::string(buf, r.ptr);
}

std::string format_shortest(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, bool per_node) {
    std::string line = "step,mean_queue,std_queue,active_fraction,sink_throughput";
    if (per_node) {
        for (NodeId i : traj.tracked_nodes) line += ",q_" + std::to_string(i);
    }
    line += '\n';
    os << line;
    const std::size_t width = traj.tracked_nodes.size();
    for (std::size_t r = 0; r < traj.records.size(); ++r) {
        const TrajectoryRecord& rec = traj.records[r];
        line = std::to_string(rec.step);
        for (double v : {rec.mean_queue, rec.std_queue, rec.active_fraction, rec.sink_throughput}) {
            line += ',';
            line += format_g9(v);
        }
        if (per_node) {
            for (std::size_t c = 0; c < width; ++c) {
                line += ',';
                line += format_g9(traj.per_node[r * width + c]);
            }
        }
        line += '\n';
        os << line;
    }
}

std::string trajectory_csv(const Trajectory& traj, bool per_node) {
    std::ostringstream os;
    write_trajectory_csv(os, traj, per_node);
    return os.str();
}

nlohmann::json summary_json(const SimConfig& config, const Trajectory& traj) {
    nlohmann::json j;
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : to_settings(config)) cfg[k] = v;
    j["config"] = cfg;
    j["records"] = traj.records.size();
    j["plateau"] = plateau_value(traj);
    const std::size_t k = traj.records.empty() ? 0 : traj.records.size() - 1;
    if (k >= 200) {
        j["stabilization_stat"] = stabilization_stat(traj, 100);
    } else {
        j["stabilization_stat"] = nullptr;
    }
    j["stabilization_window"] = 100;
    j["final_mean_queue"] = traj.records.empty() ? 0.0 : traj.records.back().mean_queue;
    j["sink_throughput"] = traj.records.empty() ? 0.0 : traj.records.back().sink_throughput;
    j["total_arrivals"] = traj.stats.total_arrivals;
    j["truncations"] = traj.stats.truncations;
    j["invariant_violations"] = traj.stats.invariant_violations;
    j["wall_seconds"] = traj.stats.wall_seconds;
    j["sinks_excluded_from_means"] = true;
    return j;
}

void write_comparison_csv(std::ostream& os, const ComparisonTable& table) {
    std::string line = "step";
    for (const auto& row : table.rows) line += ",mean_queue_" + row.label;
    os << line << '\n';
    for (std::size_t s = 0; s < table.steps.size(); ++s) {
        line = std::to_string(table.steps[s]);
        for (const auto& col : table.mean_queue) {
            line += ',';
            line += format_g9(col[s]);
        }
        os << line << '\n';
    }
}

nlohmann::json comparison_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        nlohmann::json r;
        r["label"] = row.label;
        r["plateau"] = row.plateau;
        r["stabilization_stat"] = row.stabilization ? nlohmann::json(*row.stabilization) : nlohmann::json();
        r["sink_throughput"] = row.throughput;
        rows.push_back(std::move(r));
    }
    return {{"runs", rows}};
}

}  // namespace bpsim
