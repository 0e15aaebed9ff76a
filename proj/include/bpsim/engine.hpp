#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bpsim/dynamics.hpp"
#include "bpsim/meanfield.hpp"
#include "bpsim/random.hpp"
#include "bpsim/schedulers.hpp"
#include "bpsim/topology.hpp"

namespace bpsim {

enum class SimMode { Coupled, MeanField };

std::string_view to_string(SimMode m) noexcept;
std::string_view to_string(RoutingMode r) noexcept;
std::optional<SimMode> parse_mode(std::string_view s) noexcept;
std::optional<RoutingMode> parse_routing(std::string_view s) noexcept;

inline constexpr std::uint64_t kDefaultSeed = 20240601;

struct SimConfig {
    SimMode mode = SimMode::MeanField;
    std::size_t rows = 10;
    std::size_t cols = 10;
    std::optional<std::size_t> num_nodes;  // overrides rows/cols with a near-square grid
    std::string topology_file;             // overrides both when non-empty
    std::uint64_t steps = 1000;            // K
    double dt = 1.0;
    std::size_t samples = 100;             // M
    std::optional<SchedulerKind> scheduler;  // default: mft (meanfield), coop (coupled)
    EstimatorMode estimator = EstimatorMode::PerSample;
    ControlRule control_rule = ControlRule::RandomRepresentative;
    RoutingMode routing = RoutingMode::SenderConserving;
    ParamRanges ranges;
    double alpha = 0.01;
    double beta = 0.7;
    std::uint64_t seed = kDefaultSeed;
    bool per_node = false;
    std::size_t node_sample = 1000;  // tracked nodes when per_node is set
    std::string out_dir = ".";

    SchedulerKind resolved_scheduler() const noexcept;
    GlobalParams global() const noexcept { return {alpha, beta, dt}; }

    /// Throws ConfigError (see config.hpp) naming the offending key.
    void validate() const;
};

/// Builds the run's topology (file, N, or rows x cols).
Topology make_topology(const SimConfig& config);

struct TrajectoryRecord {
    std::uint64_t step = 0;
    double mean_queue = 0.0;       // across non-sink nodes
    double std_queue = 0.0;        // population std across non-sink nodes
    double active_fraction = 0.0;  // share of non-sinks with chi = 1 at this step
    double sink_throughput = 0.0;  // cumulative
    double arrival_resid = 0.0;    // across-node mean of the running A residual
    double departure_resid = 0.0;  // across-node mean of the running D residual
};

struct RunStats {
    std::uint64_t truncations = 0;
    std::uint64_t invariant_violations = 0;
    double total_arrivals = 0.0;  // sum of A over nodes and steps (ensemble mean in meanfield)
    double wall_seconds = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<NodeId> tracked_nodes;
    std::vector<double> per_node;  // records.size() x tracked_nodes.size(), row-major
    RunStats stats;
    /// Per-node running residuals at the end of the run (non-sinks only are
    /// meaningful; sinks stay 0).
    std::vector<double> final_arrival_resid;
    std::vector<double> final_departure_resid;
    std::vector<double> final_departure_resid_truncation_aware;  // coupled only
    std::vector<double> final_queue;  // q (coupled) or qbar (meanfield) at step K
    std::vector<NodeId> sinks;
};

Trajectory run(const SimConfig& config);
Trajectory run_coupled(const SimConfig& config);
Trajectory run_meanfield(const SimConfig& config);

/// |mean(last window) - mean(previous window)| / mean(all records) of the
/// mean-queue series. Throws std::invalid_argument when K < 2 * window.
double stabilization_stat(const Trajectory& traj, std::size_t window);

/// Mean of mean_queue over the last min(100, K/2) records (the final record
/// alone when K < 2).
double plateau_value(const Trajectory& traj);

struct ComparisonRow {
    std::string label;
    double plateau = 0.0;
    std::optional<double> stabilization;
    double throughput = 0.0;
};

struct ComparisonTable {
    std::vector<std::uint64_t> steps;
    std::vector<std::vector<double>> mean_queue;  // one column per config
    std::vector<ComparisonRow> rows;
};

/// Runs every config (N and K must agree) and aligns their mean-queue series.
ComparisonTable compare_runs(const std::vector<SimConfig>& configs,
                             const std::vector<std::string>& labels);

/// Caps the OpenMP worker count; n <= 0 restores the runtime default.
void set_worker_count(int n);
int worker_count();

}  // namespace bpsim
