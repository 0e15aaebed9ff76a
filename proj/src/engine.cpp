#include "bpsim/engine.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bpsim/config.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace bpsim {

std::string_view to_string(SimMode m) noexcept {
    return m == SimMode::Coupled ? "coupled" : "meanfield";
}

std::string_view to_string(RoutingMode r) noexcept {
    return r == RoutingMode::SenderConserving ? "sender-conserving" : "receiver-normalized";
}

std::optional<SimMode> parse_mode(std::string_view s) noexcept {
    if (s == "coupled") return SimMode::Coupled;
    if (s == "meanfield") return SimMode::MeanField;
    return std::nullopt;
}

std::optional<RoutingMode> parse_routing(std::string_view s) noexcept {
    if (s == "sender-conserving") return RoutingMode::SenderConserving;
    if (s == "receiver-normalized") return RoutingMode::ReceiverNormalized;
    return std::nullopt;
}

SchedulerKind SimConfig::resolved_scheduler() const noexcept {
    if (scheduler) return *scheduler;
    return mode == SimMode::MeanField ? SchedulerKind::MeanFieldThreshold
                                      : SchedulerKind::CooperativeBP;
}

void SimConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha", "must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta", "must lie in [0, 1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be finite and > 0");
    if (topology_file.empty()) {
        if (num_nodes) {
            if (*num_nodes < 2) throw ConfigError("N", "must be >= 2");
        } else if (rows == 0 || cols == 0 || rows * cols < 2) {
            throw ConfigError("rows", "rows and cols must be >= 1 with rows*cols >= 2");
        }
    }
    auto range_key = [](const std::string& what) {
        for (const char* k : {"lambda-min", "lambda-max", "m-min", "m-max"}) {
            if (what.find(k) != std::string::npos) return std::string(k);
        }
        return std::string("lambda-min");
    };
    try {
        ranges.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(range_key(e.what()), e.what());
    }
    if (node_sample == 0) throw ConfigError("node-sample", "must be >= 1");
    const SchedulerKind kind = resolved_scheduler();
    if (mode == SimMode::MeanField) {
        if (samples == 0) throw ConfigError("M", "meanfield mode requires M >= 1");
        if (kind == SchedulerKind::CooperativeBP || kind == SchedulerKind::BestResponseBP) {
            throw ConfigError("scheduler", "meanfield mode supports mft, on and off");
        }
    } else if (kind == SchedulerKind::MeanFieldThreshold) {
        throw ConfigError("scheduler", "mft needs the ensemble engine (mode=meanfield)");
    }
}

Topology make_topology(const SimConfig& config) {
    if (!config.topology_file.empty()) {
        std::ifstream in(config.topology_file);
        if (!in) throw ConfigError("topology-file", "cannot open " + config.topology_file);
        return read_edge_list(in);
    }
    if (config.num_nodes) return build_grid_for_count(*config.num_nodes);
    return build_directed_grid(config.rows, config.cols);
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<NodeId> pick_tracked(const Topology& topo, const SimConfig& config) {
    std::vector<NodeId> non_sinks;
    if (!config.per_node) return non_sinks;
    non_sinks.reserve(topo.num_non_sinks());
    for (NodeId i = 0; i < topo.num_nodes(); ++i) {
        if (!topo.is_sink(i)) non_sinks.push_back(i);
    }
    if (non_sinks.size() <= config.node_sample) return non_sinks;
    std::vector<NodeId> picked(config.node_sample);
    for (std::size_t k = 0; k < picked.size(); ++k) {
        picked[k] = non_sinks[k * non_sinks.size() / picked.size()];
    }
    return picked;
}

// Fixed-order mean and population std over non-sink entries.
std::pair<double, double> node_moments(const Topology& topo, std::span<const double> v) {
    double sum = 0.0;
    std::size_t count = 0;
    for (NodeId i = 0; i < v.size(); ++i) {
        if (topo.is_sink(i)) continue;
        sum += v[i];
        ++count;
    }
    if (count == 0) return {0.0, 0.0};
    const double mean = sum / static_cast<double>(count);
    double ss = 0.0;
    for (NodeId i = 0; i < v.size(); ++i) {
        if (topo.is_sink(i)) continue;
        const double d = v[i] - mean;
        ss += d * d;
    }
    return {mean, std::sqrt(ss / static_cast<double>(count))};
}

double active_share(const Topology& topo, std::span<const std::uint8_t> chi) {
    std::size_t on = 0;
    for (NodeId i = 0; i < chi.size(); ++i) {
        if (!topo.is_sink(i) && chi[i] != 0) ++on;
    }
    const std::size_t n = topo.num_non_sinks();
    return n == 0 ? 0.0 : static_cast<double>(on) / static_cast<double>(n);
}

double non_sink_mean(const Topology& topo, std::span<const double> v) {
    return node_moments(topo, v).first;
}

void append_tracked(Trajectory& traj, std::span<const double> values) {
    for (NodeId i : traj.tracked_nodes) traj.per_node.push_back(values[i]);
}

ControlVector schedule(const CoupledModel& model, SchedulerKind kind, std::span<const double> q) {
    switch (kind) {
        case SchedulerKind::CooperativeBP: return cooperative_schedule(model, q);
        case SchedulerKind::BestResponseBP: return best_response_schedule(model, q);
        case SchedulerKind::AlwaysOn: return constant_schedule(*model.topo, true);
        case SchedulerKind::AlwaysOff: return constant_schedule(*model.topo, false);
        case SchedulerKind::MeanFieldThreshold: break;
    }
    throw std::invalid_argument("scheduler not available in coupled mode");
}

std::uint64_t count_violations(const Topology& topo, std::span<const double> q,
                               std::size_t samples_per_node) {
    std::uint64_t bad = 0;
    for (std::size_t i = 0; i < topo.num_nodes(); ++i) {
        const bool sink = topo.is_sink(static_cast<NodeId>(i));
        for (std::size_t j = 0; j < samples_per_node; ++j) {
            const double v = q[i * samples_per_node + j];
            if (!(v >= 0.0) || (sink && v != 0.0)) ++bad;
        }
    }
    return bad;
}

}  // namespace

Trajectory run_coupled(const SimConfig& config) {
    config.validate();
    const auto t0 = Clock::now();
    const Topology topo = make_topology(config);
    const RoutingWeights weights = uniform_routing(topo);
    const NodeParams params = draw_node_params(config.seed, topo.num_nodes(), config.ranges);
    const CoupledModel model{&topo, &weights, &params, config.global(), config.routing, config.seed};
    const SchedulerKind kind = config.resolved_scheduler();

    Trajectory traj;
    traj.sinks = topo.sinks();
    traj.tracked_nodes = pick_tracked(topo, config);
    traj.records.reserve(config.steps + 1);
    ResidualAccumulator residuals(model);

    QueueState state{std::vector<double>(topo.num_nodes(), 0.0), 0};
    double throughput = 0.0;
    for (std::uint64_t k = 0;; ++k) {
        const ControlVector chi = schedule(model, kind, state.q);
        const auto [mean, sd] = node_moments(topo, state.q);
        const ResidualDiagnostics& rd = residuals.result();
        traj.records.push_back({k, mean, sd, active_share(topo, chi), throughput,
                                non_sink_mean(topo, rd.arrivals), non_sink_mean(topo, rd.departures)});
        append_tracked(traj, state.q);
        if (k == config.steps) break;

        StepResult next = step_coupled(model, state, chi);
        residuals.add(state, chi, next.flows);
        traj.stats.truncations += next.flows.truncations;
        traj.stats.invariant_violations += count_violations(topo, next.state.q, 1);
        for (std::uint64_t a : next.flows.arrivals) traj.stats.total_arrivals += static_cast<double>(a);
        throughput += next.flows.delivered;
        state = std::move(next.state);
    }

    const ResidualDiagnostics& rd = residuals.result();
    traj.final_arrival_resid = rd.arrivals;
    traj.final_departure_resid = rd.departures;
    traj.final_departure_resid_truncation_aware = rd.departures_truncation_aware;
    traj.final_queue = state.q;
    traj.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

Trajectory run_meanfield(const SimConfig& config) {
    config.validate();
    const auto t0 = Clock::now();
    const Topology topo = make_topology(config);
    EnsembleInit init = init_ensemble(topo, config.samples, config.ranges, config.seed);
    EnsembleModel model;
    model.topo = &topo;
    model.node = &init.params;
    model.global = config.global();
    model.seed = config.seed;
    model.estimator = config.estimator;
    model.rule = config.control_rule;
    model.policy = config.resolved_scheduler();
    EnsembleState& es = init.state;
    if (model.policy == SchedulerKind::AlwaysOff) es.chi = constant_schedule(topo, false);

    const std::size_t n = topo.num_nodes();
    Trajectory traj;
    traj.sinks = topo.sinks();
    traj.tracked_nodes = pick_tracked(topo, config);
    traj.records.reserve(config.steps + 1);
    traj.final_arrival_resid.assign(n, 0.0);
    traj.final_departure_resid.assign(n, 0.0);

    std::vector<double> qbar(n, 0.0);
    traj.records.push_back({0, 0.0, 0.0, active_share(topo, es.chi), 0.0, 0.0, 0.0});
    append_tracked(traj, qbar);

    MeanFieldEstimate est;
    est.resize(n);
    double throughput = 0.0;
    for (std::uint64_t k = 1; k <= config.steps; ++k) {
        ensemble_step(model, es, est);
        traj.stats.invariant_violations += count_violations(topo, es.q, es.num_samples);
        for (NodeId i = 0; i < n; ++i) {
            throughput += est.departures[i];
            traj.stats.truncations += est.truncations[i];
            traj.final_arrival_resid[i] += est.arrival_resid[i];
            traj.final_departure_resid[i] += est.departure_resid[i];
            traj.stats.total_arrivals += est.arrivals[i];
        }
        const auto [mean, sd] = node_moments(topo, est.qbar);
        traj.records.push_back({k, mean, sd, active_share(topo, es.chi), throughput,
                                non_sink_mean(topo, traj.final_arrival_resid),
                                non_sink_mean(topo, traj.final_departure_resid)});
        append_tracked(traj, est.qbar);
        qbar = est.qbar;
    }
    traj.final_queue = qbar;
    traj.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return traj;
}

Trajectory run(const SimConfig& config) {
    return config.mode == SimMode::Coupled ? run_coupled(config) : run_meanfield(config);
}

double stabilization_stat(const Trajectory& traj, std::size_t window) {
    if (traj.records.empty()) throw std::invalid_argument("stabilization_stat: empty trajectory");
    const std::size_t k = traj.records.size() - 1;
    if (window == 0 || k < 2 * window) {
        throw std::invalid_argument("stabilization_stat: need K >= 2 * window");
    }
    double total = 0.0;
    for (const auto& r : traj.records) total += r.mean_queue;
    const double overall = total / static_cast<double>(traj.records.size());
    double last = 0.0, prev = 0.0;
    for (std::size_t s = k - window + 1; s <= k; ++s) last += traj.records[s].mean_queue;
    for (std::size_t s = k - 2 * window + 1; s <= k - window; ++s) prev += traj.records[s].mean_queue;
    const double w = static_cast<double>(window);
    return std::fabs(last / w - prev / w) / overall;
}

double plateau_value(const Trajectory& traj) {
    if (traj.records.empty()) return 0.0;
    const std::size_t k = traj.records.size() - 1;
    const std::size_t window = std::min<std::size_t>(100, k / 2);
    if (window == 0) return traj.records.back().mean_queue;
    double sum = 0.0;
    for (std::size_t s = k - window + 1; s <= k; ++s) sum += traj.records[s].mean_queue;
    return sum / static_cast<double>(window);
}

ComparisonTable compare_runs(const std::vector<SimConfig>& configs,
                             const std::vector<std::string>& labels) {
    if (configs.size() < 2) throw std::invalid_argument("compare_runs: need at least two configs");
    if (labels.size() != configs.size()) throw std::invalid_argument("compare_runs: one label per config");
    const std::size_t n0 = make_topology(configs.front()).num_nodes();
    for (const SimConfig& c : configs) {
        if (c.steps != configs.front().steps) throw std::invalid_argument("compare_runs: K differs");
        if (make_topology(c).num_nodes() != n0) throw std::invalid_argument("compare_runs: N differs");
    }
    ComparisonTable table;
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const Trajectory traj = run(configs[c]);
        if (c == 0) {
            for (const auto& r : traj.records) table.steps.push_back(r.step);
        }
        std::vector<double> column;
        column.reserve(traj.records.size());
        for (const auto& r : traj.records) column.push_back(r.mean_queue);
        table.mean_queue.push_back(std::move(column));

        ComparisonRow row;
        row.label = labels[c];
        row.plateau = plateau_value(traj);
        if (configs[c].steps >= 200) row.stabilization = stabilization_stat(traj, 100);
        row.throughput = traj.records.back().sink_throughput;
        table.rows.push_back(std::move(row));
    }
    return table;
}

void set_worker_count(int n) {
#if defined(_OPENMP)
    static const int default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : default_threads);
#else
    (void)n;
#endif
}

int worker_count() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace bpsim
