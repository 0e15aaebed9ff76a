#pragma once

// Finite-N coupled queue dynamics on a directed topology.
//
// One step, for every non-sink node i:
//   A_i ~ Poisson(lambda_i dt)
//   mu_i = m_i / (1 + alpha q_i)                    (step-start queue)
//   D_i  = min(Poisson(mu_i chi_i dt), q_i)          (truncated at availability)
//   F_i  = data routed to i from this step's departures
//   q_i <- q_i + (1 - beta)(A_i + F_i) - D_i
// and sinks are cleared. Flows into a sink are counted as delivered
// throughput.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bpsim/random.hpp"
#include "bpsim/topology.hpp"

namespace bpsim {

using ControlVector = std::vector<std::uint8_t>;

struct GlobalParams {
    double alpha = 0.01;  // congestion sensitivity
    double beta = 0.7;    // aggregation factor
    double dt = 1.0;

    /// Throws std::invalid_argument naming the bad field.
    void validate() const;
};

enum class RoutingMode {
    /// Sender j splits D_j over its out-edges by weight(j, i); conserves mass.
    SenderConserving,
    /// Receiver i takes (1/|in(i)|) sum_j D_j over its in-neighbors.
    ReceiverNormalized,
};

/// mu(q) = m / (1 + alpha q).
inline double service_rate(double m, double alpha, double q) noexcept {
    return m / (1.0 + alpha * q);
}

/// Optional time-varying arrival rate: (node, step, base lambda_i) -> rate.
/// Unset means lambda_i is constant over the run. Called from parallel
/// kernels, so it must be a pure function.
using ArrivalRateHook = std::function<double(NodeId, std::uint64_t, double)>;

inline double arrival_rate(const ArrivalRateHook* hook, NodeId i, std::uint64_t step, double base) {
    return hook != nullptr && *hook ? (*hook)(i, step, base) : base;
}

/// Everything the coupled dynamics needs besides the state and control.
struct CoupledModel {
    const Topology* topo = nullptr;
    const RoutingWeights* weights = nullptr;
    const NodeParams* node = nullptr;
    GlobalParams global;
    RoutingMode routing = RoutingMode::SenderConserving;
    std::uint64_t seed = 0;
    const ArrivalRateHook* arrival_hook = nullptr;
};

struct QueueState {
    std::vector<double> q;
    std::uint64_t step = 0;
};

struct StepFlows {
    std::vector<std::uint64_t> arrivals;  // A_i, integer counts
    std::vector<double> departures;       // D_i after truncation
    std::vector<double> forwarded;        // F_i, unscaled
    std::vector<double> processed;        // P_i = beta (A_i + F_i)
    std::vector<double> service;          // mu_i at step start
    std::uint64_t truncations = 0;        // nodes whose raw draw exceeded q_i
    double delivered = 0.0;               // sum of F over sinks
};

struct StepResult {
    QueueState state;
    StepFlows flows;
};

/// Parallel step (OpenMP over nodes, two phases with a barrier). Output is
/// independent of the worker count. Throws std::logic_error if a queue would
/// end negative.
StepResult step_coupled(const CoupledModel& model, const QueueState& state,
                        std::span<const std::uint8_t> control);

/// Serial reference of step_coupled with push-style routing. Used by tests
/// and the kernel benchmark.
StepResult step_coupled_reference(const CoupledModel& model, const QueueState& state,
                                  std::span<const std::uint8_t> control);

/// Routes departures to receivers. Writes F for every node (sinks included).
/// Per-receiver sums run in in-neighbor order.
void route_departures(const Topology& topo, const RoutingWeights& weights, RoutingMode mode,
                      std::span<const double> departures, std::span<double> inflow);

/// q[s] = 0 for every sink s.
void enforce_sink(QueueState& state, const Topology& topo);

/// E[min(X, cap)] for X ~ Poisson(mean), cap >= 0.
double truncated_poisson_mean(double mean, double cap);

/// Discrete analogues of the compensated processes for A, D and F, per node.
/// Every field is a running sum over steps of (increment - compensator).
struct ResidualDiagnostics {
    std::uint64_t steps = 0;
    std::vector<double> arrivals;      // (1-beta)(A - lambda dt)
    std::vector<double> departures;    // D - mu chi dt
    std::vector<double> forwarded;     // (1-beta)(F - sum_j w mu_j chi_j dt)
    std::vector<double> queue;         // arrivals - departures + forwarded
    /// D - E[min(Poisson(mu chi dt), q)]: exact compensator under truncation.
    std::vector<double> departures_truncation_aware;
    /// (1-beta)(F - sum_j w E[D_j]) with the truncated expectation above.
    std::vector<double> forwarded_truncation_aware;
    // Accumulated predictable variances, for standardization.
    std::vector<double> arrivals_var;
    std::vector<double> departures_var;

    explicit ResidualDiagnostics(std::size_t n = 0);

    /// residual / sqrt(accumulated variance); 0 when the variance is 0.
    double standardized_arrivals(std::size_t i) const;
    double standardized_departures(std::size_t i) const;
};

/// Online accumulator for ResidualDiagnostics used inside the engine loop.
class ResidualAccumulator {
public:
    explicit ResidualAccumulator(const CoupledModel& model);

    /// `before` is the step-start state, `control` the control applied.
    void add(const QueueState& before, std::span<const std::uint8_t> control,
             const StepFlows& flows);

    const ResidualDiagnostics& result() const noexcept { return diag_; }

private:
    const CoupledModel* model_;
    ResidualDiagnostics diag_;
    std::vector<double> rate_, rate_trunc_;
};

/// Batch form: states has one more entry than controls and flows.
/// Throws std::invalid_argument on misaligned histories.
ResidualDiagnostics compensated_residuals(const CoupledModel& model,
                                          std::span<const QueueState> states,
                                          std::span<const ControlVector> controls,
                                          std::span<const StepFlows> flows);

}  // namespace bpsim
