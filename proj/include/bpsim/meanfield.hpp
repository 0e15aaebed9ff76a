#pragma once

// Mean-field ensemble engine.
//
// Each node carries M independent queue samples that interact only through
// the node's own ensemble mean. Per step and sample j of node i:
//   A  ~ Poisson(lambda_i dt)
//   mu = m_i / (1 + alpha q_ij)
//   D  = min(Poisson(mu chi_i dt), q_ij)
//   F  = mu chi_i dt                      (PerSample)
//      = mean_j'(mu_ij') chi_i dt          (EnsembleMean)
//   q_ij <- q_ij + (1 - beta)(A + F) - D
// then sinks are cleared, qbar_i = mean_j q_ij, and the shared control chi_i
// is refreshed from the ensemble. Nodes never read each other's state, so the
// step is one parallel loop over nodes.

#include <cstdint>
#include <span>
#include <string_view>
#include <optional>
#include <vector>

#include "bpsim/dynamics.hpp"
#include "bpsim/schedulers.hpp"

namespace bpsim {

enum class EstimatorMode { PerSample, EnsembleMean };
enum class ControlRule { RandomRepresentative, PerSampleMajority };

std::string_view to_string(EstimatorMode m) noexcept;
std::string_view to_string(ControlRule r) noexcept;
std::optional<EstimatorMode> parse_estimator(std::string_view s) noexcept;
std::optional<ControlRule> parse_control_rule(std::string_view s) noexcept;

/// Queue samples stored node-major: the M samples of node i are contiguous.
struct EnsembleState {
    std::size_t num_nodes = 0;
    std::size_t num_samples = 0;
    std::vector<double> q;
    ControlVector chi;
    std::uint64_t step = 0;

    std::span<double> samples(std::size_t i) noexcept {
        return {q.data() + i * num_samples, num_samples};
    }
    std::span<const double> samples(std::size_t i) const noexcept {
        return {q.data() + i * num_samples, num_samples};
    }
    double& at(std::size_t sample, std::size_t node) noexcept { return q[node * num_samples + sample]; }
    double at(std::size_t sample, std::size_t node) const noexcept {
        return q[node * num_samples + sample];
    }
};

struct EnsembleModel {
    const Topology* topo = nullptr;  // only the sink set is used
    const NodeParams* node = nullptr;
    GlobalParams global;
    std::uint64_t seed = 0;
    EstimatorMode estimator = EstimatorMode::PerSample;
    ControlRule rule = ControlRule::RandomRepresentative;
    /// MeanFieldThreshold, AlwaysOn or AlwaysOff.
    SchedulerKind policy = SchedulerKind::MeanFieldThreshold;
    /// Stream key used by sample position j. Empty means identity. Relabeling
    /// hook for exchangeability checks; must be a permutation of 0..M-1.
    std::vector<std::uint64_t> sample_keys;
    const ArrivalRateHook* arrival_hook = nullptr;
};

/// Per-node outputs of one ensemble step.
struct MeanFieldEstimate {
    std::vector<double> qbar;             // mean_j q_ij after the step
    std::vector<double> muchi_bar;        // mean_j mu_ij chi_i (rate, per unit time)
    std::vector<double> arrivals;         // mean_j A_ij
    std::vector<double> departures;       // mean_j D_ij
    std::vector<double> arrival_resid;    // mean_j (1-beta)(A_ij - lambda_i dt)
    std::vector<double> departure_resid;  // mean_j (D_ij - mu_ij chi_i dt)
    std::vector<std::uint32_t> truncations;

    void resize(std::size_t n);
};

/// Zero queues, chi = 1 on non-sinks (0 on sinks), parameters drawn per node.
struct EnsembleInit {
    EnsembleState state;
    NodeParams params;
};
EnsembleInit init_ensemble(const Topology& topo, std::size_t num_samples,
                           const ParamRanges& ranges, std::uint64_t master_seed);

/// Advances the ensemble one step in place (OpenMP over nodes) and fills
/// `est`. Result is independent of the worker count. Throws std::logic_error
/// if a queue would go negative.
void ensemble_step(const EnsembleModel& model, EnsembleState& es, MeanFieldEstimate& est);

/// Serial sample-major reference of ensemble_step. Bit-identical output.
void ensemble_step_reference(const EnsembleModel& model, EnsembleState& es,
                             MeanFieldEstimate& est);

/// Control refresh for node i from its samples and their mean.
/// `step` keys the representative draw.
std::uint8_t update_control(const EnsembleModel& model, std::span<const double> samples,
                            double qbar, NodeId i, std::uint64_t step);

}  // namespace bpsim
