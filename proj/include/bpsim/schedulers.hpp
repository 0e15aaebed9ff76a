#pragma once

// On/off transmission policies.
//
// The cooperative objective sum_i w_i(q) chi_i is separable in chi, so its
// maximizer over {0,1}^N is chi_i = [w_i > 0]. The non-cooperative best
// response of node i maximizes w_i(q) chi_i alone and therefore coincides
// with it at every instant. Ties (w_i == 0) resolve to idle.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "bpsim/dynamics.hpp"

namespace bpsim {

enum class SchedulerKind { CooperativeBP, BestResponseBP, MeanFieldThreshold, AlwaysOn, AlwaysOff };

std::string_view to_string(SchedulerKind kind) noexcept;
/// Accepts the CLI spellings coop|br|mft|on|off.
std::optional<SchedulerKind> parse_scheduler(std::string_view s) noexcept;

enum class TieBreak {
    Idle,      // chi = 0 when the weight is exactly 0
    Transmit,  // fault-injection hook for the validate negative control
};

/// sum_{j in out(i)} weight(i,j) (q_i - q_j) * mu_i(q_i). Zero for sinks.
double backpressure_weight(const CoupledModel& model, NodeId i, std::span<const double> q);

/// Value of the cooperative criterion for a given schedule.
double cooperative_objective(const CoupledModel& model, std::span<const double> q,
                             std::span<const std::uint8_t> chi);

ControlVector cooperative_schedule(const CoupledModel& model, std::span<const double> q,
                                   TieBreak tie = TieBreak::Idle);

/// U_i(chi_i, chi_others): node i's instantaneous utility.
double node_utility(const CoupledModel& model, NodeId i, std::span<const double> q,
                    std::uint8_t chi_i, std::span<const std::uint8_t> chi_others);

/// argmax over chi_i in {0,1} of node_utility, holding chi_others fixed.
std::uint8_t best_response(const CoupledModel& model, NodeId i, std::span<const double> q,
                           std::span<const std::uint8_t> chi_others, TieBreak tie = TieBreak::Idle);

/// One Gauss-Seidel sweep of best responses starting from all-idle.
ControlVector best_response_schedule(const CoupledModel& model, std::span<const double> q,
                                     TieBreak tie = TieBreak::Idle);

/// 1 iff q_sample > mean_estimate (strict).
inline std::uint8_t meanfield_control(double q_sample, double mean_estimate) noexcept {
    return q_sample > mean_estimate ? 1 : 0;
}

/// Fixed schedule: every non-sink on (or off).
ControlVector constant_schedule(const Topology& topo, bool on);

}  // namespace bpsim
