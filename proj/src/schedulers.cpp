#include "bpsim/schedulers.hpp"

#include <stdexcept>

namespace bpsim {

std::string_view to_string(SchedulerKind kind) noexcept {
    switch (kind) {
        case SchedulerKind::CooperativeBP: return "coop";
        case SchedulerKind::BestResponseBP: return "br";
        case SchedulerKind::MeanFieldThreshold: return "mft";
        case SchedulerKind::AlwaysOn: return "on";
        case SchedulerKind::AlwaysOff: return "off";
    }
    return "?";
}

std::optional<SchedulerKind> parse_scheduler(std::string_view s) noexcept {
    if (s == "coop") return SchedulerKind::CooperativeBP;
    if (s == "br") return SchedulerKind::BestResponseBP;
    if (s == "mft") return SchedulerKind::MeanFieldThreshold;
    if (s == "on") return SchedulerKind::AlwaysOn;
    if (s == "off") return SchedulerKind::AlwaysOff;
    return std::nullopt;
}

double backpressure_weight(const CoupledModel& model, NodeId i, std::span<const double> q) {
    const Topology& topo = *model.topo;
    if (topo.is_sink(i)) return 0.0;
    const auto nbrs = topo.out_neighbors(i);
    const auto w = model.weights->out_weights(i);
    double diff = 0.0;
    for (std::size_t k = 0; k < nbrs.size(); ++k) diff += w[k] * (q[i] - q[nbrs[k]]);
    return diff * service_rate(model.node->m[i], model.global.alpha, q[i]);
}

double cooperative_objective(const CoupledModel& model, std::span<const double> q,
                             std::span<const std::uint8_t> chi) {
    double total = 0.0;
    for (NodeId i = 0; i < model.topo->num_nodes(); ++i) {
        if (chi[i] != 0) total += backpressure_weight(model, i, q);
    }
    return total;
}

namespace {

inline std::uint8_t decide(double weight, TieBreak tie) noexcept {
    if (weight > 0.0) return 1;
    return (weight == 0.0 && tie == TieBreak::Transmit) ? 1 : 0;
}

}  // namespace

ControlVector cooperative_schedule(const CoupledModel& model, std::span<const double> q,
                                   TieBreak tie) {
    const Topology& topo = *model.topo;
    ControlVector chi(topo.num_nodes(), 0);
    const auto n = static_cast<std::int64_t>(topo.num_nodes());
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<NodeId>(ii);
        if (!topo.is_sink(i)) chi[i] = decide(backpressure_weight(model, i, q), tie);
    }
    return chi;
}

double node_utility(const CoupledModel& model, NodeId i, std::span<const double> q,
                    std::uint8_t chi_i, std::span<const std::uint8_t> /*chi_others*/) {
    // Others' actions only enter through future states.
    return chi_i != 0 ? backpressure_weight(model, i, q) : 0.0;
}

std::uint8_t best_response(const CoupledModel& model, NodeId i, std::span<const double> q,
                           std::span<const std::uint8_t> chi_others, TieBreak tie) {
    if (model.topo->is_sink(i)) return 0;
    const double on = node_utility(model, i, q, 1, chi_others);
    const double off = node_utility(model, i, q, 0, chi_others);
    if (on > off) return 1;
    return (on == off && tie == TieBreak::Transmit) ? 1 : 0;
}

ControlVector best_response_schedule(const CoupledModel& model, std::span<const double> q,
                                     TieBreak tie) {
    ControlVector chi(model.topo->num_nodes(), 0);
    for (NodeId i = 0; i < chi.size(); ++i) chi[i] = best_response(model, i, q, chi, tie);
    return chi;
}

ControlVector constant_schedule(const Topology& topo, bool on) {
    ControlVector chi(topo.num_nodes(), 0);
    if (on) {
        for (NodeId i = 0; i < chi.size(); ++i) chi[i] = topo.is_sink(i) ? 0 : 1;
    }
    return chi;
}

}  // namespace bpsim
