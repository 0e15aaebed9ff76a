#include "bpsim/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace bpsim {

void GlobalParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be finite and > 0");
}

namespace {

struct NodeDraw {
    std::uint64_t arrivals = 0;
    double departures = 0.0;
    double service = 0.0;
    bool truncated = false;
};

// Phase-one work for a single non-sink node. Shared by the parallel kernel
// and the serial reference so both consume identical streams.
inline NodeDraw draw_node(const CoupledModel& model, NodeId i, double q, std::uint8_t chi,
                          std::uint64_t step) {
    NodeDraw d;
    const double dt = model.global.dt;
    RngStream arr(model.seed, {i, 0, Purpose::Arrival, step});
    d.arrivals = sample_poisson(arr, arrival_rate(model.arrival_hook, i, step, model.node->lambda[i]) * dt);
    d.service = service_rate(model.node->m[i], model.global.alpha, q);
    if (chi != 0) {
        RngStream dep(model.seed, {i, 0, Purpose::Departure, step});
        const auto raw = static_cast<double>(sample_poisson(dep, d.service * dt));
        d.truncated = raw > q;
        d.departures = d.truncated ? q : raw;
    }
    return d;
}

void check_inputs(const CoupledModel& model, const QueueState& state,
                  std::span<const std::uint8_t> control) {
    const std::size_t n = model.topo->num_nodes();
    if (state.q.size() != n || control.size() != n || model.node->size() != n) {
        throw std::invalid_argument("step_coupled: state, control and parameters must all have N entries");
    }
}

StepFlows make_flows(std::size_t n) {
    StepFlows f;
    f.arrivals.assign(n, 0);
    f.departures.assign(n, 0.0);
    f.forwarded.assign(n, 0.0);
    f.processed.assign(n, 0.0);
    f.service.assign(n, 0.0);
    return f;
}

}  // namespace

void route_departures(const Topology& topo, const RoutingWeights& weights, RoutingMode mode,
                      std::span<const double> departures, std::span<double> inflow) {
    const auto n = static_cast<std::int64_t>(topo.num_nodes());
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<NodeId>(ii);
        const auto senders = topo.in_neighbors(i);
        double f = 0.0;
        if (mode == RoutingMode::SenderConserving) {
            const auto w = weights.in_weights(i);
            for (std::size_t k = 0; k < senders.size(); ++k) f += w[k] * departures[senders[k]];
        } else if (!senders.empty()) {
            for (NodeId j : senders) f += departures[j];
            f /= static_cast<double>(senders.size());
        }
        inflow[i] = f;
    }
}

StepResult step_coupled(const CoupledModel& model, const QueueState& state,
                        std::span<const std::uint8_t> control) {
    check_inputs(model, state, control);
    const Topology& topo = *model.topo;
    const std::size_t n = topo.num_nodes();
    const std::uint64_t step = state.step + 1;
    const double keep = 1.0 - model.global.beta;
    const double beta = model.global.beta;

    StepResult out;
    out.flows = make_flows(n);
    out.state.q.assign(n, 0.0);
    out.state.step = step;
    StepFlows& fl = out.flows;
    std::uint64_t truncations = 0;
    const auto sn = static_cast<std::int64_t>(n);

#pragma omp parallel for schedule(static) reduction(+ : truncations)
    for (std::int64_t ii = 0; ii < sn; ++ii) {
        const auto i = static_cast<NodeId>(ii);
        if (topo.is_sink(i)) continue;
        const NodeDraw d = draw_node(model, i, state.q[i], control[i], step);
        fl.arrivals[i] = d.arrivals;
        fl.departures[i] = d.departures;
        fl.service[i] = d.service;
        truncations += d.truncated ? 1 : 0;
    }

    route_departures(topo, *model.weights, model.routing, fl.departures, fl.forwarded);

    bool negative = false;
#pragma omp parallel for schedule(static) reduction(|| : negative)
    for (std::int64_t ii = 0; ii < sn; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double a = static_cast<double>(fl.arrivals[i]);
        fl.processed[i] = beta * (a + fl.forwarded[i]);
        if (topo.is_sink(static_cast<NodeId>(i))) continue;
        const double next = (state.q[i] - fl.departures[i]) + keep * (a + fl.forwarded[i]);
        negative = negative || next < 0.0;
        out.state.q[i] = next;
    }
    if (negative) throw std::logic_error("step_coupled: queue went negative after truncation");

    fl.truncations = truncations;
    for (NodeId s : topo.sinks()) fl.delivered += fl.forwarded[s];
    return out;
}

StepResult step_coupled_reference(const CoupledModel& model, const QueueState& state,
                                  std::span<const std::uint8_t> control) {
    check_inputs(model, state, control);
    const Topology& topo = *model.topo;
    const std::size_t n = topo.num_nodes();
    const std::uint64_t step = state.step + 1;
    const double keep = 1.0 - model.global.beta;

    StepResult out;
    out.flows = make_flows(n);
    out.state.step = step;
    StepFlows& fl = out.flows;

    for (NodeId i = 0; i < n; ++i) {
        if (topo.is_sink(i)) continue;
        const NodeDraw d = draw_node(model, i, state.q[i], control[i], step);
        fl.arrivals[i] = d.arrivals;
        fl.departures[i] = d.departures;
        fl.service[i] = d.service;
        fl.truncations += d.truncated ? 1 : 0;
    }

    // Push each sender's departures to its receivers.
    std::vector<std::size_t> in_count(n, 0);
    for (NodeId j = 0; j < n; ++j) {
        const auto receivers = topo.out_neighbors(j);
        const auto w = model.weights->out_weights(j);
        for (std::size_t k = 0; k < receivers.size(); ++k) {
            const NodeId i = receivers[k];
            if (model.routing == RoutingMode::SenderConserving) {
                fl.forwarded[i] += w[k] * fl.departures[j];
            } else {
                fl.forwarded[i] += fl.departures[j];
                ++in_count[i];
            }
        }
    }
    if (model.routing == RoutingMode::ReceiverNormalized) {
        for (NodeId i = 0; i < n; ++i) {
            if (in_count[i] > 0) fl.forwarded[i] /= static_cast<double>(in_count[i]);
        }
    }

    out.state.q = state.q;
    for (NodeId i = 0; i < n; ++i) {
        const double a = static_cast<double>(fl.arrivals[i]);
        fl.processed[i] = model.global.beta * (a + fl.forwarded[i]);
        out.state.q[i] = (out.state.q[i] - fl.departures[i]) + keep * (a + fl.forwarded[i]);
        if (out.state.q[i] < 0.0) throw std::logic_error("step_coupled_reference: negative queue");
    }
    for (NodeId s : topo.sinks()) fl.delivered += fl.forwarded[s];
    enforce_sink(out.state, topo);
    return out;
}

void enforce_sink(QueueState& state, const Topology& topo) {
    for (NodeId s : topo.sinks()) state.q[s] = 0.0;
}

double truncated_poisson_mean(double mean, double cap) {
    if (mean <= 0.0 || cap <= 0.0) return 0.0;
    const double kmax = std::floor(cap);
    if (kmax > mean + 40.0 * std::sqrt(mean) + 50.0) return mean;
    // sum_{n <= kmax} n p_n + cap * P(X > kmax)
    double p = std::exp(-mean);
    double cdf = p;
    double partial = 0.0;
    for (double k = 1.0; k <= kmax; k += 1.0) {
        p *= mean / k;
        cdf += p;
        partial += k * p;
    }
    const double tail = cdf >= 1.0 ? 0.0 : 1.0 - cdf;
    return partial + cap * tail;
}

ResidualDiagnostics::ResidualDiagnostics(std::size_t n)
    : arrivals(n, 0.0),
      departures(n, 0.0),
      forwarded(n, 0.0),
      queue(n, 0.0),
      departures_truncation_aware(n, 0.0),
      forwarded_truncation_aware(n, 0.0),
      arrivals_var(n, 0.0),
      departures_var(n, 0.0) {}

double ResidualDiagnostics::standardized_arrivals(std::size_t i) const {
    return arrivals_var[i] > 0.0 ? arrivals[i] / std::sqrt(arrivals_var[i]) : 0.0;
}

double ResidualDiagnostics::standardized_departures(std::size_t i) const {
    return departures_var[i] > 0.0 ? departures[i] / std::sqrt(departures_var[i]) : 0.0;
}

ResidualAccumulator::ResidualAccumulator(const CoupledModel& model)
    : model_(&model),
      diag_(model.topo->num_nodes()),
      rate_(model.topo->num_nodes(), 0.0),
      rate_trunc_(model.topo->num_nodes(), 0.0) {}

void ResidualAccumulator::add(const QueueState& before, std::span<const std::uint8_t> control,
                              const StepFlows& flows) {
    const Topology& topo = *model_->topo;
    const std::size_t n = topo.num_nodes();
    const double dt = model_->global.dt;
    const double keep = 1.0 - model_->global.beta;

    for (NodeId i = 0; i < n; ++i) {
        if (topo.is_sink(i)) {
            rate_[i] = rate_trunc_[i] = 0.0;
            continue;
        }
        const double mu = service_rate(model_->node->m[i], model_->global.alpha, before.q[i]);
        rate_[i] = control[i] != 0 ? mu * dt : 0.0;
        rate_trunc_[i] = truncated_poisson_mean(rate_[i], before.q[i]);
    }
    for (NodeId i = 0; i < n; ++i) {
        if (topo.is_sink(i)) continue;
        const double lam =
            arrival_rate(model_->arrival_hook, i, before.step + 1, model_->node->lambda[i]) * dt;
        const double da = keep * (static_cast<double>(flows.arrivals[i]) - lam);
        const double dd = flows.departures[i] - rate_[i];

        const auto senders = topo.in_neighbors(i);
        double comp = 0.0, comp_trunc = 0.0;
        if (model_->routing == RoutingMode::SenderConserving) {
            const auto w = model_->weights->in_weights(i);
            for (std::size_t k = 0; k < senders.size(); ++k) {
                comp += w[k] * rate_[senders[k]];
                comp_trunc += w[k] * rate_trunc_[senders[k]];
            }
        } else if (!senders.empty()) {
            for (NodeId j : senders) {
                comp += rate_[j];
                comp_trunc += rate_trunc_[j];
            }
            comp /= static_cast<double>(senders.size());
            comp_trunc /= static_cast<double>(senders.size());
        }
        const double df = keep * (flows.forwarded[i] - comp);

        diag_.arrivals[i] += da;
        diag_.departures[i] += dd;
        diag_.forwarded[i] += df;
        diag_.queue[i] += da - dd + df;
        diag_.departures_truncation_aware[i] += flows.departures[i] - rate_trunc_[i];
        diag_.forwarded_truncation_aware[i] += keep * (flows.forwarded[i] - comp_trunc);
        diag_.arrivals_var[i] += keep * keep * lam;
        diag_.departures_var[i] += rate_[i];
    }
    ++diag_.steps;
}

ResidualDiagnostics compensated_residuals(const CoupledModel& model,
                                          std::span<const QueueState> states,
                                          std::span<const ControlVector> controls,
                                          std::span<const StepFlows> flows) {
    if (flows.size() != controls.size() || (!flows.empty() && states.size() != flows.size() + 1)) {
        throw std::invalid_argument(
            "compensated_residuals: need |states| = |flows| + 1 and |controls| = |flows|");
    }
    ResidualAccumulator acc(model);
    for (std::size_t k = 0; k < flows.size(); ++k) acc.add(states[k], controls[k], flows[k]);
    return acc.result();
}

}  // namespace bpsim
