#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <cmath>

#include "bpsim/checks.hpp"
#include "bpsim/schedulers.hpp"

using namespace bpsim;

namespace {

struct Instance {
    Topology topo;
    RoutingWeights w;
    NodeParams params;
    CoupledModel model;
    std::vector<double> q;

    Instance(Topology t, NodeParams p, double alpha)
        : topo(std::move(t)), w(uniform_routing(topo)), params(std::move(p)) {
        model = CoupledModel{&topo, &w, &params, {alpha, 0.7, 1.0}, RoutingMode::SenderConserving, 1};
    }
    Instance(const Instance&) = delete;
};

// Cooperative criterion written out from its definition: for every active
// node, sum over out-neighbours of (1/|out(i)|)(q_i - q_j) m_i / (1 + alpha q_i).
double objective_oracle(const Instance& in, const std::vector<std::uint8_t>& chi) {
    double total = 0.0;
    for (NodeId i = 0; i < in.topo.num_nodes(); ++i) {
        if (!chi[i] || in.topo.is_sink(i)) continue;
        const auto out = in.topo.out_neighbors(i);
        const double mu = in.params.m[i] / (1.0 + in.model.global.alpha * in.q[i]);
        for (NodeId j : out) total += (in.q[i] - in.q[j]) / static_cast<double>(out.size()) * mu;
    }
    return total;
}

double exhaustive_max(const Instance& in) {
    const std::size_t n = in.topo.num_nodes();
    double best = -1e300;
    std::vector<std::uint8_t> chi(n);
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
        for (std::size_t i = 0; i < n; ++i) chi[i] = (mask >> i) & 1U;
        best = std::max(best, objective_oracle(in, chi));
    }
    return best;
}

std::vector<double> random_queues(RngStream& s, const Topology& topo, double hi) {
    std::vector<double> q(topo.num_nodes(), 0.0);
    for (NodeId i = 0; i < q.size(); ++i) {
        if (!topo.is_sink(i)) q[i] = sample_uniform(s, 0.0, hi);
    }
    return q;
}

}  // namespace

TEST_CASE("scheduler names") {
    CHECK(parse_scheduler("coop") == SchedulerKind::CooperativeBP);
    CHECK(parse_scheduler("br") == SchedulerKind::BestResponseBP);
    CHECK(parse_scheduler("mft") == SchedulerKind::MeanFieldThreshold);
    CHECK(parse_scheduler("on") == SchedulerKind::AlwaysOn);
    CHECK(parse_scheduler("off") == SchedulerKind::AlwaysOff);
    CHECK_FALSE(parse_scheduler("greedy"));
    for (auto k : {SchedulerKind::CooperativeBP, SchedulerKind::BestResponseBP, SchedulerKind::AlwaysOff}) {
        CHECK(parse_scheduler(to_string(k)) == k);
    }
}

TEST_CASE("backpressure weight examples") {
    Instance a(build_directed_grid(1, 2), {{0.1, 0.1}, {2.0, 2.0}}, 0.0);
    const std::vector<double> q{4.0, 0.0};
    CHECK(backpressure_weight(a.model, 0, q) == 8.0);
    CHECK(backpressure_weight(a.model, 1, q) == 0.0);
    CHECK(cooperative_schedule(a.model, q) == ControlVector{1, 0});

    Instance b(build_directed_grid(2, 2), {std::vector<double>(4, 0.1), std::vector<double>(4, 1.0)}, 0.0);
    // Node 0 sends half to 1 and half to 2: 0.5 (3 - 5) + 0.5 (3 - 1) = 0.
    const std::vector<double> q2{3.0, 5.0, 1.0, 0.0};
    CHECK(backpressure_weight(b.model, 0, q2) == 0.0);
    CHECK(cooperative_schedule(b.model, q2)[0] == 0);
    CHECK(cooperative_schedule(b.model, q2, TieBreak::Transmit)[0] == 1);
}

TEST_CASE("cooperative schedule attains the exhaustive maximum") {
    RngStream s(31, {});
    for (std::uint64_t t = 0; t < 100; ++t) {
        const std::size_t n = 2 + sample_index(s, 11);
        Instance in(build_random_dag(n, 0.35, 1000 + t), draw_node_params(t, n, ParamRanges{}), 0.01);
        in.q = random_queues(s, in.topo, 50.0);
        if (t % 3 == 0) {
            for (auto& x : in.q) x = std::floor(x / 12.5);  // integer queues: many exact ties
            in.q[n - 1] = 0.0;
        }
        const ControlVector chi = cooperative_schedule(in.model, in.q);
        const double best = exhaustive_max(in);
        CAPTURE(t);
        CHECK(std::fabs(objective_oracle(in, chi) - best) <= 1e-9 * std::max(1.0, std::fabs(best)));
        CHECK(cooperative_objective(in.model, in.q, chi) == doctest::Approx(objective_oracle(in, chi)));
        CHECK(chi == brute_force_cooperative(in.model, in.q));
    }
}

TEST_CASE("schedule is invariant to positive queue scaling without congestion") {
    RngStream s(32, {});
    for (int t = 0; t < 50; ++t) {
        Instance in(build_random_dag(10, 0.3, t), draw_node_params(t, 10, ParamRanges{}), 0.0);
        in.q = random_queues(s, in.topo, 50.0);
        std::vector<double> scaled = in.q;
        const double c = sample_uniform(s, 0.1, 10.0);
        for (auto& x : scaled) x *= c;
        CHECK(cooperative_schedule(in.model, in.q) == cooperative_schedule(in.model, scaled));
    }
}

TEST_CASE("best response ignores the other nodes' choices") {
    RngStream s(33, {});
    for (int t = 0; t < 20; ++t) {
        Instance in(build_directed_grid(3, 4), draw_node_params(t, 12, ParamRanges{}), 0.01);
        in.q = random_queues(s, in.topo, 20.0);
        const ControlVector coop = cooperative_schedule(in.model, in.q);
        CHECK(best_response_schedule(in.model, in.q) == coop);
        for (int rep = 0; rep < 10; ++rep) {
            ControlVector others(12);
            for (auto& c : others) c = static_cast<std::uint8_t>(s.next_u64() & 1U);
            for (NodeId i = 0; i < 12; ++i) {
                CHECK(best_response(in.model, i, in.q, others) == coop[i]);
                const double gain = node_utility(in.model, i, in.q, 1, others) -
                                    node_utility(in.model, i, in.q, 0, others);
                CHECK(gain == doctest::Approx(in.topo.is_sink(i) ? 0.0 : backpressure_weight(in.model, i, in.q)));
            }
        }
    }
}

TEST_CASE("sinks never transmit") {
    RngStream s(34, {});
    Instance in(build_directed_grid(4, 4), draw_node_params(1, 16, ParamRanges{}), 0.01);
    for (int t = 0; t < 20; ++t) {
        in.q = random_queues(s, in.topo, 30.0);
        in.q[15] = 5.0;  // even a corrupted sink queue must not switch it on
        for (const ControlVector& chi :
             {cooperative_schedule(in.model, in.q), best_response_schedule(in.model, in.q),
              cooperative_schedule(in.model, in.q, TieBreak::Transmit), constant_schedule(in.topo, true)}) {
            CHECK(chi[15] == 0);
        }
    }
    CHECK(constant_schedule(in.topo, false) == ControlVector(16, 0));
}

TEST_CASE("mean-field threshold control") {
    CHECK(meanfield_control(5.0, 3.0) == 1);
    CHECK(meanfield_control(3.0, 3.0) == 0);
    CHECK(meanfield_control(1.0, 3.0) == 0);
    for (double m = 0.0; m < 10.0; m += 0.25) {
        for (double q = 0.0; q < 10.0; q += 0.25) CHECK(meanfield_control(q + 0.5, m) >= meanfield_control(q, m));
    }
}
