#include "bpsim/checks.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bpsim/engine.hpp"
#include "bpsim/meanfield.hpp"

namespace bpsim {

ControlVector brute_force_cooperative(const CoupledModel& model, std::span<const double> q,
                                      double* best_value) {
    const std::size_t n = model.topo->num_nodes();
    if (n > 20) throw std::invalid_argument("brute_force_cooperative: N must be <= 20");
    ControlVector chi(n, 0);
    std::vector<double> values(std::size_t{1} << n);
    double best = -INFINITY;
    for (std::uint64_t mask = 0; mask < values.size(); ++mask) {
        for (std::size_t i = 0; i < n; ++i) chi[i] = (mask >> i) & 1U;
        values[mask] = cooperative_objective(model, q, chi);
        best = std::max(best, values[mask]);
    }
    const double tol = 1e-9 * std::max(1.0, std::fabs(best));
    std::uint64_t pick = 0;
    int pick_bits = 64;
    for (std::uint64_t mask = 0; mask < values.size(); ++mask) {
        if (values[mask] >= best - tol && std::popcount(mask) < pick_bits) {
            pick = mask;
            pick_bits = std::popcount(mask);
        }
    }
    for (std::size_t i = 0; i < n; ++i) chi[i] = (pick >> i) & 1U;
    if (best_value) *best_value = best;
    return chi;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

CheckResult check_scheduler_oracle(const CheckOptions& opt) {
    CheckResult r{"scheduler-oracle", true, {}};
    const ParamRanges ranges;
    std::size_t ties = 0;
    for (std::size_t t = 0; t < opt.trials; ++t) {
        const std::size_t n = 3 + t % 8;
        const Topology topo = build_random_dag(n, 0.4, opt.seed + t);
        const RoutingWeights w = uniform_routing(topo);
        const NodeParams params = draw_node_params(opt.seed + t, n, ranges);
        const CoupledModel model{&topo, &w, &params, {0.01, 0.7, 1.0}, RoutingMode::SenderConserving,
                                 opt.seed};
        // Small integer queues make zero weights (ties) common.
        RngStream s(opt.seed, {t, 0, Purpose::Test, 1});
        std::vector<double> q(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) q[i] = static_cast<double>(sample_index(s, 4));

        double best = 0.0;
        const ControlVector oracle = brute_force_cooperative(model, q, &best);
        const ControlVector got = cooperative_schedule(model, q, opt.scheduler_tie);
        const double value = cooperative_objective(model, q, got);
        for (std::size_t i = 0; i < n; ++i) ties += backpressure_weight(model, static_cast<NodeId>(i), q) == 0.0 && !topo.is_sink(static_cast<NodeId>(i));
        const bool value_ok = std::fabs(value - best) <= 1e-9 * std::max(1.0, std::fabs(best));
        if (!value_ok || got != oracle) {
            r.pass = false;
            r.detail = "instance " + std::to_string(t) + ": objective " + fmt(value) + " vs max " +
                       fmt(best) + (got != oracle ? ", schedule differs from idle-tie argmax" : "");
            return r;
        }
    }
    r.detail = std::to_string(opt.trials) + " instances, " + std::to_string(ties) + " zero-weight ties";
    return r;
}

CheckResult check_best_response(const CheckOptions& opt) {
    CheckResult r{"best-response-invariance", true, {}};
    const ParamRanges ranges;
    for (std::size_t t = 0; t < opt.trials; ++t) {
        const std::size_t n = 4 + t % 6;
        const Topology topo = build_random_dag(n, 0.5, opt.seed * 31 + t);
        const RoutingWeights w = uniform_routing(topo);
        const NodeParams params = draw_node_params(opt.seed + t, n, ranges);
        const CoupledModel model{&topo, &w, &params, {0.01, 0.7, 1.0}, RoutingMode::SenderConserving,
                                 opt.seed};
        RngStream s(opt.seed, {t, 1, Purpose::Test, 2});
        std::vector<double> q(n, 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) q[i] = sample_uniform(s, 0.0, 50.0);
        const ControlVector coop = cooperative_schedule(model, q, opt.scheduler_tie);
        for (int rep = 0; rep < 10; ++rep) {
            ControlVector others(n, 0);
            for (auto& c : others) c = static_cast<std::uint8_t>(s.next_u64() & 1U);
            for (NodeId i = 0; i < n; ++i) {
                if (best_response(model, i, q, others, opt.scheduler_tie) != coop[i]) {
                    r.pass = false;
                    r.detail = "instance " + std::to_string(t) + " node " + std::to_string(i);
                    return r;
                }
            }
        }
    }
    r.detail = std::to_string(opt.trials) + " instances x 10 opponent profiles";
    return r;
}

CheckResult check_poisson(const CheckOptions& opt) {
    CheckResult r{"poisson-moments", true, {}};
    constexpr std::size_t kDraws = 200000;
    std::ostringstream detail;
    for (double mean : {0.1, 1.0, 10.0}) {
        RngStream s(opt.seed, {0, 0, Purpose::Test, static_cast<std::uint64_t>(mean * 10)});
        double sum = 0.0, sq = 0.0;
        for (std::size_t k = 0; k < kDraws; ++k) {
            const auto x = static_cast<double>(sample_poisson(s, mean));
            sum += x;
            sq += x * x;
        }
        const double n = static_cast<double>(kDraws);
        const double m = sum / n;
        const double var = (sq - n * m * m) / (n - 1.0);
        const double se_mean = std::sqrt(mean / n);
        const double se_var = std::sqrt((mean + 2.0 * mean * mean) / n);
        const double zm = (m - mean) / se_mean;
        const double zv = (var - mean) / se_var;
        detail << "mean " << mean << ": z_mean=" << fmt(zm) << " z_var=" << fmt(zv) << "; ";
        if (std::fabs(zm) > 4.0 || std::fabs(zv) > 4.0) r.pass = false;
    }
    r.detail = detail.str();
    return r;
}

CheckResult check_uniform(const CheckOptions& opt) {
    CheckResult r{"uniform-moments", true, {}};
    constexpr std::size_t kDraws = 200000;
    std::ostringstream detail;
    for (auto [lo, hi] : {std::pair{0.1, 0.5}, std::pair{1.0, 5.0}}) {
        RngStream s(opt.seed, {1, 0, Purpose::Test, static_cast<std::uint64_t>(hi * 10)});
        double sum = 0.0;
        bool in_range = true;
        for (std::size_t k = 0; k < kDraws; ++k) {
            const double x = sample_uniform(s, lo, hi);
            in_range = in_range && x >= lo && x < hi;
            sum += x;
        }
        const double se = (hi - lo) / std::sqrt(12.0 * kDraws);
        const double z = (sum / kDraws - 0.5 * (lo + hi)) / se;
        detail << "U[" << lo << "," << hi << "): z=" << fmt(z) << "; ";
        if (std::fabs(z) > 4.0 || !in_range) r.pass = false;
    }
    r.detail = detail.str();
    return r;
}

SimConfig small_coupled(std::uint64_t seed) {
    SimConfig c;
    c.mode = SimMode::Coupled;
    c.rows = 5;
    c.cols = 5;
    c.steps = 300;
    c.seed = seed;
    return c;
}

CheckResult check_conservation(const CheckOptions& opt) {
    CheckResult r{"conservation", true, {}};
    SimConfig c = small_coupled(opt.seed);
    c.beta = 0.0;
    const Trajectory t = run(c);
    double held = 0.0;
    for (double v : t.final_queue) held += v;
    const double gap = std::fabs(held + t.records.back().sink_throughput - t.stats.total_arrivals);
    r.pass = gap <= 1e-6;
    r.detail = "|held + delivered - arrived| = " + fmt(gap);
    return r;
}

CheckResult check_residuals(const CheckOptions& opt) {
    CheckResult r{"residual-zero-mean", true, {}};
    SimConfig c = small_coupled(opt.seed);
    c.rows = c.cols = 10;
    c.scheduler = SchedulerKind::AlwaysOff;
    const Trajectory t = run(c);
    std::size_t count = 0;
    double sum = 0.0, sq = 0.0;
    for (NodeId i = 0; i < t.final_arrival_resid.size(); ++i) {
        if (i == t.sinks.front()) continue;
        const double x = t.final_arrival_resid[i] / static_cast<double>(c.steps);
        sum += x;
        sq += x * x;
        ++count;
    }
    const double n = static_cast<double>(count);
    const double mean = sum / n;
    const double se = std::sqrt((sq - n * mean * mean) / (n - 1.0) / n);
    r.pass = t.stats.truncations == 0 && std::fabs(mean) <= 3.0 * se;
    r.detail = "A residual mean " + fmt(mean) + " (3 SE = " + fmt(3.0 * se) + "), truncations " +
               std::to_string(t.stats.truncations);
    return r;
}

CheckResult check_invariants(const CheckOptions& opt) {
    CheckResult r{"invariants", true, {}};
    SimConfig coupled = small_coupled(opt.seed);
    SimConfig mf;
    mf.rows = 5;
    mf.cols = 5;
    mf.samples = 20;
    mf.steps = 300;
    mf.seed = opt.seed;
    const Trajectory a = run(coupled);
    const Trajectory b = run(mf);
    r.pass = a.stats.invariant_violations == 0 && b.stats.invariant_violations == 0;
    r.detail = "violations coupled=" + std::to_string(a.stats.invariant_violations) +
               " meanfield=" + std::to_string(b.stats.invariant_violations);
    return r;
}

CheckResult check_kernels(const CheckOptions& opt) {
    CheckResult r{"kernel-reference", true, {}};
    const Topology topo = build_directed_grid(6, 7);
    EnsembleInit a = init_ensemble(topo, 16, ParamRanges{}, opt.seed);
    EnsembleState b = a.state;
    EnsembleModel model;
    model.topo = &topo;
    model.node = &a.params;
    model.seed = opt.seed;
    MeanFieldEstimate ea, eb;
    for (int k = 0; k < 50; ++k) {
        ensemble_step(model, a.state, ea);
        ensemble_step_reference(model, b, eb);
    }
    const bool mf_ok = a.state.q == b.q && a.state.chi == b.chi;

    const RoutingWeights w = uniform_routing(topo);
    const CoupledModel cm{&topo, &w, &a.params, {0.01, 0.7, 1.0}, RoutingMode::SenderConserving, opt.seed};
    QueueState s1{std::vector<double>(topo.num_nodes(), 0.0), 0}, s2 = s1;
    bool coupled_ok = true;
    for (int k = 0; k < 50; ++k) {
        const ControlVector chi = cooperative_schedule(cm, s1.q);
        s1 = step_coupled(cm, s1, chi).state;
        s2 = step_coupled_reference(cm, s2, chi).state;
        coupled_ok = coupled_ok && s1.q == s2.q;
    }
    r.pass = mf_ok && coupled_ok;
    r.detail = std::string("meanfield ") + (mf_ok ? "identical" : "DIFFERS") + ", coupled " +
               (coupled_ok ? "identical" : "DIFFERS");
    return r;
}

}  // namespace

std::vector<CheckResult> run_builtin_checks(const CheckOptions& options) {
    return {check_scheduler_oracle(options), check_best_response(options), check_poisson(options),
            check_uniform(options),          check_conservation(options),  check_residuals(options),
            check_invariants(options),       check_kernels(options)};
}

}  // namespace bpsim
