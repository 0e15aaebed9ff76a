// Serial reference vs OpenMP kernels for one simulation step.
//
//   ./bench_kernels --benchmark_filter=Ensemble
//   SIM_THREADS=4 ./bench_kernels

#include <cstdlib>

#include <benchmark/benchmark.h>

#include "bpsim/dynamics.hpp"
#include "bpsim/engine.hpp"
#include "bpsim/meanfield.hpp"
#include "bpsim/schedulers.hpp"

using namespace bpsim;

namespace {

struct EnsembleFixture {
    Topology topo;
    EnsembleInit init;
    EnsembleModel model;

    EnsembleFixture(std::size_t n, std::size_t m)
        : topo(build_grid_for_count(n)), init(init_ensemble(topo, m, ParamRanges{}, 1)) {
        model.topo = &topo;
        model.node = &init.params;
        model.seed = 1;
        // Warm up so queues and controls are in their stationary regime.
        MeanFieldEstimate est;
        for (int k = 0; k < 50; ++k) ensemble_step(model, init.state, est);
    }
};

template <bool Parallel>
void BM_EnsembleStep(benchmark::State& state) {
    EnsembleFixture fx(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)));
    MeanFieldEstimate est;
    for (auto _ : state) {
        if constexpr (Parallel) {
            ensemble_step(fx.model, fx.init.state, est);
        } else {
            ensemble_step_reference(fx.model, fx.init.state, est);
        }
        benchmark::DoNotOptimize(fx.init.state.q.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1));
}

template <bool Parallel>
void BM_CoupledStep(benchmark::State& state) {
    const Topology topo = build_grid_for_count(static_cast<std::size_t>(state.range(0)));
    const RoutingWeights w = uniform_routing(topo);
    const NodeParams params = draw_node_params(1, topo.num_nodes(), ParamRanges{});
    const CoupledModel model{&topo, &w, &params, GlobalParams{}, RoutingMode::SenderConserving, 1};
    QueueState q{std::vector<double>(topo.num_nodes(), 0.0), 0};
    for (int k = 0; k < 50; ++k) q = step_coupled(model, q, cooperative_schedule(model, q.q)).state;
    const ControlVector chi = cooperative_schedule(model, q.q);
    for (auto _ : state) {
        StepResult r = Parallel ? step_coupled(model, q, chi) : step_coupled_reference(model, q, chi);
        benchmark::DoNotOptimize(r.state.q.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EnsembleStep<false>)->Name("EnsembleStep/serial")->Args({10000, 10})->Args({100, 100});
BENCHMARK(BM_EnsembleStep<true>)->Name("EnsembleStep/omp")->Args({10000, 10})->Args({100, 100});
BENCHMARK(BM_CoupledStep<false>)->Name("CoupledStep/serial")->Arg(10000);
BENCHMARK(BM_CoupledStep<true>)->Name("CoupledStep/omp")->Arg(10000);

int main(int argc, char** argv) {
    if (const char* env = std::getenv("SIM_THREADS")) set_worker_count(std::atoi(env));
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
