#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "bpsim/engine.hpp"
#include "bpsim/format.hpp"

using namespace bpsim;

namespace {

SimConfig coupled(std::size_t rows, std::size_t cols, std::uint64_t steps) {
    SimConfig c;
    c.mode = SimMode::Coupled;
    c.rows = rows;
    c.cols = cols;
    c.steps = steps;
    return c;
}

Trajectory series(const std::vector<double>& values) {
    Trajectory t;
    for (std::size_t k = 0; k < values.size(); ++k) {
        TrajectoryRecord r;
        r.step = k;
        r.mean_queue = values[k];
        t.records.push_back(r);
    }
    return t;
}

}  // namespace

TEST_CASE("zero steps gives only the initial record") {
    for (SimMode mode : {SimMode::Coupled, SimMode::MeanField}) {
        SimConfig c;
        c.mode = mode;
        c.steps = 0;
        const Trajectory t = run(c);
        REQUIRE(t.records.size() == 1);
        CHECK(t.records[0].step == 0);
        CHECK(t.records[0].mean_queue == 0.0);
        CHECK(t.records[0].sink_throughput == 0.0);
    }
}

TEST_CASE("records cover every step") {
    SimConfig c;
    c.steps = 50;
    c.samples = 10;
    const Trajectory t = run(c);
    REQUIRE(t.records.size() == 51);
    for (std::size_t k = 0; k < t.records.size(); ++k) CHECK(t.records[k].step == k);
    CHECK(t.stats.invariant_violations == 0);
}

TEST_CASE("runs are deterministic for a seed") {
    for (SimMode mode : {SimMode::Coupled, SimMode::MeanField}) {
        SimConfig c;
        c.mode = mode;
        c.steps = 200;
        c.samples = 20;
        c.seed = 99;
        const std::string a = trajectory_csv(run(c), false);
        CHECK(a == trajectory_csv(run(c), false));
        c.seed = 100;
        CHECK(a != trajectory_csv(run(c), false));
    }
}

TEST_CASE("with every node idle queues grow at the retained arrival rate") {
    SimConfig c = coupled(10, 10, 1000);
    c.scheduler = SchedulerKind::AlwaysOff;
    const Trajectory t = run(c);
    // (1 - beta) * E[lambda] = 0.3 * 0.3 per step
    const double rate = t.records.back().mean_queue / 1000.0;
    CHECK(std::fabs(rate - 0.09) <= 0.009);
    CHECK(t.stats.truncations == 0);
    CHECK(t.records.back().sink_throughput == 0.0);
    for (std::size_t k = 0; k < t.records.size(); ++k) CHECK(t.records[k].active_fraction == 0.0);
}

TEST_CASE("coupled accounting at beta = 0") {
    SimConfig c = coupled(8, 8, 500);
    c.beta = 0.0;
    const Trajectory t = run(c);
    double held = 0.0;
    for (double v : t.final_queue) held += v;
    CHECK(std::fabs(held + t.records.back().sink_throughput - t.stats.total_arrivals) <= 1e-6);
}

TEST_CASE("receiver-normalized routing runs and keeps invariants") {
    SimConfig c = coupled(6, 6, 300);
    c.routing = RoutingMode::ReceiverNormalized;
    const Trajectory t = run(c);
    CHECK(t.stats.invariant_violations == 0);
    CHECK(t.records.back().mean_queue > 0.0);
}

TEST_CASE("stabilization statistic") {
    CHECK(stabilization_stat(series(std::vector<double>(301, 4.0)), 100) == 0.0);
    // Linear ramp q_k = k over K = 1000: windows differ by w, overall mean K/2.
    std::vector<double> ramp(1001);
    for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = static_cast<double>(k);
    CHECK(stabilization_stat(series(ramp), 100) == doctest::Approx(2.0 * 100 / 1000.0));
    CHECK_THROWS_AS(stabilization_stat(series(std::vector<double>(150, 1.0)), 100), std::invalid_argument);
    CHECK_NOTHROW(stabilization_stat(series(std::vector<double>(201, 1.0)), 100));
}

TEST_CASE("plateau value") {
    std::vector<double> v(401, 1.0);
    for (std::size_t k = 301; k <= 400; ++k) v[k] = 3.0;
    CHECK(plateau_value(series(v)) == 3.0);
    CHECK(plateau_value(series({0.0, 7.0})) == 7.0);
    CHECK(plateau_value(series({0.0, 2.0, 4.0, 6.0, 8.0})) == 7.0);
}

TEST_CASE("cooperative scheduling beats idling") {
    SimConfig coop = coupled(10, 10, 1000);
    SimConfig off = coop;
    off.scheduler = SchedulerKind::AlwaysOff;
    const ComparisonTable table = compare_runs({coop, off}, {"coop", "off"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.steps.size() == 1001);
    CHECK(table.mean_queue[0].back() < table.mean_queue[1].back());
    REQUIRE(table.rows[0].stabilization);
    CHECK(*table.rows[0].stabilization < 0.10);
    CHECK(table.rows[0].throughput > 0.0);
}

TEST_CASE("compare_runs checks its inputs") {
    SimConfig a = coupled(4, 4, 100);
    SimConfig b = coupled(4, 5, 100);
    CHECK_THROWS_AS(compare_runs({a, b}, {"a", "b"}), std::invalid_argument);
    b = coupled(4, 4, 120);
    CHECK_THROWS_AS(compare_runs({a, b}, {"a", "b"}), std::invalid_argument);
    CHECK_THROWS_AS(compare_runs({a}, {"a"}), std::invalid_argument);
    CHECK_THROWS_AS(compare_runs({a, a}, {"a"}), std::invalid_argument);
    const ComparisonTable same = compare_runs({a, a}, {"x", "y"});
    CHECK(same.mean_queue[0] == same.mean_queue[1]);
    CHECK_FALSE(same.rows[0].stabilization);
}

TEST_CASE("both estimators settle on the default grid") {
    for (EstimatorMode e : {EstimatorMode::PerSample, EstimatorMode::EnsembleMean}) {
        SimConfig c;
        c.estimator = e;
        c.samples = 30;
        const Trajectory t = run(c);
        CHECK(stabilization_stat(t, 100) < 0.10);
        CHECK(t.stats.invariant_violations == 0);
    }
}

TEST_CASE("per-node tracking samples non-sink nodes") {
    SimConfig c = coupled(10, 10, 20);
    c.per_node = true;
    Trajectory t = run(c);
    CHECK(t.tracked_nodes.size() == 99);
    CHECK(t.per_node.size() == 21 * 99);
    c.node_sample = 10;
    t = run(c);
    REQUIRE(t.tracked_nodes.size() == 10);
    for (NodeId i : t.tracked_nodes) CHECK(i != 99);
}

TEST_CASE("worker count does not change a run") {
    SimConfig c;
    c.steps = 100;
    c.samples = 16;
    set_worker_count(1);
    const std::string one = trajectory_csv(run(c), false);
    set_worker_count(4);
    const std::string four = trajectory_csv(run(c), false);
    set_worker_count(0);
    CHECK(one == four);
}
