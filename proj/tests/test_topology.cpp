#include <doctest.h>

#include <algorithm>
#include <stdexcept>
#include <cmath>
#include <sstream>

#include "bpsim/random.hpp"
#include "bpsim/topology.hpp"

using namespace bpsim;

namespace {

std::vector<NodeId> as_vec(std::span<const NodeId> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("10x10 grid") {
    const Topology t = build_directed_grid(10, 10);
    CHECK(t.num_nodes() == 100);
    CHECK(t.sinks() == std::vector<NodeId>{99});
    CHECK(as_vec(t.out_neighbors(0)) == std::vector<NodeId>{1, 10});
    CHECK(as_vec(t.out_neighbors(9)) == std::vector<NodeId>{19});
    CHECK(as_vec(t.out_neighbors(90)) == std::vector<NodeId>{91});
    CHECK(t.out_degree(99) == 0);
    CHECK(t.in_degree(0) == 0);
    CHECK(as_vec(t.in_neighbors(99)) == std::vector<NodeId>{89, 98});
}

TEST_CASE("small grids") {
    const Topology line = build_directed_grid(1, 2);
    CHECK(line.num_edges() == 1);
    CHECK(as_vec(line.out_neighbors(0)) == std::vector<NodeId>{1});
    CHECK(line.is_sink(1));

    const Topology sq = build_directed_grid(2, 2);
    CHECK(as_vec(sq.out_neighbors(0)) == std::vector<NodeId>{1, 2});
    CHECK(as_vec(sq.out_neighbors(1)) == std::vector<NodeId>{3});
    CHECK(as_vec(sq.out_neighbors(2)) == std::vector<NodeId>{3});
    CHECK(as_vec(sq.in_neighbors(3)) == std::vector<NodeId>{1, 2});

    CHECK_THROWS_AS(build_directed_grid(1, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_directed_grid(0, 5), std::invalid_argument);
}

TEST_CASE("every grid up to 20x20 is valid") {
    for (std::size_t r = 1; r <= 20; ++r) {
        for (std::size_t c = 1; c <= 20; ++c) {
            if (r * c < 2) continue;
            CAPTURE(r);
            CAPTURE(c);
            const Topology t = build_directed_grid(r, c);
            REQUIRE(t.num_nodes() == r * c);
            CHECK(t.num_edges() == r * (c - 1) + c * (r - 1));
            CHECK(t.sinks() == std::vector<NodeId>{static_cast<NodeId>(r * c - 1)});
            CHECK(validate(t).empty());
        }
    }
}

TEST_CASE("in and out adjacency agree with the edge list") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Topology t = build_random_dag(12, 0.3, seed);
        CHECK(validate(t).empty());
        for (auto [i, j] : t.edges()) {
            const auto out = t.out_neighbors(i);
            const auto in = t.in_neighbors(j);
            CHECK(std::find(out.begin(), out.end(), j) != out.end());
            CHECK(std::find(in.begin(), in.end(), i) != in.end());
        }
        std::size_t out_total = 0, in_total = 0;
        for (NodeId i = 0; i < t.num_nodes(); ++i) {
            out_total += t.out_degree(i);
            in_total += t.in_degree(i);
        }
        CHECK(out_total == t.num_edges());
        CHECK(in_total == t.num_edges());
    }
}

TEST_CASE("validate reports structural violations") {
    // Node 1 has no way out.
    const Topology isolated = Topology::from_edges(3, {{0, 2}}, {2});
    const auto v1 = validate(isolated);
    REQUIRE_FALSE(v1.empty());
    CHECK(std::any_of(v1.begin(), v1.end(), [](const std::string& s) { return s.rfind("no out-neighbor", 0) == 0; }));

    const Topology sink_out = Topology::from_edges(3, {{0, 1}, {1, 2}, {2, 0}}, {2});
    const auto v2 = validate(sink_out);
    CHECK(std::any_of(v2.begin(), v2.end(), [](const std::string& s) { return s.rfind("sink out-degree", 0) == 0; }));

    const Topology loop = Topology::from_edges(2, {{0, 0}, {0, 1}}, {1});
    const auto v3 = validate(loop);
    CHECK(std::any_of(v3.begin(), v3.end(), [](const std::string& s) { return s.rfind("self-loop", 0) == 0; }));

    // 0 <-> 1 cycle never reaches the sink 2.
    const Topology cycle = Topology::from_edges(3, {{0, 1}, {1, 0}}, {2});
    const auto v4 = validate(cycle);
    CHECK(std::any_of(v4.begin(), v4.end(), [](const std::string& s) { return s.rfind("unreachable sink", 0) == 0; }));

    CHECK_THROWS_AS(Topology::from_edges(2, {{0, 5}}, {1}), std::invalid_argument);
    CHECK_THROWS_AS(Topology::from_edges(2, {{0, 1}}, {}), std::invalid_argument);
    CHECK_THROWS_AS(Topology::from_edges(2, {{0, 1}}, {7}), std::invalid_argument);
}

TEST_CASE("uniform routing weights") {
    const Topology t = build_directed_grid(10, 10);
    const RoutingWeights w = uniform_routing(t);
    CHECK(w.weight(t, 0, 1) == 0.5);
    CHECK(w.weight(t, 0, 10) == 0.5);
    CHECK(w.weight(t, 9, 19) == 1.0);
    CHECK(w.weight(t, 0, 11) == 0.0);

    RngStream s(8, {});
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t r = 1 + sample_index(s, 15), c = 2 + sample_index(s, 15);
        const Topology g = build_directed_grid(r, c);
        const RoutingWeights gw = uniform_routing(g);
        for (NodeId i = 0; i < g.num_nodes(); ++i) {
            if (g.is_sink(i)) continue;
            double sum = 0.0;
            for (double x : gw.out_weights(i)) sum += x;
            CHECK(std::fabs(sum - 1.0) <= 1e-12);
        }
        // in_weights mirror the sender-side weights edge by edge.
        for (NodeId i = 0; i < g.num_nodes(); ++i) {
            const auto senders = g.in_neighbors(i);
            const auto win = gw.in_weights(i);
            for (std::size_t k = 0; k < senders.size(); ++k) CHECK(win[k] == gw.weight(g, senders[k], i));
        }
    }
}

TEST_CASE("near-square grids by node count") {
    const Topology a = build_grid_for_count(250000);
    CHECK(a.num_nodes() == 250000);
    CHECK(as_vec(a.out_neighbors(0)) == std::vector<NodeId>{1, 500});
    const Topology b = build_grid_for_count(7);
    CHECK(b.num_nodes() == 7);
    CHECK(validate(b).empty());
    CHECK(build_grid_for_count(100).num_edges() == build_directed_grid(10, 10).num_edges());
}

TEST_CASE("edge list round trip") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Topology t = build_random_dag(9, 0.4, seed);
        std::stringstream ss;
        write_edge_list(ss, t);
        const Topology back = read_edge_list(ss);
        CHECK(back.num_nodes() == t.num_nodes());
        CHECK(back.sinks() == t.sinks());
        CHECK(back.edges() == t.edges());
    }
    std::istringstream bad("N 3 SINKS 2\n0 1\n1 x\n");
    CHECK_THROWS_WITH_AS(read_edge_list(bad), doctest::Contains("line 3"), std::runtime_error);
    std::istringstream no_header("0 1\n");
    CHECK_THROWS_AS(read_edge_list(no_header), std::runtime_error);
}
