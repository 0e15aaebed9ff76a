#pragma once

// Directed network graph with designated sinks.
//
// Adjacency is stored twice in CSR form: out-neighbors (where a node sends
// data; the set used by backpressure differentials and departures) and
// in-neighbors (whose departures a node receives). Node ids are dense
// 0..N-1 so per-node state lives in flat arrays.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bpsim {

using NodeId = std::uint32_t;

class Topology {
public:
    Topology() = default;

    /// Builds adjacency from an edge list. Throws std::invalid_argument if an
    /// endpoint or sink id is out of range or the sink set is empty. Other
    /// structural problems (self-loops, unreachable sinks, ...) are accepted
    /// here and reported by validate().
    static Topology from_edges(std::size_t num_nodes,
                               std::vector<std::pair<NodeId, NodeId>> edges,
                               std::vector<NodeId> sinks);

    std::size_t num_nodes() const noexcept { return num_nodes_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }
    const std::vector<NodeId>& sinks() const noexcept { return sinks_; }
    bool is_sink(NodeId i) const noexcept { return sink_flag_[i] != 0; }
    std::size_t num_non_sinks() const noexcept { return num_nodes_ - sinks_.size(); }

    std::span<const NodeId> out_neighbors(NodeId i) const noexcept {
        return {out_adj_.data() + out_off_[i], out_adj_.data() + out_off_[i + 1]};
    }
    std::span<const NodeId> in_neighbors(NodeId i) const noexcept {
        return {in_adj_.data() + in_off_[i], in_adj_.data() + in_off_[i + 1]};
    }
    std::size_t out_degree(NodeId i) const noexcept { return out_off_[i + 1] - out_off_[i]; }
    std::size_t in_degree(NodeId i) const noexcept { return in_off_[i + 1] - in_off_[i]; }

    // CSR offsets, exposed for edge-indexed arrays (RoutingWeights).
    std::size_t out_edge_begin(NodeId i) const noexcept { return out_off_[i]; }
    std::size_t in_edge_begin(NodeId i) const noexcept { return in_off_[i]; }
    /// For in-edge slot e (receiver-side), the index of the same edge in the
    /// out-edge arrays.
    std::size_t in_to_out_edge(std::size_t e) const noexcept { return in_to_out_[e]; }

private:
    std::size_t num_nodes_ = 0;
    std::vector<std::pair<NodeId, NodeId>> edges_;
    std::vector<NodeId> sinks_;
    std::vector<std::uint8_t> sink_flag_;
    std::vector<std::size_t> out_off_, in_off_;
    std::vector<NodeId> out_adj_, in_adj_;
    std::vector<std::size_t> in_to_out_;
};

/// rows x cols grid in row-major order. Every node links to its right and
/// lower neighbour when they exist; the last node is the unique sink.
Topology build_directed_grid(std::size_t rows, std::size_t cols);

/// Near-square grid with exactly n nodes: rows is the largest divisor of n
/// not exceeding sqrt(n).
Topology build_grid_for_count(std::size_t n);

/// Random DAG on n >= 2 nodes: edge i -> j (i < j) with probability
/// edge_prob, node n-1 is the sink, and every other node gets at least one
/// out-edge so all of them reach the sink.
Topology build_random_dag(std::size_t n, double edge_prob, std::uint64_t seed);

/// Human-readable invariant violations; empty iff the topology is valid.
/// Violation strings start with a stable tag: "self-loop", "no out-neighbor",
/// "unreachable sink", "sink out-degree".
std::vector<std::string> validate(const Topology& topo);

/// Per-edge routing fractions aligned with the topology's out-edge CSR.
class RoutingWeights {
public:
    RoutingWeights() = default;
    RoutingWeights(const Topology& topo, std::vector<double> out_edge_weights);

    /// weight of the k-th out-edge of i (same order as out_neighbors(i)).
    std::span<const double> out_weights(NodeId i) const noexcept {
        return {w_.data() + begin_[i], w_.data() + begin_[i + 1]};
    }
    /// weight of the edge j -> i for each j in in_neighbors(i), same order.
    std::span<const double> in_weights(NodeId i) const noexcept {
        return {w_in_.data() + in_begin_[i], w_in_.data() + in_begin_[i + 1]};
    }
    /// Linear lookup; returns 0 when (i, j) is not an edge.
    double weight(const Topology& topo, NodeId i, NodeId j) const noexcept;

private:
    std::vector<double> w_, w_in_;
    std::vector<std::size_t> begin_, in_begin_;
};

/// 1/out_degree(i) on every out-edge of i.
RoutingWeights uniform_routing(const Topology& topo);

/// Plain-text edge list: first line "N <n> SINKS <id...>", then "i j" per edge.
void write_edge_list(std::ostream& os, const Topology& topo);
/// Throws std::runtime_error with a line number on malformed input.
Topology read_edge_list(std::istream& is);

}  // namespace bpsim
