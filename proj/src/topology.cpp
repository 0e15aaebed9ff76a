#include "bpsim/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "bpsim/random.hpp"

namespace bpsim {

Topology Topology::from_edges(std::size_t num_nodes,
                              std::vector<std::pair<NodeId, NodeId>> edges,
                              std::vector<NodeId> sinks) {
    if (num_nodes == 0) throw std::invalid_argument("topology must have at least one node");
    if (sinks.empty()) throw std::invalid_argument("topology must have at least one sink");
    for (const auto& [i, j] : edges) {
        if (i >= num_nodes || j >= num_nodes) {
            throw std::invalid_argument("edge (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") has an endpoint outside [0, " +
                                        std::to_string(num_nodes) + ")");
        }
    }
    std::sort(sinks.begin(), sinks.end());
    sinks.erase(std::unique(sinks.begin(), sinks.end()), sinks.end());
    if (sinks.back() >= num_nodes) {
        throw std::invalid_argument("sink id " + std::to_string(sinks.back()) + " out of range");
    }

    Topology t;
    t.num_nodes_ = num_nodes;
    t.sinks_ = std::move(sinks);
    t.sink_flag_.assign(num_nodes, 0);
    for (NodeId s : t.sinks_) t.sink_flag_[s] = 1;

    const std::size_t e_count = edges.size();
    t.out_off_.assign(num_nodes + 1, 0);
    t.in_off_.assign(num_nodes + 1, 0);
    for (const auto& [i, j] : edges) {
        ++t.out_off_[i + 1];
        ++t.in_off_[j + 1];
    }
    for (std::size_t i = 0; i < num_nodes; ++i) {
        t.out_off_[i + 1] += t.out_off_[i];
        t.in_off_[i + 1] += t.in_off_[i];
    }
    t.out_adj_.resize(e_count);
    t.in_adj_.resize(e_count);
    t.in_to_out_.resize(e_count);
    std::vector<std::size_t> out_fill(t.out_off_.begin(), t.out_off_.end() - 1);
    std::vector<std::size_t> in_fill(t.in_off_.begin(), t.in_off_.end() - 1);
    for (const auto& [i, j] : edges) {
        const std::size_t oe = out_fill[i]++;
        const std::size_t ie = in_fill[j]++;
        t.out_adj_[oe] = j;
        t.in_adj_[ie] = i;
        t.in_to_out_[ie] = oe;
    }
    t.edges_ = std::move(edges);
    return t;
}

Topology build_directed_grid(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0 || rows * cols < 2) {
        throw std::invalid_argument("grid needs rows, cols >= 1 and rows*cols >= 2");
    }
    const std::size_t n = rows * cols;
    if (n > std::size_t{0xffffffff}) throw std::invalid_argument("grid too large for 32-bit node ids");
    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve(rows * (cols - 1) + cols * (rows - 1));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const auto id = static_cast<NodeId>(r * cols + c);
            if (c + 1 < cols) edges.emplace_back(id, id + 1);
            if (r + 1 < rows) edges.emplace_back(id, static_cast<NodeId>(id + cols));
        }
    }
    return Topology::from_edges(n, std::move(edges), {static_cast<NodeId>(n - 1)});
}

Topology build_grid_for_count(std::size_t n) {
    if (n < 2) throw std::invalid_argument("grid needs at least 2 nodes");
    auto rows = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (rows * rows > n) --rows;
    while ((rows + 1) * (rows + 1) <= n) ++rows;
    while (n % rows != 0) --rows;
    return build_directed_grid(rows, n / rows);
}

Topology build_random_dag(std::size_t n, double edge_prob, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("random DAG needs at least 2 nodes");
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        RngStream s(seed, {i, 0, Purpose::Test, 0});
        bool any = false;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (s.next_unit() < edge_prob) {
                edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
                any = true;
            }
        }
        if (!any) {
            const std::size_t j = i + 1 + sample_index(s, n - 1 - i);
            edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
        }
    }
    return Topology::from_edges(n, std::move(edges), {static_cast<NodeId>(n - 1)});
}

std::vector<std::string> validate(const Topology& topo) {
    std::vector<std::string> report;
    const std::size_t n = topo.num_nodes();
    for (const auto& [i, j] : topo.edges()) {
        if (i == j) report.push_back("self-loop at node " + std::to_string(i));
    }
    for (NodeId s : topo.sinks()) {
        if (topo.out_degree(s) != 0) {
            report.push_back("sink out-degree: sink " + std::to_string(s) + " has " +
                             std::to_string(topo.out_degree(s)) + " out-edges");
        }
    }
    // Reverse BFS from every sink over in-edges.
    std::vector<std::uint8_t> reaches(n, 0);
    std::deque<NodeId> frontier(topo.sinks().begin(), topo.sinks().end());
    for (NodeId s : topo.sinks()) reaches[s] = 1;
    while (!frontier.empty()) {
        const NodeId v = frontier.front();
        frontier.pop_front();
        for (NodeId u : topo.in_neighbors(v)) {
            if (!reaches[u]) {
                reaches[u] = 1;
                frontier.push_back(u);
            }
        }
    }
    for (NodeId i = 0; i < n; ++i) {
        if (topo.is_sink(i)) continue;
        if (topo.out_degree(i) == 0) {
            report.push_back("no out-neighbor: non-sink node " + std::to_string(i));
        }
        if (!reaches[i]) {
            report.push_back("unreachable sink: node " + std::to_string(i) +
                             " has no directed path to a sink");
        }
    }
    return report;
}

RoutingWeights::RoutingWeights(const Topology& topo, std::vector<double> out_edge_weights)
    : w_(std::move(out_edge_weights)) {
    if (w_.size() != topo.num_edges()) {
        throw std::invalid_argument("routing weights must have one entry per edge");
    }
    const std::size_t n = topo.num_nodes();
    begin_.resize(n + 1);
    in_begin_.resize(n + 1);
    for (NodeId i = 0; i < n; ++i) {
        begin_[i] = topo.out_edge_begin(i);
        in_begin_[i] = topo.in_edge_begin(i);
    }
    begin_[n] = topo.num_edges();
    in_begin_[n] = topo.num_edges();
    w_in_.resize(w_.size());
    for (std::size_t e = 0; e < w_in_.size(); ++e) w_in_[e] = w_[topo.in_to_out_edge(e)];
}

double RoutingWeights::weight(const Topology& topo, NodeId i, NodeId j) const noexcept {
    const auto nbrs = topo.out_neighbors(i);
    const auto ws = out_weights(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
        if (nbrs[k] == j) return ws[k];
    }
    return 0.0;
}

RoutingWeights uniform_routing(const Topology& topo) {
    std::vector<double> w(topo.num_edges());
    for (NodeId i = 0; i < topo.num_nodes(); ++i) {
        const std::size_t deg = topo.out_degree(i);
        const std::size_t b = topo.out_edge_begin(i);
        for (std::size_t k = 0; k < deg; ++k) w[b + k] = 1.0 / static_cast<double>(deg);
    }
    return RoutingWeights(topo, std::move(w));
}

void write_edge_list(std::ostream& os, const Topology& topo) {
    os << "N " << topo.num_nodes() << " SINKS";
    for (NodeId s : topo.sinks()) os << ' ' << s;
    os << '\n';
    for (const auto& [i, j] : topo.edges()) os << i << ' ' << j << '\n';
}

Topology read_edge_list(std::istream& is) {
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw std::runtime_error("edge list line " + std::to_string(lineno) + ": " + msg);
    };
    // Header, skipping blank lines.
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    std::istringstream header(line);
    std::string tag_n, tag_s;
    long long n = -1;
    if (!(header >> tag_n >> n >> tag_s) || tag_n != "N" || tag_s != "SINKS" || n <= 0) {
        fail("expected header 'N <num_nodes> SINKS <id...>'");
    }
    std::vector<NodeId> sinks;
    long long s = 0;
    while (header >> s) {
        if (s < 0 || s >= n) fail("sink id out of range");
        sinks.push_back(static_cast<NodeId>(s));
    }
    if (!header.eof()) fail("malformed sink list");
    std::vector<std::pair<NodeId, NodeId>> edges;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        long long i = -1, j = -1;
        std::string extra;
        if (!(row >> i >> j) || (row >> extra)) fail("expected 'i j'");
        if (i < 0 || j < 0 || i >= n || j >= n) fail("endpoint out of range");
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
    try {
        return Topology::from_edges(static_cast<std::size_t>(n), std::move(edges), std::move(sinks));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("edge list: ") + e.what());
    }
}

}  // namespace bpsim
