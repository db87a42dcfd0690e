#pragma once
#include <cstdint>
#include <utility>
#include <vector>

namespace dgt {

// Immutable directed communication topology. An edge (i, j) means node j can
// send to node i, i.e. j is an in-neighbor of i and i is an out-neighbor of
// j. Indices are 0-based internally; all user-facing output is 1-based.
//
// "Closure" below always means the neighbor set plus the node itself, stored
// with neighbors ascending and the node itself last. That ordering is a
// protocol-wide convention: weight draws and update accumulations both walk
// closures in this order, which is what makes replay bit-exact.
class DirectedGraph {
public:
    // An empty placeholder (n = 0); every usable graph comes from build_graph.
    DirectedGraph() = default;

    int n() const { return n_; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    const std::vector<int>& in_neighbors(int i) const { return in_[i]; }
    const std::vector<int>& out_neighbors(int j) const { return out_[j]; }
    const std::vector<int>& in_closure(int i) const { return in_closure_[i]; }
    const std::vector<int>& out_closure(int j) const { return out_closure_[j]; }

    // Position of sender j within in_closure(i), or -1 when j is not there.
    int in_pos(int i, int j) const;
    // Position of receiver i within out_closure(j), or -1.
    int out_pos(int j, int i) const;

    bool has_edge(int receiver, int sender) const;

    int max_in_degree() const;
    int max_out_degree() const;

    // FNV-1a over (n, sorted edge list); identifies the topology in trace
    // metadata and information-set comparisons.
    std::uint64_t hash() const;

    friend DirectedGraph build_graph(int n, std::vector<std::pair<int, int>> edges);

private:
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;  // sorted (receiver, sender)
    std::vector<std::vector<int>> in_, out_, in_closure_, out_closure_;
};

// Validates indices, rejects self edges, checks strong connectivity by
// running a BFS from every node, and precomputes the neighbor indexes.
DirectedGraph build_graph(int n, std::vector<std::pair<int, int>> edges);

// Ring of n nodes where node i sends to i+1 and i+2 (mod n).
DirectedGraph ring_graph(int n);

// The 5-node benchmark topology used by the bundled experiment configs: the
// cycle 1->2->3->4->5->1 plus chords 1->3, 3->5, 5->2 (1-based labels).
DirectedGraph fig1b_graph();

// Directed 3-cycle 1->2->3->1.
DirectedGraph cycle3_graph();

// Two nodes exchanging in both directions.
DirectedGraph pair_graph();

}  // namespace dgt
