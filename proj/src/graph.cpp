#include "dgt/graph.hpp"

#include <algorithm>
#include <queue>
#include <string>

#include "dgt/errors.hpp"

namespace dgt {

int DirectedGraph::in_pos(int i, int j) const {
    const auto& c = in_closure_[i];
    for (int p = 0; p < static_cast<int>(c.size()); ++p)
        if (c[p] == j) return p;
    return -1;
}

int DirectedGraph::out_pos(int j, int i) const {
    const auto& c = out_closure_[j];
    for (int p = 0; p < static_cast<int>(c.size()); ++p)
        if (c[p] == i) return p;
    return -1;
}

bool DirectedGraph::has_edge(int receiver, int sender) const {
    return std::binary_search(edges_.begin(), edges_.end(),
                              std::make_pair(receiver, sender));
}

int DirectedGraph::max_in_degree() const {
    std::size_t m = 0;
    for (const auto& v : in_) m = std::max(m, v.size());
    return static_cast<int>(m);
}

int DirectedGraph::max_out_degree() const {
    std::size_t m = 0;
    for (const auto& v : out_) m = std::max(m, v.size());
    return static_cast<int>(m);
}

std::uint64_t DirectedGraph::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t w) {
        for (int b = 0; b < 8; ++b) {
            h ^= (w >> (8 * b)) & 0xFF;
            h *= 1099511628211ull;
        }
    };
    mix(static_cast<std::uint64_t>(n_));
    for (const auto& [i, j] : edges_) {
        mix(static_cast<std::uint64_t>(i));
        mix(static_cast<std::uint64_t>(j));
    }
    return h;
}

DirectedGraph build_graph(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 1) throw TooSmall("graph needs at least one node, got " + std::to_string(n));
    for (const auto& [i, j] : edges) {
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw IndexOutOfRange("edge (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ") outside 1.." + std::to_string(n));
        if (i == j) throw SelfEdge(i);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    DirectedGraph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    g.in_.assign(n, {});
    g.out_.assign(n, {});
    for (const auto& [i, j] : g.edges_) {
        g.in_[i].push_back(j);
        g.out_[j].push_back(i);
    }
    for (int v = 0; v < n; ++v) {
        std::sort(g.in_[v].begin(), g.in_[v].end());
        std::sort(g.out_[v].begin(), g.out_[v].end());
    }

    // Strong connectivity: BFS along the send direction from every source.
    std::vector<char> seen(n);
    for (int s = 0; s < n; ++s) {
        std::fill(seen.begin(), seen.end(), 0);
        std::queue<int> q;
        q.push(s);
        seen[s] = 1;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (int w : g.out_[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    q.push(w);
                }
        }
        for (int t = 0; t < n; ++t)
            if (!seen[t]) throw NotStronglyConnected(s + 1, t + 1);
    }

    g.in_closure_.assign(n, {});
    g.out_closure_.assign(n, {});
    for (int v = 0; v < n; ++v) {
        g.in_closure_[v] = g.in_[v];
        g.in_closure_[v].push_back(v);  // self last, neighbors ascending
        g.out_closure_[v] = g.out_[v];
        g.out_closure_[v].push_back(v);
    }
    return g;
}

DirectedGraph ring_graph(int n) {
    if (n < 3) throw TooSmall("ring graph needs n >= 3, got " + std::to_string(n));
    std::vector<std::pair<int, int>> edges;
    edges.reserve(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        edges.emplace_back((i + 1) % n, i);
        edges.emplace_back((i + 2) % n, i);
    }
    return build_graph(n, std::move(edges));
}

DirectedGraph fig1b_graph() {
    // (receiver, sender), 0-based
    return build_graph(5, {{1, 0}, {2, 1}, {3, 2}, {4, 3}, {0, 4},
                           {2, 0}, {4, 2}, {1, 4}});
}

DirectedGraph cycle3_graph() {
    return build_graph(3, {{1, 0}, {2, 1}, {0, 2}});
}

DirectedGraph pair_graph() {
    return build_graph(2, {{0, 1}, {1, 0}});
}

}  // namespace dgt
