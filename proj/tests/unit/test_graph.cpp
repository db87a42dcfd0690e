#include <vector>

#include "doctest.h"
#include "dgt/errors.hpp"
#include "dgt/graph.hpp"

using namespace dgt;

TEST_CASE("graph: build_graph validates its input") {
    CHECK_THROWS_AS(build_graph(2, {{0, 0}, {0, 1}, {1, 0}}), SelfEdge);
    CHECK_THROWS_AS(build_graph(2, {{0, 2}, {1, 0}}), IndexOutOfRange);
    CHECK_THROWS_AS(build_graph(2, {{0, -1}, {1, 0}}), IndexOutOfRange);
    // 0 -> 1 only: no way back.
    CHECK_THROWS_AS(build_graph(2, {{1, 0}}), NotStronglyConnected);
    // Two strongly connected components with a one-way bridge.
    CHECK_THROWS_AS(build_graph(4, {{1, 0}, {0, 1}, {3, 2}, {2, 3}, {2, 1}}),
                    NotStronglyConnected);
}

TEST_CASE("graph: closure ordering is neighbors ascending, self last") {
    // Node 0 receives from 2 and 1; its closure must read 1, 2, 0.
    DirectedGraph g = build_graph(3, {{0, 2}, {0, 1}, {1, 0}, {2, 1}, {1, 2}, {2, 0}});
    CHECK(g.in_closure(0) == std::vector<int>{1, 2, 0});
    CHECK(g.in_neighbors(0) == std::vector<int>{1, 2});
    CHECK(g.out_closure(1) == std::vector<int>{0, 2, 1});
    CHECK(g.in_pos(0, 2) == 1);
    CHECK(g.in_pos(0, 0) == 2);
    CHECK(g.in_pos(0, 5) == -1);
    CHECK(g.out_pos(1, 0) == 0);
    CHECK(g.out_pos(1, 1) == 2);
    CHECK(g.has_edge(0, 1));
    CHECK(!g.has_edge(1, 1));
}

TEST_CASE("graph: ring sends to the next two nodes") {
    DirectedGraph g = ring_graph(5);
    CHECK(g.n() == 5);
    for (int i = 0; i < 5; ++i) {
        CHECK(g.has_edge((i + 1) % 5, i));
        CHECK(g.has_edge((i + 2) % 5, i));
        CHECK(g.out_neighbors(i).size() == 2);
        CHECK(g.in_neighbors(i).size() == 2);
    }
    CHECK(g.edges().size() == 10);
    CHECK(g.max_in_degree() == 2);
    CHECK(g.max_out_degree() == 2);

    DirectedGraph big = ring_graph(100);
    CHECK(big.n() == 100);
    CHECK(big.edges().size() == 200);
    CHECK(big.max_in_degree() == 2);
}

TEST_CASE("graph: bundled topologies") {
    SUBCASE("fig1b is the 5-cycle with three chords") {
        DirectedGraph g = fig1b_graph();
        CHECK(g.n() == 5);
        // 1-based: cycle 1->2->3->4->5->1 plus 1->3, 3->5, 5->2.
        std::vector<std::pair<int, int>> want = {
            {1, 0}, {2, 1}, {3, 2}, {4, 3}, {0, 4}, {2, 0}, {4, 2}, {1, 4}};
        for (auto [r, s] : want) CHECK(g.has_edge(r, s));
        CHECK(g.edges().size() == want.size());
    }

    SUBCASE("cycle3 and pair") {
        DirectedGraph c = cycle3_graph();
        CHECK(c.n() == 3);
        CHECK(c.has_edge(1, 0));
        CHECK(c.has_edge(2, 1));
        CHECK(c.has_edge(0, 2));
        CHECK(c.edges().size() == 3);
        CHECK(c.max_in_degree() == 1);

        DirectedGraph p = pair_graph();
        CHECK(p.n() == 2);
        CHECK(p.has_edge(0, 1));
        CHECK(p.has_edge(1, 0));
        CHECK(p.in_closure(0) == std::vector<int>{1, 0});
    }
}

TEST_CASE("graph: hash identifies the topology") {
    CHECK(ring_graph(5).hash() == ring_graph(5).hash());
    CHECK(ring_graph(5).hash() != ring_graph(6).hash());
    CHECK(cycle3_graph().hash() != fig1b_graph().hash());
    // Edge insertion order must not matter.
    DirectedGraph a = build_graph(3, {{1, 0}, {2, 1}, {0, 2}});
    DirectedGraph b = build_graph(3, {{0, 2}, {1, 0}, {2, 1}});
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() == cycle3_graph().hash());
}

TEST_CASE("graph: default instance is an empty placeholder") {
    DirectedGraph g;
    CHECK(g.n() == 0);
    CHECK(g.edges().empty());
}
