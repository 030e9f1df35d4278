#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <functional>

#include "cmp/rng.hpp"
#include "cmp/specgraph.hpp"
#include "doctest.h"

using namespace cmp::specgraph;
using cmp::Rng;

namespace {

// Exhaustive chordless-cycle search for small graphs (the independent check
// the MCS implementation is validated against).
bool brute_force_chordal(const SpecGraph& g) {
    const int n = g.order();
    std::vector<int> path;
    std::vector<bool> used(n, false);

    // Enumerate simple cycles of length >= 4 and test chordlessness.
    std::function<bool(int, int)> extend = [&](int start, int v) {
        for (int u = 0; u < n; ++u) {
            if (!g.has_edge(v, u)) continue;
            if (u == start && path.size() >= 4) {
                bool chordless = true;
                for (size_t i = 0; i < path.size() && chordless; ++i)
                    for (size_t j = i + 1; j < path.size() && chordless; ++j) {
                        const bool consecutive =
                            j == i + 1 || (i == 0 && j == path.size() - 1);
                        if (!consecutive && g.has_edge(path[i], path[j])) chordless = false;
                    }
                if (chordless) return true;
            }
            if (u <= start || used[u]) continue;
            used[u] = true;
            path.push_back(u);
            if (extend(start, u)) return true;
            path.pop_back();
            used[u] = false;
        }
        return false;
    };

    for (int start = 0; start < n; ++start) {
        path = {start};
        std::fill(used.begin(), used.end(), false);
        used[start] = true;
        if (extend(start, start)) return false;
    }
    return true;
}

bool cycle_is_chordless(const SpecGraph& g, const std::vector<int>& cycle) {
    if (cycle.size() < 4) return false;
    for (size_t i = 0; i < cycle.size(); ++i) {
        if (!g.has_edge(cycle[i], cycle[(i + 1) % cycle.size()])) return false;
        for (size_t j = i + 2; j < cycle.size(); ++j) {
            const bool consecutive = (i == 0 && j == cycle.size() - 1);
            if (!consecutive && g.has_edge(cycle[i], cycle[j])) return false;
        }
    }
    return true;
}

SpecGraph complete_graph(int n) {
    SpecGraph g(n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    return g;
}

}  // namespace

TEST_CASE("spec_graph translates the mask") {
    PartialMatrix full(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) full.set(i, j, 1.0);
    CHECK(spec_graph(full) == complete_graph(3));

    PartialMatrix diag(4);
    CHECK(spec_graph(diag).num_edges() == 0);
}

TEST_CASE("arrowhead_spec_graph shapes") {
    // n1=0: S disjoint cliques.
    const auto g0 = arrowhead_spec_graph(0, 2, 2);
    CHECK(g0.num_edges() == 2);
    CHECK(!g0.has_edge(0, 2));

    // n1=1, n2=1, S=2: star on 3 vertices, 2 edges.
    const auto g1 = arrowhead_spec_graph(1, 1, 2);
    CHECK(g1.num_edges() == 2);
    CHECK(g1.has_edge(0, 1));
    CHECK(g1.has_edge(0, 2));
    CHECK(!g1.has_edge(1, 2));

    // n1=2, n2=2, S=2: 1 internal + 8 cross + 2 intra-group edges.
    const auto g2 = arrowhead_spec_graph(2, 2, 2);
    CHECK(g2.order() == 6);
    CHECK(g2.num_edges() == 11);

    CHECK_THROWS_AS(arrowhead_spec_graph(1, 0, 2), std::invalid_argument);
}

TEST_CASE("is_chordal: canonical cases") {
    SpecGraph c4(4);
    c4.add_edge(0, 1);
    c4.add_edge(1, 2);
    c4.add_edge(2, 3);
    c4.add_edge(3, 0);
    const auto r = is_chordal(c4);
    CHECK(!r.chordal);
    CHECK(r.chordless_cycle.size() == 4);
    CHECK(cycle_is_chordless(c4, r.chordless_cycle));

    for (int n = 1; n <= 6; ++n) CHECK(is_chordal(complete_graph(n)).chordal);
}

TEST_CASE("perfect elimination certificate is a valid PEO") {
    const auto g = arrowhead_spec_graph(2, 2, 3);
    const auto r = is_chordal(g);
    REQUIRE(r.chordal);
    REQUIRE(static_cast<int>(r.elimination_order.size()) == g.order());
    // Later neighbors of each vertex must form a clique.
    std::vector<int> pos(g.order());
    for (int i = 0; i < g.order(); ++i) pos[r.elimination_order[i]] = i;
    for (int i = 0; i < g.order(); ++i) {
        const int v = r.elimination_order[i];
        std::vector<int> later;
        for (int u = 0; u < g.order(); ++u)
            if (g.has_edge(v, u) && pos[u] > i) later.push_back(u);
        for (size_t a = 0; a < later.size(); ++a)
            for (size_t b = a + 1; b < later.size(); ++b)
                CHECK(g.has_edge(later[a], later[b]));
    }
}

TEST_CASE("arrowhead graphs are chordal on the full grid") {
    for (int n1 = 0; n1 <= 3; ++n1)
        for (int n2 = 1; n2 <= 3; ++n2)
            for (int s = 1; s <= 4; ++s) CHECK(is_chordal(arrowhead_spec_graph(n1, n2, s)).chordal);
}

TEST_CASE("block-clique matches the arrowhead lemma") {
    CHECK(is_block_clique(arrowhead_spec_graph(1, 2, 3)));
    CHECK(!is_block_clique(arrowhead_spec_graph(2, 1, 2)));

    // Trees are block-clique (every block is an edge).
    SpecGraph tree(6);
    tree.add_edge(0, 1);
    tree.add_edge(0, 2);
    tree.add_edge(2, 3);
    tree.add_edge(2, 4);
    tree.add_edge(4, 5);
    CHECK(is_block_clique(tree));

    // Lemma grid: for S >= 2 block-clique iff n1 <= 1; a single scenario
    // yields a complete graph, which is always block-clique.
    for (int n1 = 0; n1 <= 3; ++n1)
        for (int n2 = 1; n2 <= 3; ++n2)
            for (int s = 1; s <= 4; ++s) {
                const bool bc = is_block_clique(arrowhead_spec_graph(n1, n2, s));
                if (s == 1)
                    CHECK(bc);
                else
                    CHECK(bc == (n1 <= 1));
            }
}

TEST_CASE("is_chordal agrees with brute force on random small graphs") {
    Rng rng(1234);
    for (int t = 0; t < 300; ++t) {
        const int n = 4 + rng.index(4);  // up to 7 vertices
        SpecGraph g(n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (rng.u01() < 0.45) g.add_edge(i, j);
        const auto r = is_chordal(g);
        CHECK(r.chordal == brute_force_chordal(g));
        if (!r.chordal) {
            REQUIRE(r.chordless_cycle.size() >= 4);
            CHECK(cycle_is_chordless(g, r.chordless_cycle));
        }
    }
}
