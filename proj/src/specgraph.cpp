#include "cmp/specgraph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace cmp::specgraph {

using linalg::SymMat;

PartialMatrix::PartialMatrix(int order)
    : values_(order), mask_(SymMat::svec_len(order), 0) {
    for (int i = 0; i < order; ++i) mask_[SymMat::svec_index(i, i)] = 1;
}

bool PartialMatrix::specified(int i, int j) const {
    if (i > j) std::swap(i, j);
    return mask_[SymMat::svec_index(i, j)] != 0;
}

void PartialMatrix::set(int i, int j, double v) {
    if (!std::isfinite(v)) throw std::invalid_argument("PartialMatrix: non-finite value");
    values_.set(i, j, v);
    if (i > j) std::swap(i, j);
    mask_[SymMat::svec_index(i, j)] = 1;
}

void PartialMatrix::unspecify(int i, int j) {
    if (i == j) throw std::invalid_argument("PartialMatrix: diagonal is always specified");
    if (i > j) std::swap(i, j);
    mask_[SymMat::svec_index(i, j)] = 0;
    values_.set(i, j, 0.0);
}

void SpecGraph::add_edge(int u, int v) {
    if (u == v) return;  // no self-loops
    adj_[static_cast<size_t>(u) * n_ + v] = 1;
    adj_[static_cast<size_t>(v) * n_ + u] = 1;
}

int SpecGraph::num_edges() const {
    int e = 0;
    for (int u = 0; u < n_; ++u)
        for (int v = u + 1; v < n_; ++v)
            if (has_edge(u, v)) ++e;
    return e;
}

std::vector<int> SpecGraph::neighbors(int v) const {
    std::vector<int> out;
    for (int u = 0; u < n_; ++u)
        if (has_edge(v, u)) out.push_back(u);
    return out;
}

SpecGraph spec_graph(const PartialMatrix& p) {
    SpecGraph g(p.order());
    for (int i = 0; i < p.order(); ++i)
        for (int j = i + 1; j < p.order(); ++j)
            if (p.specified(i, j)) g.add_edge(i, j);
    return g;
}

SpecGraph arrowhead_spec_graph(int n1, int n2, int s) {
    if (n1 < 0 || n2 < 1 || s < 1)
        throw std::invalid_argument("arrowhead_spec_graph: need n1 >= 0, n2 >= 1, S >= 1");
    const int n = n1 + s * n2;
    SpecGraph g(n);
    for (int i = 0; i < n1; ++i)
        for (int j = i + 1; j < n; ++j) g.add_edge(i, j);
    for (int grp = 0; grp < s; ++grp) {
        const int off = n1 + grp * n2;
        for (int i = 0; i < n2; ++i)
            for (int j = i + 1; j < n2; ++j) g.add_edge(off + i, off + j);
    }
    return g;
}

namespace {

// Shortest a--b path avoiding `banned`; empty when none exists.
std::vector<int> bfs_path(const SpecGraph& g, int a, int b, const std::vector<uint8_t>& banned) {
    const int n = g.order();
    std::vector<int> prev(n, -2);
    std::deque<int> queue;
    queue.push_back(a);
    prev[a] = -1;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (v == b) break;
        for (int u = 0; u < n; ++u) {
            if (!g.has_edge(v, u) || prev[u] != -2) continue;
            if (banned[u] && u != b) continue;
            prev[u] = v;
            queue.push_back(u);
        }
    }
    if (prev[b] == -2) return {};
    std::vector<int> path;
    for (int v = b; v != -1; v = prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> find_chordless_cycle(const SpecGraph& g) {
    const int n = g.order();
    for (int v = 0; v < n; ++v) {
        const auto nb = g.neighbors(v);
        std::vector<uint8_t> banned(n, 0);
        banned[v] = 1;
        for (int u : nb) banned[u] = 1;
        for (size_t i = 0; i < nb.size(); ++i)
            for (size_t j = i + 1; j < nb.size(); ++j) {
                const int a = nb[i], b = nb[j];
                if (g.has_edge(a, b)) continue;
                auto path = bfs_path(g, a, b, banned);
                if (path.empty()) continue;
                std::vector<int> cycle;
                cycle.push_back(v);
                cycle.insert(cycle.end(), path.begin(), path.end());
                return cycle;
            }
    }
    return {};
}

}  // namespace

ChordalCertificate is_chordal(const SpecGraph& g) {
    const int n = g.order();
    ChordalCertificate cert;
    if (n == 0) {
        cert.chordal = true;
        return cert;
    }

    // Maximum cardinality search, numbering vertices n-1 down to 0.
    std::vector<int> weight(n, 0), number(n, -1);
    std::vector<int> by_number(n, -1);
    for (int step = n - 1; step >= 0; --step) {
        int best = -1;
        for (int v = 0; v < n; ++v) {
            if (number[v] != -1) continue;
            if (best == -1 || weight[v] > weight[best]) best = v;
        }
        number[best] = step;
        by_number[step] = best;
        for (int u = 0; u < n; ++u)
            if (g.has_edge(best, u) && number[u] == -1) ++weight[u];
    }

    // Perfect elimination check: low numbers are eliminated first; the later
    // neighbors of each vertex, minus the first of them, must all be adjacent
    // to that first one.
    bool ok = true;
    for (int pos = 0; pos < n && ok; ++pos) {
        const int v = by_number[pos];
        int parent = -1;
        for (int u = 0; u < n; ++u)
            if (g.has_edge(v, u) && number[u] > pos)
                if (parent == -1 || number[u] < number[parent]) parent = u;
        if (parent == -1) continue;
        for (int u = 0; u < n; ++u) {
            if (!g.has_edge(v, u) || number[u] <= pos || u == parent) continue;
            if (!g.has_edge(parent, u)) {
                ok = false;
                break;
            }
        }
    }

    if (ok) {
        cert.chordal = true;
        cert.elimination_order = by_number;
        return cert;
    }
    cert.chordal = false;
    cert.chordless_cycle = find_chordless_cycle(g);
    return cert;
}

namespace {

struct BlockFinder {
    const SpecGraph& g;
    std::vector<int> disc, low;
    std::vector<std::pair<int, int>> edge_stack;
    std::vector<std::vector<int>> blocks;
    int timer = 0;

    explicit BlockFinder(const SpecGraph& graph) : g(graph) {
        disc.assign(g.order(), -1);
        low.assign(g.order(), -1);
    }

    void pop_block(std::pair<int, int> until) {
        std::vector<int> verts;
        auto push_unique = [&](int v) {
            if (std::find(verts.begin(), verts.end(), v) == verts.end()) verts.push_back(v);
        };
        while (!edge_stack.empty()) {
            auto e = edge_stack.back();
            edge_stack.pop_back();
            push_unique(e.first);
            push_unique(e.second);
            if (e == until) break;
        }
        blocks.push_back(std::move(verts));
    }

    void dfs(int root) {
        // Iterative DFS to stay safe on long paths.
        struct Frame {
            int v, parent, next;
        };
        std::vector<Frame> stack{{root, -1, 0}};
        disc[root] = low[root] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.next < g.order()) {
                const int u = f.next++;
                if (!g.has_edge(f.v, u) || u == f.parent) continue;
                if (disc[u] == -1) {
                    edge_stack.push_back({f.v, u});
                    disc[u] = low[u] = timer++;
                    stack.push_back({u, f.v, 0});
                } else if (disc[u] < disc[f.v]) {
                    edge_stack.push_back({f.v, u});
                    low[f.v] = std::min(low[f.v], disc[u]);
                }
            } else {
                const int v = f.v, parent = f.parent;
                stack.pop_back();
                if (parent != -1) {
                    low[parent] = std::min(low[parent], low[v]);
                    if (low[v] >= disc[parent]) pop_block({parent, v});
                }
            }
        }
    }
};

}  // namespace

bool is_block_clique(const SpecGraph& g) {
    BlockFinder finder(g);
    for (int v = 0; v < g.order(); ++v)
        if (finder.disc[v] == -1) finder.dfs(v);
    for (const auto& block : finder.blocks)
        for (size_t i = 0; i < block.size(); ++i)
            for (size_t j = i + 1; j < block.size(); ++j)
                if (!g.has_edge(block[i], block[j])) return false;
    return true;
}

}  // namespace cmp::specgraph
