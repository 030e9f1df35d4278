#pragma once

#include <cstdint>
#include <vector>

#include "cmp/linalg.hpp"

namespace cmp::specgraph {

/// Symmetric matrix with a specification mask. Diagonal entries are always
/// specified; the mask shares the svec layout of the values.
class PartialMatrix {
public:
    PartialMatrix() = default;
    explicit PartialMatrix(int order);

    int order() const { return values_.order(); }

    bool specified(int i, int j) const;
    void set(int i, int j, double v);       // marks the entry specified
    void unspecify(int i, int j);           // off-diagonal only

    double value(int i, int j) const { return values_.get(i, j); }
    const linalg::SymMat& values() const { return values_; }

private:
    linalg::SymMat values_;
    std::vector<uint8_t> mask_;
};

class SpecGraph {
public:
    SpecGraph() = default;
    explicit SpecGraph(int n) : n_(n), adj_(static_cast<size_t>(n) * n, 0) {}

    int order() const { return n_; }
    void add_edge(int u, int v);
    bool has_edge(int u, int v) const { return adj_[static_cast<size_t>(u) * n_ + v] != 0; }
    int num_edges() const;
    std::vector<int> neighbors(int v) const;

    bool operator==(const SpecGraph& o) const { return n_ == o.n_ && adj_ == o.adj_; }

private:
    int n_ = 0;
    std::vector<uint8_t> adj_;
};

SpecGraph spec_graph(const PartialMatrix& p);

/// Graph of the arrowhead specification pattern: group g0 of size n1 is
/// complete and adjacent to everything; the S groups of size n2 are
/// internally complete and pairwise non-adjacent.
SpecGraph arrowhead_spec_graph(int n1, int n2, int s);

struct ChordalCertificate {
    bool chordal = false;
    std::vector<int> elimination_order;  // perfect elimination order when chordal
    std::vector<int> chordless_cycle;    // length >= 4 when not chordal
};

/// Maximum cardinality search plus perfect-elimination verification; on
/// failure a chordless cycle of length >= 4 is extracted as certificate.
ChordalCertificate is_chordal(const SpecGraph& g);

/// True iff every biconnected component induces a complete subgraph.
bool is_block_clique(const SpecGraph& g);

}  // namespace cmp::specgraph
