#pragma once

#include <cstdint>
#include <vector>

#include "cmp/linalg.hpp"
#include "cmp/rng.hpp"
#include "cmp/specgraph.hpp"

namespace cmp::components {

enum class ConeKind { Nonneg, Free };

/// Ground cones qualifying a connected component: K0 for the shared block,
/// one cone per scenario block.
struct GroundCones {
    ConeKind cone0 = ConeKind::Nonneg;
    int k = 0;
    std::vector<ConeKind> cones;  // size S
    int m = 0;

    int scenarios() const { return static_cast<int>(cones.size()); }
};

/// Element of the space of connected components: S symmetric blocks
/// [X Z_i'; Z_i Y_i] of order k+m sharing the same X. The shared X is stored
/// once, which makes the sharing structural. Z blocks are kept in the global
/// svec scale (entries times sqrt(2)) so the Gamma embeddings are plain bit
/// copies of stored values.
class ConnectedComponents {
public:
    ConnectedComponents() = default;
    ConnectedComponents(int k, int m, int s);

    int k() const { return k_; }
    int m() const { return m_; }
    int scenarios() const { return s_; }
    int block_order() const { return k_ + m_; }

    linalg::SymMat& x_block() { return x_; }
    const linalg::SymMat& x_block() const { return x_; }

    linalg::SymMat& y_block(int i) { return y_[i]; }
    const linalg::SymMat& y_block(int i) const { return y_[i]; }

    /// Scenario block [X Z_i'; Z_i Y_i] as a full symmetric matrix.
    linalg::SymMat block(int i) const;

    double z_entry(int i, int r, int c) const;
    void set_z_entry(int i, int r, int c, double v);
    linalg::Matrix z_mat(int i) const;                       // m x k, plain scale
    void set_z_mat(int i, const linalg::Matrix& z);

    linalg::Matrix& z_raw(int i) { return z_raw_[i]; }
    const linalg::Matrix& z_raw(int i) const { return z_raw_[i]; }

    bool operator==(const ConnectedComponents& o) const;

private:
    int k_ = 0, m_ = 0, s_ = 0;
    linalg::SymMat x_;
    std::vector<linalg::Matrix> z_raw_;  // sqrt(2)-scaled entries
    std::vector<linalg::SymMat> y_;
};

/// Arrowhead embedding Gamma: order k + S*m, off-diagonal Y blocks zero.
linalg::SymMat gamma(const ConnectedComponents& cc);

/// Inverse embedding; off-diagonal Y blocks of M are discarded. Throws on a
/// dimension mismatch.
ConnectedComponents gamma_inv(const linalg::SymMat& m, int k, int block_m, int s);

/// Partial-matrix embedding Gamma_*: the off-diagonal Y blocks are left
/// unspecified.
specgraph::PartialMatrix gamma_partial(const ConnectedComponents& cc);

/// Inner product [A] (.) [B] = Gamma([A]) o Gamma([B]): X counted once, each
/// Z block twice, each Y block once.
double odot(const ConnectedComponents& a, const ConnectedComponents& b);

/// Rank-one factor set (x; y_1..y_S) of a CMP generator.
struct GeneratorFactors {
    linalg::Vec x;
    std::vector<linalg::Vec> y;
};

GeneratorFactors sample_generator_factors(const GroundCones& cones, Rng& rng);

/// Rank-one component [ (x;y_i)(x;y_i)' ] built from the sampled factors:
/// entries uniform on [0,1], negated with probability 1/2 on free
/// coordinates. The distribution is arbitrary but fixed and seeded.
ConnectedComponents sample_cmp_generator(const GroundCones& cones, uint64_t seed);

ConnectedComponents generator_from_factors(const GeneratorFactors& f, int k, int m);

}  // namespace cmp::components
