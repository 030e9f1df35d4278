#include "cmp/components.hpp"

#include <cmath>
#include <stdexcept>

namespace cmp::components {

using linalg::Matrix;
using linalg::SymMat;
using linalg::Vec;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

ConnectedComponents::ConnectedComponents(int k, int m, int s)
    : k_(k), m_(m), s_(s), x_(k), z_raw_(s, Matrix(m, k)), y_(s, SymMat(m)) {
    if (k < 0 || m < 0 || s < 1)
        throw std::invalid_argument("ConnectedComponents: bad dimensions");
}

SymMat ConnectedComponents::block(int i) const {
    SymMat b(k_ + m_);
    for (int c = 0; c < k_; ++c)
        for (int r = 0; r <= c; ++r)
            b.svec()[SymMat::svec_index(r, c)] = x_.svec()[SymMat::svec_index(r, c)];
    for (int c = 0; c < m_; ++c)
        for (int r = 0; r <= c; ++r)
            b.svec()[SymMat::svec_index(k_ + r, k_ + c)] =
                y_[i].svec()[SymMat::svec_index(r, c)];
    for (int r = 0; r < m_; ++r)
        for (int c = 0; c < k_; ++c)
            b.svec()[SymMat::svec_index(c, k_ + r)] = z_raw_[i](r, c);
    return b;
}

double ConnectedComponents::z_entry(int i, int r, int c) const {
    return z_raw_[i](r, c) / kSqrt2;
}

void ConnectedComponents::set_z_entry(int i, int r, int c, double v) {
    z_raw_[i](r, c) = v * kSqrt2;
}

Matrix ConnectedComponents::z_mat(int i) const {
    Matrix z(m_, k_);
    for (int r = 0; r < m_; ++r)
        for (int c = 0; c < k_; ++c) z(r, c) = z_raw_[i](r, c) / kSqrt2;
    return z;
}

void ConnectedComponents::set_z_mat(int i, const Matrix& z) {
    if (z.rows() != m_ || z.cols() != k_)
        throw std::invalid_argument("set_z_mat: shape mismatch");
    for (int r = 0; r < m_; ++r)
        for (int c = 0; c < k_; ++c) z_raw_[i](r, c) = z(r, c) * kSqrt2;
}

bool ConnectedComponents::operator==(const ConnectedComponents& o) const {
    if (k_ != o.k_ || m_ != o.m_ || s_ != o.s_) return false;
    if (x_.svec() != o.x_.svec()) return false;
    for (int i = 0; i < s_; ++i) {
        if (y_[i].svec() != o.y_[i].svec()) return false;
        if (z_raw_[i].data() != o.z_raw_[i].data()) return false;
    }
    return true;
}

SymMat gamma(const ConnectedComponents& cc) {
    const int k = cc.k(), m = cc.m(), s = cc.scenarios();
    SymMat big(k + s * m);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r <= c; ++r)
            big.svec()[SymMat::svec_index(r, c)] =
                cc.x_block().svec()[SymMat::svec_index(r, c)];
    for (int i = 0; i < s; ++i) {
        const int off = k + i * m;
        for (int c = 0; c < m; ++c)
            for (int r = 0; r <= c; ++r)
                big.svec()[SymMat::svec_index(off + r, off + c)] =
                    cc.y_block(i).svec()[SymMat::svec_index(r, c)];
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < k; ++c)
                big.svec()[SymMat::svec_index(c, off + r)] = cc.z_raw(i)(r, c);
    }
    return big;
}

ConnectedComponents gamma_inv(const SymMat& m, int k, int block_m, int s) {
    if (m.order() != k + s * block_m)
        throw std::invalid_argument("gamma_inv: order(M) != k + S*m");
    ConnectedComponents cc(k, block_m, s);
    for (int c = 0; c < k; ++c)
        for (int r = 0; r <= c; ++r)
            cc.x_block().svec()[SymMat::svec_index(r, c)] =
                m.svec()[SymMat::svec_index(r, c)];
    for (int i = 0; i < s; ++i) {
        const int off = k + i * block_m;
        for (int c = 0; c < block_m; ++c)
            for (int r = 0; r <= c; ++r)
                cc.y_block(i).svec()[SymMat::svec_index(r, c)] =
                    m.svec()[SymMat::svec_index(off + r, off + c)];
        for (int r = 0; r < block_m; ++r)
            for (int c = 0; c < k; ++c)
                cc.z_raw(i)(r, c) = m.svec()[SymMat::svec_index(c, off + r)];
    }
    return cc;
}

specgraph::PartialMatrix gamma_partial(const ConnectedComponents& cc) {
    const SymMat big = gamma(cc);
    const int k = cc.k(), m = cc.m(), s = cc.scenarios();
    specgraph::PartialMatrix p(big.order());
    for (int i = 0; i < big.order(); ++i)
        for (int j = i; j < big.order(); ++j) p.set(i, j, big.get(i, j));
    for (int a = 0; a < s; ++a)
        for (int b = a + 1; b < s; ++b)
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c) p.unspecify(k + a * m + r, k + b * m + c);
    return p;
}

double odot(const ConnectedComponents& a, const ConnectedComponents& b) {
    if (a.k() != b.k() || a.m() != b.m() || a.scenarios() != b.scenarios())
        throw std::invalid_argument("odot: shape mismatch");
    double s = linalg::dot(a.x_block().svec(), b.x_block().svec());
    for (int i = 0; i < a.scenarios(); ++i) {
        s += linalg::dot(a.y_block(i).svec(), b.y_block(i).svec());
        s += linalg::dot(a.z_raw(i).data(), b.z_raw(i).data());
    }
    return s;
}

GeneratorFactors sample_generator_factors(const GroundCones& cones, Rng& rng) {
    GeneratorFactors f;
    f.x.resize(cones.k);
    for (int j = 0; j < cones.k; ++j) {
        double v = rng.u01();
        if (cones.cone0 == ConeKind::Free && rng.flip()) v = -v;
        f.x[j] = v;
    }
    f.y.resize(cones.scenarios());
    for (int i = 0; i < cones.scenarios(); ++i) {
        f.y[i].resize(cones.m);
        for (int l = 0; l < cones.m; ++l) {
            double v = rng.u01();
            if (cones.cones[i] == ConeKind::Free && rng.flip()) v = -v;
            f.y[i][l] = v;
        }
    }
    return f;
}

ConnectedComponents generator_from_factors(const GeneratorFactors& f, int k, int m) {
    ConnectedComponents cc(k, m, static_cast<int>(f.y.size()));
    for (int c = 0; c < k; ++c)
        for (int r = 0; r <= c; ++r) cc.x_block().set(r, c, f.x[r] * f.x[c]);
    for (int i = 0; i < cc.scenarios(); ++i) {
        for (int c = 0; c < m; ++c)
            for (int r = 0; r <= c; ++r) cc.y_block(i).set(r, c, f.y[i][r] * f.y[i][c]);
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < k; ++c) cc.set_z_entry(i, r, c, f.y[i][r] * f.x[c]);
    }
    return cc;
}

ConnectedComponents sample_cmp_generator(const GroundCones& cones, uint64_t seed) {
    Rng rng(seed);
    const auto f = sample_generator_factors(cones, rng);
    return generator_from_factors(f, cones.k, cones.m);
}

}  // namespace cmp::components
