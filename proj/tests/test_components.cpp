#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "cmp/components.hpp"
#include "cmp/rng.hpp"
#include "doctest.h"

using namespace cmp::components;
using cmp::Rng;
using cmp::linalg::Matrix;
using cmp::linalg::SymMat;
using cmp::linalg::Vec;

namespace {

ConnectedComponents random_cc(int k, int m, int s, Rng& rng) {
    ConnectedComponents cc(k, m, s);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) cc.x_block().set(i, j, rng.uniform(-1, 1));
    for (int t = 0; t < s; ++t) {
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) cc.y_block(t).set(i, j, rng.uniform(-1, 1));
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < k; ++c) cc.set_z_entry(t, r, c, rng.uniform(-1, 1));
    }
    return cc;
}

GroundCones cones(ConeKind k0, ConeKind ki, int k, int m, int s) {
    GroundCones g;
    g.cone0 = k0;
    g.k = k;
    g.cones.assign(s, ki);
    g.m = m;
    return g;
}

}  // namespace

TEST_CASE("gamma for S=1 is the plain block matrix") {
    Rng rng(1);
    auto cc = random_cc(2, 2, 1, rng);
    const SymMat g = gamma(cc);
    CHECK(g.order() == 4);
    CHECK(g.get(0, 2) == doctest::Approx(cc.z_entry(0, 0, 0)).epsilon(1e-14));
    CHECK(g.get(3, 3) == doctest::Approx(cc.y_block(0).get(1, 1)).epsilon(1e-14));
}

TEST_CASE("gamma of the zero component is zero") {
    ConnectedComponents cc(2, 3, 2);
    CHECK(gamma(cc).norm_fro() == 0.0);
}

TEST_CASE("gamma hand-expanded 3x3 example") {
    // k=1, m=1, S=2 with X=(1), Z=((2),(3)), Y=((4),(5)).
    ConnectedComponents cc(1, 1, 2);
    cc.x_block().set(0, 0, 1.0);
    cc.set_z_entry(0, 0, 0, 2.0);
    cc.set_z_entry(1, 0, 0, 3.0);
    cc.y_block(0).set(0, 0, 4.0);
    cc.y_block(1).set(0, 0, 5.0);
    const SymMat g = gamma(cc);
    const double want[3][3] = {{1, 2, 3}, {2, 4, 0}, {3, 0, 5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(g.get(i, j) == doctest::Approx(want[i][j]));
}

TEST_CASE("gamma_inv round trip is bitwise exact") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
        auto cc = random_cc(1 + rng.index(3), 1 + rng.index(3), 1 + rng.index(3), rng);
        const auto back = gamma_inv(gamma(cc), cc.k(), cc.m(), cc.scenarios());
        CHECK(back == cc);
    }
}

TEST_CASE("gamma_inv on the all-ones matrix") {
    SymMat ones(3);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) ones.set(i, j, 1.0);
    const auto cc = gamma_inv(ones, 1, 1, 2);
    CHECK(cc.x_block().get(0, 0) == doctest::Approx(1.0));
    CHECK(cc.z_entry(0, 0, 0) == doctest::Approx(1.0));
    CHECK(cc.z_entry(1, 0, 0) == doctest::Approx(1.0));
    CHECK(cc.y_block(1).get(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("gamma_inv discards the off-diagonal Y blocks") {
    Rng rng(9);
    SymMat m(1 + 2 * 2);
    for (int i = 0; i < m.order(); ++i)
        for (int j = i; j < m.order(); ++j) m.set(i, j, rng.uniform(-1, 1));
    SymMat perturbed = m;
    perturbed.set(1, 3, 42.0);  // inside Y_{12}
    perturbed.set(2, 4, -17.0);
    const auto a = gamma_inv(m, 1, 2, 2);
    const auto b = gamma_inv(perturbed, 1, 2, 2);
    CHECK(a == b);
}

TEST_CASE("gamma_inv rejects dimension mismatches") {
    CHECK_THROWS_AS(gamma_inv(SymMat(5), 1, 2, 3), std::invalid_argument);
}

TEST_CASE("gamma_partial leaves exactly the cross-scenario blocks unspecified") {
    Rng rng(13);
    auto cc = random_cc(2, 2, 2, rng);
    const auto p = gamma_partial(cc);
    CHECK(spec_graph(p) == cmp::specgraph::arrowhead_spec_graph(2, 2, 2));
    CHECK(p.specified(0, 3));       // Z block
    CHECK(!p.specified(2, 4));      // across scenarios
    CHECK(p.value(0, 1) == doctest::Approx(cc.x_block().get(0, 1)));

    auto single = random_cc(2, 2, 1, rng);
    const auto ps = gamma_partial(single);
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) CHECK(ps.specified(i, j));
}

TEST_CASE("odot equals the frobenius product of the embeddings") {
    Rng rng(21);
    for (int t = 0; t < 20; ++t) {
        auto a = random_cc(2, 2, 3, rng);
        auto b = random_cc(2, 2, 3, rng);
        const double lhs = odot(a, b);
        const double rhs = frobenius(gamma(a), gamma(b));
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        // Block expansion: X o X' + sum(2 Z o Z' + Y o Y').
        double expl = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) expl += a.x_block().get(i, j) * b.x_block().get(i, j);
        for (int s = 0; s < 3; ++s) {
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    expl += 2.0 * a.z_entry(s, i, j) * b.z_entry(s, i, j);
                    expl += a.y_block(s).get(i, j) * b.y_block(s).get(i, j);
                }
        }
        CHECK(lhs == doctest::Approx(expl).epsilon(1e-10));
    }
    ConnectedComponents zero(2, 2, 3);
    auto a = random_cc(2, 2, 3, rng);
    CHECK(odot(a, zero) == 0.0);
    CHECK(odot(a, a) == doctest::Approx(std::pow(gamma(a).norm_fro(), 2)));
}

TEST_CASE("odot is bilinear and positive definite") {
    Rng rng(33);
    for (int t = 0; t < 30; ++t) {
        auto a = random_cc(2, 1, 2, rng);
        auto b = random_cc(2, 1, 2, rng);
        auto c = random_cc(2, 1, 2, rng);
        const double al = rng.uniform(-2, 2);
        // a*al + b via embeddings.
        auto combo = gamma_inv(SymMat(gamma(a)), 2, 1, 2);
        for (size_t u = 0; u < combo.x_block().svec().size(); ++u)
            combo.x_block().svec()[u] = al * a.x_block().svec()[u] + b.x_block().svec()[u];
        for (int s = 0; s < 2; ++s) {
            for (size_t u = 0; u < combo.y_block(s).svec().size(); ++u)
                combo.y_block(s).svec()[u] =
                    al * a.y_block(s).svec()[u] + b.y_block(s).svec()[u];
            for (size_t u = 0; u < combo.z_raw(s).data().size(); ++u)
                combo.z_raw(s).data()[u] = al * a.z_raw(s).data()[u] + b.z_raw(s).data()[u];
        }
        CHECK(odot(combo, c) ==
              doctest::Approx(al * odot(a, c) + odot(b, c)).epsilon(1e-10));
        if (odot(a, a) != 0.0) CHECK(odot(a, a) > 0.0);
    }
}

TEST_CASE("sample_cmp_generator produces shared rank-one blocks") {
    const auto g = cones(ConeKind::Nonneg, ConeKind::Nonneg, 3, 2, 3);
    for (uint64_t seed = 1; seed <= 10; ++seed) {
        const auto cc = sample_cmp_generator(g, seed);
        for (int i = 0; i < 3; ++i) {
            const auto e = cmp::linalg::sym_eig(cc.block(i));
            CHECK(e.eigenvalues[1] <= 1e-10);  // rank one
            for (int r = 0; r < cc.block_order(); ++r)
                for (int c = r; c < cc.block_order(); ++c)
                    CHECK(cc.block(i).get(r, c) >= -1e-14);  // nonneg cones
        }
    }
}

TEST_CASE("generator from explicit factors: x = e1, y = 0") {
    GeneratorFactors f;
    f.x = {1.0, 0.0};
    f.y = {{0.0, 0.0}, {0.0, 0.0}};
    const auto cc = generator_from_factors(f, 2, 2);
    CHECK(cc.x_block().get(0, 0) == 1.0);
    CHECK(cc.x_block().get(0, 1) == 0.0);
    CHECK(gamma(cc).get(2, 2) == 0.0);
    CHECK(cc.z_entry(0, 0, 0) == 0.0);
}

TEST_CASE("free cones flip signs; nonneg cones never do") {
    const auto gfree = cones(ConeKind::Free, ConeKind::Free, 4, 4, 2);
    bool saw_negative = false;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const auto f = sample_generator_factors(gfree, rng);
        for (double v : f.x) saw_negative = saw_negative || v < 0;
    }
    CHECK(saw_negative);
}

TEST_CASE("convex combinations of generators satisfy the CPI block conditions") {
    const auto g = cones(ConeKind::Nonneg, ConeKind::Nonneg, 2, 2, 3);
    Rng rng(71);
    for (int t = 0; t < 10; ++t) {
        ConnectedComponents mix(2, 2, 3);
        double wsum = 0.0;
        std::vector<double> ws;
        for (int r = 0; r < 4; ++r) {
            ws.push_back(rng.u01() + 0.01);
            wsum += ws.back();
        }
        for (int r = 0; r < 4; ++r) {
            const auto gen = sample_cmp_generator(g, 1000 * t + r);
            const double w = ws[r] / wsum;
            for (size_t u = 0; u < mix.x_block().svec().size(); ++u)
                mix.x_block().svec()[u] += w * gen.x_block().svec()[u];
            for (int s = 0; s < 3; ++s) {
                for (size_t u = 0; u < mix.y_block(s).svec().size(); ++u)
                    mix.y_block(s).svec()[u] += w * gen.y_block(s).svec()[u];
                for (size_t u = 0; u < mix.z_raw(s).data().size(); ++u)
                    mix.z_raw(s).data()[u] += w * gen.z_raw(s).data()[u];
            }
        }
        for (int s = 0; s < 3; ++s) {
            CHECK(cmp::linalg::lambda_min(mix.block(s)) >= -1e-10);
            for (int i = 0; i < 4; ++i)
                for (int j = i; j < 4; ++j) CHECK(mix.block(s).get(i, j) >= -1e-12);
        }
    }
}
