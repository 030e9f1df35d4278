#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "cmp/linalg.hpp"
#include "cmp/rng.hpp"
#include "doctest.h"

using namespace cmp::linalg;
using cmp::Rng;

namespace {

SymMat random_sym(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    SymMat m(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) m.set(i, j, rng.uniform(lo, hi));
    return m;
}

Vec random_unit(int n, Rng& rng) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    const double nn = norm2(v);
    for (double& x : v) x /= nn > 0 ? nn : 1.0;
    return v;
}

double trace_product(const SymMat& a, const SymMat& b) {
    double s = 0.0;
    for (int i = 0; i < a.order(); ++i)
        for (int j = 0; j < a.order(); ++j) s += a.get(i, j) * b.get(i, j);
    return s;
}

}  // namespace

TEST_CASE("svec storage basics") {
    SymMat m(3);
    m.set(0, 1, 2.5);
    m.set(2, 2, -1.0);
    CHECK(m.get(1, 0) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(static_cast<int>(m.svec().size()) == 6);
    CHECK(SymMat::svec_len(5) == 15);
}

TEST_CASE("svec isometry: frobenius equals trace product") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + rng.index(6);
        SymMat a = random_sym(n, rng), b = random_sym(n, rng);
        const double f = frobenius(a, b);
        const double tp = trace_product(a, b);
        CHECK(std::abs(f - tp) <= 1e-12 * (1.0 + std::abs(tp)));
    }
}

TEST_CASE("sym_eig on diagonal input") {
    SymMat m(3);
    m.set(0, 0, 3.0);
    m.set(1, 1, 1.0);
    m.set(2, 2, 2.0);
    const auto e = sym_eig(m);
    CHECK(e.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(e.eigenvalues[1] == doctest::Approx(2.0));
    CHECK(e.eigenvalues[2] == doctest::Approx(1.0));
    // Eigenvectors are signed permutations of identity columns.
    for (int k = 0; k < 3; ++k) {
        int big = 0;
        for (int r = 1; r < 3; ++r)
            if (std::abs(e.eigenvectors(r, k)) > std::abs(e.eigenvectors(big, k))) big = r;
        CHECK(std::abs(e.eigenvectors(big, k)) == doctest::Approx(1.0));
    }
}

TEST_CASE("sym_eig on the identity") {
    const auto e = sym_eig(SymMat::identity(4));
    for (double v : e.eigenvalues) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstruction and orthogonality") {
    Rng rng(11);
    for (int t = 0; t < 10; ++t) {
        SymMat m = random_sym(8, rng);
        const auto e = sym_eig(m);
        const double scale = std::max(1.0, m.norm_fro());
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                double rec = 0.0, ortho = 0.0;
                for (int k = 0; k < 8; ++k) {
                    rec += e.eigenvalues[k] * e.eigenvectors(i, k) * e.eigenvectors(j, k);
                    ortho += e.eigenvectors(k, i) * e.eigenvectors(k, j);
                }
                CHECK(std::abs(rec - m.get(i, j)) <= 1e-9 * scale);
                CHECK(std::abs(ortho - (i == j ? 1.0 : 0.0)) <= 1e-10);
            }
    }
}

TEST_CASE("sym_eig rejects non-finite input") {
    SymMat m(2);
    m.set(0, 1, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(sym_eig(m), std::invalid_argument);
}

TEST_CASE("project_psd fixes PSD inputs and clamps the indefinite diagonal") {
    Rng rng(3);
    SymMat psd = rank_one(random_unit(4, rng), 2.0);
    psd += rank_one(random_unit(4, rng), 0.5);
    const SymMat p = project_psd(psd);
    for (size_t t = 0; t < p.svec().size(); ++t)
        CHECK(std::abs(p.svec()[t] - psd.svec()[t]) <= 1e-10);

    SymMat d(2);
    d.set(0, 0, 1.0);
    d.set(1, 1, -1.0);
    const SymMat pd = project_psd(d);
    CHECK(pd.get(0, 0) == doctest::Approx(1.0));
    CHECK(pd.get(1, 1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("project_psd nearest-point property against random PSD samples") {
    Rng rng(17);
    SymMat m = random_sym(5, rng);
    const SymMat proj = project_psd(m);
    CHECK(lambda_min(proj) >= -1e-10);
    double base = 0.0;
    for (size_t t = 0; t < m.svec().size(); ++t) {
        const double d = proj.svec()[t] - m.svec()[t];
        base += d * d;
    }
    for (int t = 0; t < 100; ++t) {
        SymMat cand = project_psd(random_sym(5, rng));
        double dist = 0.0;
        for (size_t u = 0; u < m.svec().size(); ++u) {
            const double d = cand.svec()[u] - m.svec()[u];
            dist += d * d;
        }
        CHECK(base <= dist + 1e-12);
    }
}

TEST_CASE("project_psd is idempotent") {
    Rng rng(23);
    for (int t = 0; t < 20; ++t) {
        SymMat m = random_sym(6, rng);
        const SymMat p1 = project_psd(m);
        const SymMat p2 = project_psd(p1);
        for (size_t u = 0; u < p1.svec().size(); ++u)
            CHECK(std::abs(p1.svec()[u] - p2.svec()[u]) <= 1e-10);
    }
}

TEST_CASE("pseudo_inverse basics") {
    CHECK(pseudo_inverse(SymMat::identity(3)).get(1, 1) == doctest::Approx(1.0));
    SymMat d(2);
    d.set(0, 0, 2.0);
    const SymMat p = pseudo_inverse(d);
    CHECK(p.get(0, 0) == doctest::Approx(0.5));
    CHECK(p.get(1, 1) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("pseudo_inverse Penrose identity on rank-deficient PSD") {
    Rng rng(29);
    for (int t = 0; t < 10; ++t) {
        SymMat m = rank_one(random_unit(6, rng), 1.5);
        m += rank_one(random_unit(6, rng), 0.7);
        const SymMat pinv = pseudo_inverse(m);
        const Matrix mmp = mat_mul(m.dense(), mat_mul(pinv.dense(), m.dense()));
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) CHECK(std::abs(mmp(i, j) - m.get(i, j)) <= 1e-8);
    }
}

TEST_CASE("trust_region_sphere: Rayleigh quotient case") {
    SymMat c(2);
    c.set(0, 0, 1.0);
    c.set(1, 1, 2.0);
    const auto r = trust_region_sphere(c, {0.0, 0.0});
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.y[0] == doctest::Approx(1.0));  // tie broken toward +
    CHECK(r.y[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("trust_region_sphere: linear pull") {
    const auto r = trust_region_sphere(SymMat::identity(2), {-2.0, 0.0});
    CHECK(r.value == doctest::Approx(-1.0));
    CHECK(r.y[0] == doctest::Approx(1.0));
}

TEST_CASE("trust_region_sphere: hard case") {
    // b orthogonal to the bottom eigenspace and small enough.
    SymMat c(2);
    c.set(1, 1, 2.0);
    const auto r = trust_region_sphere(c, {0.0, 1.0});
    // y = (sqrt(15)/4, -1/4), value = 2/16 - 1/4 = -1/8.
    CHECK(r.value == doctest::Approx(-0.125).epsilon(1e-9));
    CHECK(std::abs(norm2(r.y) - 1.0) <= 1e-10);
}

namespace {

double sphere_grid_min(const SymMat& c, const Vec& b) {
    const Matrix cd = c.dense();
    auto eval = [&](const Vec& y) { return dot(y, mat_vec(cd, y)) + dot(b, y); };
    double best = std::numeric_limits<double>::infinity();
    Vec besty(3, 0.0);
    const int nt = 100, np = 100;
    for (int it = 0; it <= nt; ++it) {
        const double th = M_PI * it / nt;
        for (int ip = 0; ip < np; ++ip) {
            const double ph = 2.0 * M_PI * ip / np;
            Vec y{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
            const double v = eval(y);
            if (v < best) {
                best = v;
                besty = y;
            }
        }
    }
    // Local refinement by shrinking neighborhood search.
    Rng rng(99);
    double radius = 0.1;
    for (int it = 0; it < 4000; ++it) {
        Vec y = besty;
        for (double& v : y) v += rng.uniform(-radius, radius);
        const double nn = norm2(y);
        for (double& v : y) v /= nn;
        const double val = eval(y);
        if (val < best) {
            best = val;
            besty = y;
        }
        radius = std::max(radius * 0.999, 1e-7);
    }
    return best;
}

}  // namespace

TEST_CASE("trust_region_sphere matches a grid oracle in dimension 3") {
    Rng rng(41);
    for (int t = 0; t < 5; ++t) {
        SymMat c = random_sym(3, rng);
        Vec b{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const auto r = trust_region_sphere(c, b);
        const double grid = sphere_grid_min(c, b);
        CHECK(r.value <= grid + 1e-4);
        CHECK(r.value >= grid - 1e-4);
    }
}

TEST_CASE("trust_region_sphere lower-bounds random unit vectors") {
    Rng rng(53);
    SymMat c = random_sym(6, rng);
    Vec b(6);
    for (double& v : b) v = rng.uniform(-1, 1);
    const auto r = trust_region_sphere(c, b);
    const Matrix cd = c.dense();
    for (int t = 0; t < 1000; ++t) {
        const Vec y = random_unit(6, rng);
        CHECK(r.value <= dot(y, mat_vec(cd, y)) + dot(b, y) + 1e-10);
    }
}

TEST_CASE("trust_region_sphere rejects mismatched dimensions") {
    CHECK_THROWS_AS(trust_region_sphere(SymMat::identity(3), {1.0, 2.0}),
                    std::invalid_argument);
}
