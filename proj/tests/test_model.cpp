#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "cmp/model.hpp"
#include "cmp/rng.hpp"
#include "doctest.h"

using namespace cmp::model;
using cmp::Rng;
using cmp::linalg::Vec;

namespace {

double vsum(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

CandidateSolution random_candidate(const StructuredQCQP& inst, uint64_t seed, double lo,
                                   double hi) {
    Rng rng(seed);
    CandidateSolution c;
    c.x.resize(inst.n1);
    for (double& v : c.x) v = rng.uniform(lo, hi);
    c.y.assign(inst.S, Vec(inst.n2));
    for (auto& y : c.y)
        for (double& v : y) v = rng.uniform(lo, hi);
    return c;
}

}  // namespace

TEST_CASE("scheme 1: eps = 0 copies the nominal points into every scenario") {
    const auto d = gen_scheme1(2, 3, 4, 0.0, 11);
    for (int s = 1; s < 4; ++s) {
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
                CHECK(d.C[s].get(i, j) == doctest::Approx(d.C[0].get(i, j)).epsilon(1e-15));
    }
    CHECK_THROWS_AS(gen_scheme1(2, 3, 2, -0.1, 1), std::invalid_argument);
}

TEST_CASE("scheme 1: distance matrix structure") {
    const auto d = gen_scheme1(4, 3, 2, 0.3, 5);
    for (int i = 0; i < 4; ++i) CHECK(d.A.get(i, i) == 0.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(d.A.get(i, j) >= 0.0);
    for (const auto& b : d.B)
        for (double v : b.data()) CHECK(v >= 0.0);
    CHECK(vsum(d.p) == doctest::Approx(1.0));
}

TEST_CASE("scheme 1: frozen regression fixture") {
    const auto d = gen_scheme1(2, 3, 2, 0.25, 7);
    CHECK(d.A.get(0, 1) == 0.63955099080626909);
    CHECK(d.B[0](1, 2) == 0.40928892070664119);
    CHECK(d.C[1].get(0, 2) == 0.32022197949009096);
}

TEST_CASE("scheme 2: ranges and symmetry") {
    const auto d = gen_scheme2(3, 4, 3, 19);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(d.A.get(i, j) >= 0.0);
            CHECK(d.A.get(i, j) <= 1.0);
            CHECK(d.A.get(i, j) == d.A.get(j, i));
        }
    for (const auto& b : d.B)
        for (double v : b.data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 10.0);
        }
    for (const auto& c : d.C)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                CHECK(c.get(i, j) >= 0.0);
                CHECK(c.get(i, j) <= 0.1);
                CHECK(c.get(i, j) == c.get(j, i));
            }
}

TEST_CASE("scheme 2: frozen regression fixture") {
    const auto d = gen_scheme2(2, 3, 2, 7);
    CHECK(d.A.get(0, 1) == 0.94930120289264419);
    CHECK(d.B[1](0, 2) == 9.9365272821278001);
    CHECK(d.C[0].get(1, 1) == 0.039744545441573388);
}

TEST_CASE("build_family feasible fixtures") {
    // F1: x = (1/2, 0), y = (1/4, 1/4).
    const auto f1 = make_instance(Family::F1, 1, 2, 2, 1, 0.1, 3);
    CandidateSolution c1{{0.5, 0.0}, {{0.25, 0.25}}};
    CHECK(check_feasible(f1, c1).ok());

    // F2: x = e - e_j, y_j unit, y_i = 0 otherwise.
    const auto f2 = build_family(Family::F2, gen_scheme2(3, 2, 3, 4));
    CandidateSolution c2{{0.0, 1.0, 1.0}, {{1.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}}};
    CHECK(check_feasible(f2, c2).ok());
    CHECK_THROWS_AS(build_family(Family::F2, gen_scheme2(2, 2, 3, 4)), std::invalid_argument);

    // F3: unit mass on one block at a time.
    const auto f3 = build_family(Family::F3, gen_scheme2(2, 2, 2, 5));
    CandidateSolution c3a{{1.0, 0.0}, {{0.0, 0.0}, {0.0, 0.0}}};
    CandidateSolution c3b{{0.0, 0.0}, {{1.0, 0.0}, {0.0, 0.0}}};
    CHECK(check_feasible(f3, c3a).ok());
    CHECK(check_feasible(f3, c3b).ok());
    CHECK(f3.objective_offset == 1.0);
}

TEST_CASE("eval_objective special cases and naive-loop oracle") {
    const auto inst = make_instance(Family::F1, 1, 2, 3, 2, 0.25, 7);
    CandidateSolution zero{{0.0, 0.0}, {{0, 0, 0}, {0, 0, 0}}};
    CHECK(eval_objective(inst, zero) == 0.0);

    const auto f2 = build_family(Family::F2, gen_scheme2(2, 3, 2, 9));
    CandidateSolution xonly{{0.0, 1.0}, {{0, 0, 0}, {0, 0, 0}}};
    CHECK(eval_objective(f2, xonly) == doctest::Approx(f2.A.get(1, 1)));

    // Frozen value plus an independent nested-loop recomputation.
    CandidateSolution cand{{0.25, 0.25}, {{0.1, 0.2, 0.2}, {0.3, 0.1, 0.1}}};
    CHECK(eval_objective(inst, cand) == 0.30787084890363808);
    double naive = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) naive += cand.x[i] * inst.A.get(i, j) * cand.x[j];
    for (int s = 0; s < 2; ++s) {
        double term = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int l = 0; l < 3; ++l) term += cand.x[i] * inst.B[s](i, l) * cand.y[s][l];
        for (int l = 0; l < 3; ++l)
            for (int l2 = 0; l2 < 3; ++l2)
                term += cand.y[s][l] * inst.C[s].get(l, l2) * cand.y[s][l2];
        naive += inst.p[s] * term;
    }
    CHECK(eval_objective(inst, cand) == doctest::Approx(naive).epsilon(1e-14));
}

TEST_CASE("check_feasible names violations and matches hand residuals") {
    const auto f1 = make_instance(Family::F1, 2, 2, 2, 1, 0.0, 3);
    CandidateSolution bad{{0.5, -0.2}, {{0.35, 0.45}}};
    const auto rep = check_feasible(f1, bad);
    CHECK(!rep.ok());
    bool saw_sign = false, saw_simplex = false;
    for (const auto& v : rep.violations) {
        if (v.name == "x[1] >= 0") {
            saw_sign = true;
            CHECK(v.amount == doctest::Approx(0.2));
        }
        if (v.name == "simplex_0") {
            saw_simplex = true;
            CHECK(v.amount == doctest::Approx(0.1).epsilon(1e-12));
        }
    }
    CHECK(saw_sign);
    CHECK(saw_simplex);

    const auto f2 = build_family(Family::F2, gen_scheme2(2, 2, 2, 9));
    CandidateSolution b2{{0.5, 1.0}, {{0.6, 0.0}, {0.8, 0.0}}};
    const auto rep2 = check_feasible(f2, b2);
    bool saw_binary = false, saw_comp = false;
    for (const auto& v : rep2.violations) {
        if (v.name == "binary_x[0]") {
            saw_binary = true;
            CHECK(v.amount == doctest::Approx(0.25));
        }
        if (v.name == "complementarity_0") {
            saw_comp = true;
            CHECK(v.amount == doctest::Approx(0.3));
        }
    }
    CHECK(saw_binary);
    CHECK(saw_comp);
}

TEST_CASE("repair returns feasible points for random inputs") {
    for (int fam = 0; fam < 3; ++fam) {
        const Family family = fam == 0 ? Family::F1 : fam == 1 ? Family::F2 : Family::F3;
        const int n1 = family == Family::F2 ? 3 : 2;
        const auto inst = build_family(family, gen_scheme2(n1, 3, 3, 21));
        for (uint64_t seed = 1; seed <= 25; ++seed) {
            const auto cand = random_candidate(inst, seed, -0.5, 1.5);
            const auto fixed = repair(inst, cand);
            CHECK(check_feasible(inst, fixed, 1e-8).ok());
        }
    }
}

TEST_CASE("repair leaves feasible points unchanged and is idempotent") {
    const auto f1 = make_instance(Family::F1, 1, 2, 2, 2, 0.1, 31);
    CandidateSolution feas{{0.25, 0.25}, {{0.5, 0.0}, {0.1, 0.4}}};
    const auto kept = repair(f1, feas);
    for (int j = 0; j < 2; ++j) CHECK(kept.x[j] == feas.x[j]);

    for (uint64_t seed = 1; seed <= 10; ++seed) {
        const auto cand = random_candidate(f1, seed, -1.0, 1.0);
        const auto once = repair(f1, cand);
        const auto twice = repair(f1, once);
        for (int j = 0; j < 2; ++j) CHECK(std::abs(once.x[j] - twice.x[j]) <= 1e-10);
        for (int i = 0; i < 2; ++i)
            for (int l = 0; l < 2; ++l)
                CHECK(std::abs(once.y[i][l] - twice.y[i][l]) <= 1e-10);
    }
}

TEST_CASE("repair for F2 rounds to the binary structure") {
    const auto f2 = build_family(Family::F2, gen_scheme2(3, 2, 3, 13));
    CandidateSolution frac{{0.9, 0.2, 0.7}, {{0.3, 0.1}, {0.5, 0.2}, {0.1, 0.1}}};
    const auto fixed = repair(f2, frac);
    CHECK(fixed.x[0] == 1.0);
    CHECK(fixed.x[1] == 0.0);  // smallest coordinate excluded
    CHECK(fixed.x[2] == 1.0);
    CHECK(vsum(fixed.x) == doctest::Approx(2.0));
    CHECK(cmp::linalg::norm2(fixed.y[1]) == doctest::Approx(1.0));
    CHECK(vsum(fixed.y[0]) == 0.0);
    CHECK(check_feasible(f2, fixed).ok());
}

TEST_CASE("instance json round trip preserves the data") {
    const auto inst = make_instance(Family::F1, 1, 2, 3, 2, 0.25, 7);
    const std::string text = save_instance_json(inst);
    const auto back = load_instance_json(text);
    CHECK(back.n1 == inst.n1);
    CHECK(back.S == inst.S);
    CHECK(back.family == inst.family);
    CHECK(back.A.get(0, 1) == doctest::Approx(inst.A.get(0, 1)).epsilon(1e-15));
    CHECK(back.B[1](1, 2) == doctest::Approx(inst.B[1](1, 2)).epsilon(1e-15));
    CHECK(back.instance_type() == "2_3_2_1");

    const std::string path = "/tmp/cmp_test_instance.json";
    save_instance_file(inst, path);
    const auto loaded = load_instance_file(path);
    CHECK(loaded.C[0].get(1, 1) == doctest::Approx(inst.C[0].get(1, 1)).epsilon(1e-15));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_instance_file("/tmp/definitely_missing_instance.json"),
                    std::runtime_error);
}
