#include "cmp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cmp/rng.hpp"
#include "json.hpp"

namespace cmp::model {

using components::ConeKind;
using linalg::Matrix;
using linalg::SymMat;
using linalg::Vec;

std::string family_name(Family f) {
    switch (f) {
        case Family::F1: return "f1";
        case Family::F2: return "f2";
        case Family::F3: return "f3";
    }
    return "?";
}

Family family_from_name(const std::string& s) {
    if (s == "f1" || s == "F1") return Family::F1;
    if (s == "f2" || s == "F2") return Family::F2;
    if (s == "f3" || s == "F3") return Family::F3;
    throw std::invalid_argument("unknown family: " + s);
}

std::string StructuredQCQP::instance_type() const {
    std::ostringstream os;
    os << n1 << "_" << n2 << "_" << S << "_" << source.scheme;
    return os.str();
}

namespace {

double dist(double ax, double ay, double bx, double by) {
    const double dx = ax - bx, dy = ay - by;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

ObjectiveData gen_scheme1(int n1, int n2, int s, double eps, uint64_t seed) {
    if (eps < 0) throw std::invalid_argument("gen_scheme1: eps must be nonnegative");
    if (n1 < 1 || n2 < 1 || s < 1) throw std::invalid_argument("gen_scheme1: bad dimensions");
    Rng rng(seed);

    std::vector<double> ux(n1), uy(n1);
    for (int j = 0; j < n1; ++j) {
        ux[j] = rng.u01();
        uy[j] = rng.u01();
    }
    std::vector<double> wx(n2), wy(n2);
    for (int l = 0; l < n2; ++l) {
        wx[l] = rng.u01();
        wy[l] = rng.u01();
    }

    ObjectiveData d;
    d.n1 = n1;
    d.n2 = n2;
    d.S = s;
    d.scheme = 1;
    d.seed = seed;
    d.eps = eps;
    d.A = SymMat(n1);
    for (int j = 0; j < n1; ++j)
        for (int j2 = j; j2 < n1; ++j2) d.A.set(j, j2, dist(ux[j], uy[j], ux[j2], uy[j2]));
    d.a.assign(n1, 0.0);
    d.p.assign(s, 1.0 / s);

    for (int sc = 0; sc < s; ++sc) {
        std::vector<double> px(n2), py(n2);
        for (int l = 0; l < n2; ++l) {
            px[l] = wx[l] + rng.uniform(-eps, eps);
            py[l] = wy[l] + rng.uniform(-eps, eps);
        }
        Matrix b(n1, n2);
        for (int j = 0; j < n1; ++j)
            for (int l = 0; l < n2; ++l) b(j, l) = dist(ux[j], uy[j], px[l], py[l]);
        SymMat c(n2);
        for (int l = 0; l < n2; ++l)
            for (int l2 = l; l2 < n2; ++l2) c.set(l, l2, dist(px[l], py[l], px[l2], py[l2]));
        d.B.push_back(std::move(b));
        d.C.push_back(std::move(c));
        d.c.emplace_back(n2, 0.0);
    }
    return d;
}

ObjectiveData gen_scheme2(int n1, int n2, int s, uint64_t seed) {
    if (n1 < 1 || n2 < 1 || s < 1) throw std::invalid_argument("gen_scheme2: bad dimensions");
    Rng rng(seed);
    ObjectiveData d;
    d.n1 = n1;
    d.n2 = n2;
    d.S = s;
    d.scheme = 2;
    d.seed = seed;
    d.eps = 0.0;
    d.A = SymMat(n1);
    for (int i = 0; i < n1; ++i)
        for (int j = i; j < n1; ++j) d.A.set(i, j, rng.uniform(0.0, 1.0));
    d.a.assign(n1, 0.0);
    d.p.assign(s, 1.0 / s);
    for (int sc = 0; sc < s; ++sc) {
        Matrix b(n1, n2);
        for (int i = 0; i < n1; ++i)
            for (int l = 0; l < n2; ++l) b(i, l) = rng.uniform(0.0, 10.0);
        // C keeps the distance-matrix shape of scheme 1: zero diagonal,
        // strict upper triangle sampled and mirrored.
        SymMat c(n2);
        for (int i = 0; i < n2; ++i)
            for (int j = i + 1; j < n2; ++j) c.set(i, j, rng.uniform(0.0, 0.1));
        d.B.push_back(std::move(b));
        d.C.push_back(std::move(c));
        d.c.emplace_back(n2, 0.0);
    }
    return d;
}

StructuredQCQP build_family(Family family, const ObjectiveData& data) {
    StructuredQCQP inst;
    inst.family = family;
    inst.n1 = data.n1;
    inst.n2 = data.n2;
    inst.S = data.S;
    inst.A = data.A;
    inst.a = data.a;
    inst.B = data.B;
    inst.C = data.C;
    inst.c = data.c;
    inst.p = data.p;
    inst.source = data;

    double psum = 0.0;
    for (double v : inst.p) {
        if (v < 0) throw std::invalid_argument("build_family: negative probability weight");
        psum += v;
    }
    if (std::abs(psum - 1.0) > 1e-12)
        throw std::invalid_argument("build_family: probabilities do not sum to 1");

    const int n1 = data.n1, n2 = data.n2, s = data.S;
    switch (family) {
        case Family::F1: {
            inst.cone0 = ConeKind::Nonneg;
            inst.cones.assign(s, ConeKind::Nonneg);
            Matrix f(1, n1, 1.0), g(1, n2, 1.0);
            for (int i = 0; i < s; ++i) {
                inst.F.push_back(f);
                inst.G.push_back(g);
                inst.r.push_back(Vec{1.0});
            }
            break;
        }
        case Family::F2: {
            if (n1 != s)
                throw std::invalid_argument("build_family: F2 requires n1 = S");
            inst.cone0 = ConeKind::Nonneg;
            inst.cones.assign(s, ConeKind::Free);
            Matrix f(1, n1, 1.0), g(1, n2, 0.0);
            for (int i = 0; i < s; ++i) {
                inst.F.push_back(f);
                inst.G.push_back(g);
                inst.r.push_back(Vec{static_cast<double>(s - 1)});
            }
            {
                LiftedConstraint tr;
                tr.name = "sum_trace_Y";
                tr.coef_Y.assign(s, SymMat::identity(n2));
                tr.rhs = 1.0;
                inst.lifted.push_back(std::move(tr));
            }
            for (int i = 0; i < s; ++i)
                for (int l = 0; l < n2; ++l) {
                    LiftedConstraint zc;
                    zc.name = "zcol_" + std::to_string(i) + "_" + std::to_string(l);
                    zc.coef_Z.assign(s, Matrix(n2, n1));
                    zc.coef_Z[i](l, i) = 1.0;
                    zc.rhs = 0.0;
                    inst.lifted.push_back(std::move(zc));
                }
            break;
        }
        case Family::F3: {
            inst.cone0 = ConeKind::Free;
            inst.cones.assign(s, ConeKind::Nonneg);
            for (int i = 0; i < s; ++i) {
                inst.F.push_back(Matrix(0, n1));
                inst.G.push_back(Matrix(0, n2));
                inst.r.push_back(Vec{});
            }
            LiftedConstraint tr;
            tr.name = "trace_ball";
            tr.coef_X = SymMat::identity(n1);
            tr.coef_Y.assign(s, SymMat::identity(n2));
            tr.rhs = 1.0;
            inst.lifted.push_back(std::move(tr));
            inst.objective_offset = 1.0;
            break;
        }
    }
    return inst;
}

double eval_objective(const StructuredQCQP& inst, const CandidateSolution& cand) {
    const Matrix ad = inst.A.dense();
    double v = linalg::dot(cand.x, mat_vec(ad, cand.x)) + linalg::dot(inst.a, cand.x);
    for (int i = 0; i < inst.S; ++i) {
        const Vec by = mat_vec(inst.B[i], cand.y[i]);
        const Vec cy = mat_vec(inst.C[i].dense(), cand.y[i]);
        v += inst.p[i] * (linalg::dot(cand.x, by) + linalg::dot(cand.y[i], cy) +
                          linalg::dot(inst.c[i], cand.y[i]));
    }
    return v + inst.objective_offset;
}

namespace {

double vsum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

double sq_norm(const Vec& v) { return linalg::dot(v, v); }

}  // namespace

FeasReport check_feasible(const StructuredQCQP& inst, const CandidateSolution& cand,
                          double tol) {
    FeasReport rep;
    auto flag = [&](const std::string& name, double amount) {
        rep.max_violation = std::max(rep.max_violation, amount);
        if (amount > tol) rep.violations.push_back({name, amount});
    };

    switch (inst.family) {
        case Family::F1: {
            for (int j = 0; j < inst.n1; ++j) flag("x[" + std::to_string(j) + "] >= 0", -cand.x[j]);
            for (int i = 0; i < inst.S; ++i) {
                for (int l = 0; l < inst.n2; ++l)
                    flag("y_" + std::to_string(i) + "[" + std::to_string(l) + "] >= 0",
                         -cand.y[i][l]);
                flag("simplex_" + std::to_string(i),
                     std::abs(vsum(cand.x) + vsum(cand.y[i]) - 1.0));
            }
            break;
        }
        case Family::F2: {
            for (int j = 0; j < inst.n1; ++j)
                flag("binary_x[" + std::to_string(j) + "]",
                     std::abs(cand.x[j] * (1.0 - cand.x[j])));
            flag("cardinality", std::abs(vsum(cand.x) - (inst.S - 1.0)));
            double ynorm = 0.0;
            for (const auto& y : cand.y) ynorm += sq_norm(y);
            flag("sphere", std::abs(ynorm - 1.0));
            for (int i = 0; i < inst.S; ++i) {
                double worst = 0.0;
                for (double v : cand.y[i]) worst = std::max(worst, std::abs(v * cand.x[i]));
                flag("complementarity_" + std::to_string(i), worst);
            }
            break;
        }
        case Family::F3: {
            double total = sq_norm(cand.x);
            for (int i = 0; i < inst.S; ++i) {
                for (int l = 0; l < inst.n2; ++l)
                    flag("y_" + std::to_string(i) + "[" + std::to_string(l) + "] >= 0",
                         -cand.y[i][l]);
                total += sq_norm(cand.y[i]);
            }
            flag("ball", std::abs(total - 1.0));
            break;
        }
    }
    return rep;
}

CandidateSolution repair(const StructuredQCQP& inst, const CandidateSolution& cand) {
    if (check_feasible(inst, cand, 1e-12).ok()) return cand;

    CandidateSolution out = cand;
    out.x.resize(inst.n1, 0.0);
    out.y.resize(inst.S);
    for (auto& y : out.y) y.resize(inst.n2, 0.0);

    switch (inst.family) {
        case Family::F1: {
            for (double& v : out.x) v = std::max(v, 0.0);
            double sx = vsum(out.x);
            if (sx > 1.0) {
                for (double& v : out.x) v /= sx;
                sx = 1.0;
            }
            bool any_mass = sx > 0.0;
            for (auto& y : out.y) {
                for (double& v : y) v = std::max(v, 0.0);
                any_mass = any_mass || vsum(y) > 0.0;
            }
            if (!any_mass) {
                out.x.assign(inst.n1, 0.0);
                out.x[0] = 1.0;
                for (auto& y : out.y) y.assign(inst.n2, 0.0);
                return out;
            }
            const double t = 1.0 - sx;
            for (auto& y : out.y) {
                const double sy = vsum(y);
                if (t <= 1e-15) {
                    y.assign(inst.n2, 0.0);
                } else if (sy > 1e-15) {
                    for (double& v : y) v *= t / sy;
                } else {
                    y.assign(inst.n2, 0.0);
                    y[0] = t;
                }
            }
            break;
        }
        case Family::F2: {
            // The smallest coordinate is the one set to zero; everyone else
            // becomes one. Ties break toward the lowest index.
            int jmin = 0;
            for (int j = 1; j < inst.n1; ++j)
                if (out.x[j] < out.x[jmin]) jmin = j;
            out.x.assign(inst.n1, 1.0);
            out.x[jmin] = 0.0;
            for (int i = 0; i < inst.S; ++i)
                if (i != jmin) out.y[i].assign(inst.n2, 0.0);
            SymMat cj = inst.C[jmin];
            cj *= inst.p[jmin];
            Vec b = mat_vec(inst.B[jmin].transposed(), out.x);
            for (double& v : b) v *= inst.p[jmin];
            out.y[jmin] = linalg::trust_region_sphere(cj, b).y;
            break;
        }
        case Family::F3: {
            for (auto& y : out.y)
                for (double& v : y) v = std::max(v, 0.0);
            double total = sq_norm(out.x);
            for (const auto& y : out.y) total += sq_norm(y);
            if (total > 1e-28) {
                const double scale = 1.0 / std::sqrt(total);
                for (double& v : out.x) v *= scale;
                for (auto& y : out.y)
                    for (double& v : y) v *= scale;
            } else {
                // Zero input: put the unit mass where a single block is
                // locally best -- the bottom eigenvector of A or the best
                // diagonal cell of one scenario.
                const auto ea = linalg::sym_eig(inst.A);
                double best = ea.eigenvalues.back();
                int best_s = -1, best_l = -1;
                for (int i = 0; i < inst.S; ++i)
                    for (int l = 0; l < inst.n2; ++l) {
                        const double v = inst.p[i] * inst.C[i].get(l, l);
                        if (v < best) {
                            best = v;
                            best_s = i;
                            best_l = l;
                        }
                    }
                out.x.assign(inst.n1, 0.0);
                for (auto& y : out.y) y.assign(inst.n2, 0.0);
                if (best_s < 0) {
                    for (int j = 0; j < inst.n1; ++j)
                        out.x[j] = ea.eigenvectors(j, inst.n1 - 1);
                } else {
                    out.y[best_s][best_l] = 1.0;
                }
            }
            break;
        }
    }
    return out;
}

namespace {

using nlohmann::json;

json mat_to_json(const Matrix& m) {
    json arr = json::array();
    for (double v : m.data()) arr.push_back(v);
    return arr;
}

Matrix mat_from_json(const json& arr, int rows, int cols) {
    Matrix m(rows, cols);
    if (static_cast<int>(arr.size()) != rows * cols)
        throw std::invalid_argument("instance json: matrix size mismatch");
    for (int i = 0; i < rows * cols; ++i) m.data()[i] = arr[i].get<double>();
    return m;
}

json sym_to_json(const SymMat& m) { return mat_to_json(m.dense()); }

SymMat sym_from_json(const json& arr, int n) { return SymMat::from_dense(mat_from_json(arr, n, n)); }

}  // namespace

std::string save_instance_json(const StructuredQCQP& inst) {
    json j;
    j["family"] = family_name(inst.family);
    j["scheme"] = inst.source.scheme;
    j["seed"] = inst.source.seed;
    j["eps"] = inst.source.eps;
    j["n1"] = inst.n1;
    j["n2"] = inst.n2;
    j["S"] = inst.S;
    j["A"] = sym_to_json(inst.A);
    j["a"] = inst.a;
    json bs = json::array(), cs = json::array(), ls = json::array();
    for (const auto& b : inst.B) bs.push_back(mat_to_json(b));
    for (const auto& c : inst.C) cs.push_back(sym_to_json(c));
    for (const auto& l : inst.c) ls.push_back(l);
    j["B"] = bs;
    j["C"] = cs;
    j["c"] = ls;
    j["p"] = inst.p;
    return j.dump(1);
}

StructuredQCQP load_instance_json(const std::string& text) {
    json j = json::parse(text);
    ObjectiveData d;
    d.n1 = j.at("n1").get<int>();
    d.n2 = j.at("n2").get<int>();
    d.S = j.at("S").get<int>();
    d.scheme = j.value("scheme", 0);
    d.seed = j.value("seed", uint64_t{0});
    d.eps = j.value("eps", 0.0);
    d.A = sym_from_json(j.at("A"), d.n1);
    d.a = j.at("a").get<Vec>();
    for (int i = 0; i < d.S; ++i) {
        d.B.push_back(mat_from_json(j.at("B")[i], d.n1, d.n2));
        d.C.push_back(sym_from_json(j.at("C")[i], d.n2));
        d.c.push_back(j.at("c")[i].get<Vec>());
    }
    d.p = j.at("p").get<Vec>();
    return build_family(family_from_name(j.at("family").get<std::string>()), d);
}

void save_instance_file(const StructuredQCQP& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << save_instance_json(inst) << "\n";
}

StructuredQCQP load_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_instance_json(ss.str());
}

StructuredQCQP make_instance(Family family, int scheme, int n1, int n2, int s, double eps,
                             uint64_t seed) {
    ObjectiveData d = scheme == 1 ? gen_scheme1(n1, n2, s, eps, seed)
                                  : gen_scheme2(n1, n2, s, seed);
    return build_family(family, d);
}

}  // namespace cmp::model
