#include "cmp/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cmp/rng.hpp"

namespace cmp::bounds {

using linalg::Matrix;
using linalg::SymMat;
using linalg::Vec;
using model::CandidateSolution;
using model::Family;
using model::StructuredQCQP;

namespace {

double now_between(std::chrono::steady_clock::time_point a,
                   std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

}  // namespace

std::string lower_method_name(LowerMethod m) {
    switch (m) {
        case LowerMethod::FullSdp: return "full_sdp";
        case LowerMethod::FullDnn: return "full_dnn";
        case LowerMethod::Cpi: return "cpi";
    }
    return "?";
}

std::string inner_method_name(InnerMethod m) {
    switch (m) {
        case InnerMethod::Ddc: return "ddc";
        case InnerMethod::Cps: return "cps";
        case InnerMethod::Cbc: return "cbc";
    }
    return "?";
}

LowerMethod lower_method_from_name(const std::string& s) {
    if (s == "full_sdp") return LowerMethod::FullSdp;
    if (s == "full_dnn") return LowerMethod::FullDnn;
    if (s == "cpi") return LowerMethod::Cpi;
    throw std::invalid_argument("unknown lower-bound method: " + s);
}

InnerMethod default_inner(Family f) {
    switch (f) {
        case Family::F1: return InnerMethod::Ddc;
        case Family::F2: return InnerMethod::Cps;
        case Family::F3: return InnerMethod::Cbc;
    }
    return InnerMethod::Ddc;
}

SolvedProgram run_lower(const StructuredQCQP& inst, LowerMethod method,
                        const solver::SolveSettings& settings) {
    SolvedProgram out;
    const auto t0 = std::chrono::steady_clock::now();
    relax::RelaxOptions opts;
    switch (method) {
        case LowerMethod::FullSdp:
            opts.dnn = false;
            out.program = relax::build_full_burer(inst, opts);
            break;
        case LowerMethod::FullDnn:
            out.program = relax::build_full_burer(inst, opts);
            break;
        case LowerMethod::Cpi:
            out.program = relax::build_cpi(inst, opts);
            break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.result = solver::solve(out.program, settings);
    const auto t2 = std::chrono::steady_clock::now();
    out.build_seconds = now_between(t0, t1);
    out.solve_seconds = now_between(t1, t2);
    return out;
}

SolvedProgram run_inner(const StructuredQCQP& inst, InnerMethod method,
                        const solver::SolveSettings& settings, const relax::RelaxOptions& opts) {
    SolvedProgram out;
    const auto t0 = std::chrono::steady_clock::now();
    switch (method) {
        case InnerMethod::Ddc: out.program = relax::build_ddc(inst, opts); break;
        case InnerMethod::Cps: out.program = relax::build_cps(inst, opts); break;
        case InnerMethod::Cbc: out.program = relax::build_cbc(inst, opts); break;
    }
    const auto t1 = std::chrono::steady_clock::now();
    out.result = solver::solve(out.program, settings);
    const auto t2 = std::chrono::steady_clock::now();
    out.build_seconds = now_between(t0, t1);
    out.solve_seconds = now_between(t1, t2);
    return out;
}

namespace {
void f1_polish(const StructuredQCQP& inst, CandidateSolution& cand);
}

UpperValue upper_bound(const StructuredQCQP& inst, const relax::ConicProgram& program,
                       const solver::SolveResult& result) {
    CandidateSolution raw = relax::extract_candidate(program, result.primal, inst);
    UpperValue out;
    out.cand = model::repair(inst, raw);
    // The paper's experiments polish the extracted point; plain repair cannot
    // leave the relaxation's optimal face when it is degenerate (scheme-1
    // instances have whole faces of optimal mixtures).
    if (inst.family == Family::F1) f1_polish(inst, out.cand);
    const auto rep = model::check_feasible(inst, out.cand, 1e-8);
    if (!rep.ok())
        throw std::runtime_error("upper_bound: repair failed to produce a feasible point");
    out.value = model::eval_objective(inst, out.cand);
    return out;
}

// ---------------------------------------------------------------------------
// F1 oracle: active-set enumeration.

namespace {

/// Big quadratic form of (x, y_1..y_S): v'Qv + l'v equals the instance
/// objective (scenario terms carry their p_i weights).
void f1_quadratic(const StructuredQCQP& inst, SymMat& q, Vec& l) {
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    const int n = n1 + s * n2;
    q = SymMat(n);
    l.assign(n, 0.0);
    for (int i = 0; i < n1; ++i)
        for (int j = i; j < n1; ++j) q.set(i, j, inst.A.get(i, j));
    for (int j = 0; j < n1; ++j) l[j] = inst.a[j];
    for (int i = 0; i < s; ++i) {
        const int off = n1 + i * n2;
        for (int el = 0; el < n2; ++el) {
            for (int el2 = el; el2 < n2; ++el2)
                q.set(off + el, off + el2, inst.p[i] * inst.C[i].get(el, el2));
            for (int j = 0; j < n1; ++j)
                q.set(j, off + el, 0.5 * inst.p[i] * inst.B[i](j, el));
            l[off + el] = inst.p[i] * inst.c[i][el];
        }
    }
}

double f1_value(const SymMat& q, const Vec& l, const Vec& v) {
    return linalg::dot(v, linalg::mat_vec(q.dense(), v)) + linalg::dot(l, v);
}

CandidateSolution f1_split(const StructuredQCQP& inst, const Vec& v) {
    CandidateSolution cand;
    cand.x.assign(v.begin(), v.begin() + inst.n1);
    for (int i = 0; i < inst.S; ++i)
        cand.y.emplace_back(v.begin() + inst.n1 + i * inst.n2,
                            v.begin() + inst.n1 + (i + 1) * inst.n2);
    return cand;
}

/// Stationary point of the quadratic on the face fixed by the support, or
/// nothing when the face's KKT system is inconsistent or leaves the cone.
std::optional<Vec> f1_face_point(const StructuredQCQP& inst, const Matrix& qd, const Vec& l,
                                 const std::vector<int>& supp) {
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    const int n = n1 + s * n2;
    const int t = static_cast<int>(supp.size());
    const int dim = t + s;

    SymMat kkt(dim);
    Vec rhs(dim, 0.0);
    for (int aa = 0; aa < t; ++aa) {
        for (int bb = aa; bb < t; ++bb) kkt.set(aa, bb, 2.0 * qd(supp[aa], supp[bb]));
        rhs[aa] = -l[supp[aa]];
    }
    for (int i = 0; i < s; ++i) {
        for (int aa = 0; aa < t; ++aa) {
            const int var = supp[aa];
            const bool in_x = var < n1;
            const bool in_yi = var >= n1 + i * n2 && var < n1 + (i + 1) * n2;
            if (in_x || in_yi) kkt.set(aa, t + i, 1.0);
        }
        rhs[t + i] = 1.0;
    }

    const SymMat pinv = linalg::pseudo_inverse(kkt, 1e-12);
    const Vec sol = linalg::mat_vec(pinv.dense(), rhs);
    const Vec back = linalg::mat_vec(kkt.dense(), sol);
    double resid = 0.0;
    for (int aa = 0; aa < dim; ++aa) resid = std::max(resid, std::abs(back[aa] - rhs[aa]));
    if (resid > 1e-8 * (1.0 + linalg::norm2(rhs))) return std::nullopt;

    Vec v(n, 0.0);
    for (int aa = 0; aa < t; ++aa) {
        if (sol[aa] < -1e-9) return std::nullopt;
        v[supp[aa]] = sol[aa];
    }
    if (!model::check_feasible(inst, f1_split(inst, v), 1e-7).ok()) return std::nullopt;
    return v;
}

/// Cheap structured candidates: one x vertex at a time, and the best
/// single-coordinate y per scenario with x = 0.
std::vector<Vec> f1_vertex_candidates(const StructuredQCQP& inst) {
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    const int n = n1 + s * n2;
    std::vector<Vec> out;
    for (int j = 0; j < n1; ++j) {
        Vec v(n, 0.0);
        v[j] = 1.0;
        out.push_back(std::move(v));
    }
    {
        Vec v(n, 0.0);
        for (int i = 0; i < s; ++i) {
            int lbest = 0;
            for (int el = 1; el < n2; ++el)
                if (inst.C[i].get(el, el) < inst.C[i].get(lbest, lbest)) lbest = el;
            v[n1 + i * n2 + lbest] = 1.0;
        }
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

double oracle_f1(const StructuredQCQP& inst) {
    if (inst.family != Family::F1) throw std::invalid_argument("oracle_f1: family is not f1");
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    const int n = n1 + s * n2;
    if (n > 14)
        throw std::invalid_argument("oracle_f1: instance too large for enumeration (n1 + S*n2 = " +
                                    std::to_string(n) + " > 14)");

    SymMat q;
    Vec l;
    f1_quadratic(inst, q, l);
    const Matrix qd = q.dense();

    double best = std::numeric_limits<double>::infinity();
    for (uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> supp;
        for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) supp.push_back(j);
        const auto v = f1_face_point(inst, qd, l, supp);
        if (v) best = std::min(best, f1_value(q, l, *v));
    }
    return best;
}

namespace {

// Exact projection onto {x >= 0, y_i >= 0, e'x + e'y_i = 1 for all i}.
// KKT: x = (u - sigma)_+, y_i = (w_i - lambda_i)_+, sigma = sum lambda_i.
void project_f1(const StructuredQCQP& inst, Vec& x, std::vector<Vec>& y) {
    const int s = inst.S;

    auto plus_sum = [](const Vec& v, double shift) {
        double t = 0.0;
        for (double a : v) t += std::max(a - shift, 0.0);
        return t;
    };

    // sigma0 with t(sigma0) = 1.
    double lo = *std::min_element(x.begin(), x.end()) - 2.0;
    double hi = *std::max_element(x.begin(), x.end());
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (plus_sum(x, mid) > 1.0)
            lo = mid;
        else
            hi = mid;
    }
    const double sigma0 = 0.5 * (lo + hi);

    auto lambda_for = [&](const Vec& w, double tau) {
        double llo = *std::min_element(w.begin(), w.end()) - tau - 1.0;
        double lhi = *std::max_element(w.begin(), w.end()) + 1.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (llo + lhi);
            if (plus_sum(w, mid) > tau)
                llo = mid;
            else
                lhi = mid;
        }
        return 0.5 * (llo + lhi);
    };

    auto h = [&](double sigma) {
        const double tau = 1.0 - plus_sum(x, sigma);
        double sum = 0.0;
        for (int i = 0; i < s; ++i) sum += lambda_for(y[i], tau);
        return sum - sigma;
    };

    double sigma = sigma0;
    if (h(sigma0) > 0) {
        double shi = sigma0;
        double span = 1.0;
        while (h(shi) > 0 && span < 1e8) {
            shi += span;
            span *= 2.0;
        }
        double slo = sigma0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (slo + shi);
            if (h(mid) > 0)
                slo = mid;
            else
                shi = mid;
        }
        sigma = 0.5 * (slo + shi);
    }

    const double tau = std::max(0.0, 1.0 - plus_sum(x, sigma));
    for (double& v : x) v = std::max(v - sigma, 0.0);
    for (int i = 0; i < s; ++i) {
        const double li = lambda_for(y[i], tau);
        for (double& v : y[i]) v = std::max(v - li, 0.0);
    }
}

}  // namespace

namespace {

/// Projected descent from (x, y), then an exact KKT solve on the final
/// support. Returns the best value and leaves the matching point in v_out.
double f1_descend(const StructuredQCQP& inst, const SymMat& q, const Matrix& qd, const Vec& l,
                  Vec x, std::vector<Vec> y, Vec& v_out) {
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    double qnorm = 0.0;
    for (double v : q.svec()) qnorm += v * v;
    const double step0 = 1.0 / (2.0 * std::sqrt(qnorm) + 1.0);

    auto flatten = [&](const Vec& xx, const std::vector<Vec>& yy) {
        Vec v(xx);
        for (const auto& yi : yy) v.insert(v.end(), yi.begin(), yi.end());
        return v;
    };

    project_f1(inst, x, y);
    double fcur = f1_value(q, l, flatten(x, y));
    double step = step0;
    for (int it = 0; it < 500; ++it) {
        const Vec v = flatten(x, y);
        Vec grad = linalg::mat_vec(qd, v);
        for (size_t j = 0; j < grad.size(); ++j) grad[j] = 2.0 * grad[j] + l[j];

        bool improved = false;
        for (int bt = 0; bt < 25; ++bt) {
            Vec xn = x;
            std::vector<Vec> yn = y;
            for (int j = 0; j < n1; ++j) xn[j] -= step * grad[j];
            for (int i = 0; i < s; ++i)
                for (int el = 0; el < n2; ++el) yn[i][el] -= step * grad[n1 + i * n2 + el];
            project_f1(inst, xn, yn);
            const double fn = f1_value(q, l, flatten(xn, yn));
            if (fn < fcur - 1e-14) {
                x = std::move(xn);
                y = std::move(yn);
                fcur = fn;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }

    v_out = flatten(x, y);
    // Face polish: the descent identifies the support, the KKT system gives
    // the exact stationary point on that face.
    std::vector<int> supp;
    for (size_t j = 0; j < v_out.size(); ++j)
        if (v_out[j] > 1e-7) supp.push_back(static_cast<int>(j));
    if (!supp.empty()) {
        const auto exact = f1_face_point(inst, qd, l, supp);
        if (exact) {
            const double fe = f1_value(q, l, *exact);
            if (fe < fcur) {
                fcur = fe;
                v_out = *exact;
            }
        }
    }
    return fcur;
}

}  // namespace

double oracle_f1_multistart(const StructuredQCQP& inst, int starts, uint64_t seed) {
    if (inst.family != Family::F1)
        throw std::invalid_argument("oracle_f1_multistart: family is not f1");
    SymMat q;
    Vec l;
    f1_quadratic(inst, q, l);
    const Matrix qd = q.dense();
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;

    Rng rng(seed);
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v : f1_vertex_candidates(inst)) {
        Vec tmp;
        best = std::min(best, f1_descend(inst, q, qd, l, f1_split(inst, v).x,
                                         f1_split(inst, v).y, tmp));
    }
    for (int start = 0; start < starts; ++start) {
        Vec x(n1);
        std::vector<Vec> y(s, Vec(n2));
        for (double& v : x) v = rng.u01();
        for (auto& yi : y)
            for (double& v : yi) v = rng.u01();
        Vec tmp;
        best = std::min(best, f1_descend(inst, q, qd, l, std::move(x), std::move(y), tmp));
    }
    return best;
}

namespace {

void f1_polish(const StructuredQCQP& inst, CandidateSolution& cand) {
    SymMat q;
    Vec l;
    f1_quadratic(inst, q, l);
    const Matrix qd = q.dense();

    Vec vbest;
    double best = f1_descend(inst, q, qd, l, cand.x, cand.y, vbest);
    for (const Vec& v : f1_vertex_candidates(inst)) {
        const double fv = f1_value(q, l, v);
        if (fv < best) {
            best = fv;
            vbest = v;
        }
    }
    const auto polished = f1_split(inst, vbest);
    if (model::check_feasible(inst, polished, 1e-9).ok() &&
        best <= model::eval_objective(inst, cand)) {
        cand = polished;
    }
}

}  // namespace

double oracle_f2(const StructuredQCQP& inst) {
    if (inst.family != Family::F2) throw std::invalid_argument("oracle_f2: family is not f2");
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < inst.S; ++j) {
        Vec x(inst.n1, 1.0);
        x[j] = 0.0;
        const double xax = linalg::dot(x, linalg::mat_vec(inst.A.dense(), x));
        SymMat cj = inst.C[j];
        cj *= inst.p[j];
        Vec b = linalg::mat_vec(inst.B[j].transposed(), x);
        for (double& v : b) v *= inst.p[j];
        const auto tr = linalg::trust_region_sphere(cj, b);
        best = std::min(best, xax + tr.value + linalg::dot(inst.a, x) +
                                  inst.p[j] * linalg::dot(inst.c[j], tr.y));
    }
    return best + inst.objective_offset;
}

// ---------------------------------------------------------------------------
// F3 oracle: alternating minimization on the combined sphere.

namespace {

struct F3State {
    Vec x;
    std::vector<Vec> y;
};

double f3_value(const StructuredQCQP& inst, const F3State& st) {
    return model::eval_objective(inst, {st.x, st.y});
}

void f3_normalize(F3State& st) {
    double total = linalg::dot(st.x, st.x);
    for (const auto& yi : st.y) total += linalg::dot(yi, yi);
    if (total <= 0) return;
    const double sc = 1.0 / std::sqrt(total);
    for (double& v : st.x) v *= sc;
    for (auto& yi : st.y)
        for (double& v : yi) v *= sc;
}

}  // namespace

double oracle_f3(const StructuredQCQP& inst, int restarts, uint64_t seed) {
    if (inst.family != Family::F3) throw std::invalid_argument("oracle_f3: family is not f3");
    const int n1 = inst.n1, n2 = inst.n2, s = inst.S;
    Rng rng(seed);

    const auto ea = linalg::sym_eig(inst.A);
    Vec eig_dir(n1);
    for (int j = 0; j < n1; ++j) eig_dir[j] = ea.eigenvectors(j, n1 - 1);

    // Stacked blockdiag(p_i C_i) used by the y-step.
    SymMat cblk(s * n2);
    for (int i = 0; i < s; ++i)
        for (int el = 0; el < n2; ++el)
            for (int el2 = el; el2 < n2; ++el2)
                cblk.set(i * n2 + el, i * n2 + el2, inst.p[i] * inst.C[i].get(el, el2));

    auto best_diag_cell = [&](int& bs, int& bl) {
        bs = 0;
        bl = 0;
        double bv = std::numeric_limits<double>::infinity();
        for (int i = 0; i < s; ++i)
            for (int el = 0; el < n2; ++el)
                if (inst.p[i] * inst.C[i].get(el, el) < bv) {
                    bv = inst.p[i] * inst.C[i].get(el, el);
                    bs = i;
                    bl = el;
                }
    };

    std::vector<F3State> starts;
    {
        int bs, bl;
        best_diag_cell(bs, bl);
        F3State st;
        st.x = eig_dir;
        st.y.assign(s, Vec(n2, 0.0));
        st.y[bs][bl] = 1.0;
        f3_normalize(st);
        starts.push_back(st);
        for (int i = 0; i < s; ++i) {
            F3State sti;
            sti.x = eig_dir;
            sti.y.assign(s, Vec(n2, 0.0));
            int il = 0;
            for (int el = 1; el < n2; ++el)
                if (inst.C[i].get(el, el) < inst.C[i].get(il, il)) il = el;
            sti.y[i][il] = 1.0;
            f3_normalize(sti);
            starts.push_back(sti);
        }
    }
    for (int t = 0; t < restarts; ++t) {
        F3State st;
        st.x.resize(n1);
        for (double& v : st.x) v = rng.uniform(-1.0, 1.0);
        st.y.assign(s, Vec(n2));
        for (auto& yi : st.y)
            for (double& v : yi) v = rng.u01();
        f3_normalize(st);
        starts.push_back(st);
    }

    double best = std::numeric_limits<double>::infinity();
    for (auto& st : starts) {
        double prev = f3_value(inst, st);
        for (int it = 0; it < 300; ++it) {
            // y-step at the current radius, projected back to the cone.
            double ry2 = 0.0;
            for (const auto& yi : st.y) ry2 += linalg::dot(yi, yi);
            const double ry = std::sqrt(std::max(0.0, ry2));
            if (ry > 1e-12) {
                Vec bb(s * n2, 0.0);
                for (int i = 0; i < s; ++i) {
                    const Vec bi = linalg::mat_vec(inst.B[i].transposed(), st.x);
                    for (int el = 0; el < n2; ++el) bb[i * n2 + el] = inst.p[i] * bi[el] * ry;
                }
                SymMat cs = cblk;
                cs *= ry * ry;
                const auto tr = linalg::trust_region_sphere(cs, bb);
                double mass = 0.0;
                for (int t2 = 0; t2 < s * n2; ++t2) mass += std::max(tr.y[t2], 0.0) *
                                                            std::max(tr.y[t2], 0.0);
                if (mass > 1e-20) {
                    const double sc = ry / std::sqrt(mass);
                    for (int i = 0; i < s; ++i)
                        for (int el = 0; el < n2; ++el)
                            st.y[i][el] = std::max(tr.y[i * n2 + el], 0.0) * sc;
                } else {
                    int bs, bl;
                    best_diag_cell(bs, bl);
                    for (auto& yi : st.y) yi.assign(n2, 0.0);
                    st.y[bs][bl] = ry;
                }
            }
            // x-step is an exact sphere solve at its radius.
            double rx2 = 1.0;
            for (const auto& yi : st.y) rx2 -= linalg::dot(yi, yi);
            const double rx = std::sqrt(std::max(0.0, rx2));
            if (rx > 1e-12) {
                Vec b(n1, 0.0);
                for (int i = 0; i < s; ++i) {
                    const Vec bi = linalg::mat_vec(inst.B[i], st.y[i]);
                    for (int j = 0; j < n1; ++j) b[j] += inst.p[i] * bi[j] * rx;
                }
                SymMat ca = inst.A;
                ca *= rx * rx;
                const auto tr = linalg::trust_region_sphere(ca, b);
                for (int j = 0; j < n1; ++j) st.x[j] = rx * tr.y[j];
            } else {
                st.x.assign(n1, 0.0);
            }
            // Mass reallocation between the x and y parts (exact 2x2 solve).
            const double nx = linalg::norm2(st.x);
            double ny2 = 0.0;
            for (const auto& yi : st.y) ny2 += linalg::dot(yi, yi);
            const double ny = std::sqrt(ny2);
            if (nx > 1e-12 && ny > 1e-12) {
                Vec u = st.x;
                for (double& v : u) v /= nx;
                std::vector<Vec> w = st.y;
                for (auto& yi : w)
                    for (double& v : yi) v /= ny;
                const double qa = linalg::dot(u, linalg::mat_vec(inst.A.dense(), u));
                double qb = 0.0, qc = 0.0;
                for (int i = 0; i < s; ++i) {
                    qb += inst.p[i] * linalg::dot(u, linalg::mat_vec(inst.B[i], w[i]));
                    qc += inst.p[i] *
                          linalg::dot(w[i], linalg::mat_vec(inst.C[i].dense(), w[i]));
                }
                SymMat m2(2);
                m2.set(0, 0, qa);
                m2.set(0, 1, 0.5 * qb);
                m2.set(1, 1, qc);
                const auto e2 = linalg::sym_eig(m2);
                double al = e2.eigenvectors(0, 1), be = e2.eigenvectors(1, 1);
                if (be < 0) {
                    al = -al;
                    be = -be;
                }
                for (int j = 0; j < n1; ++j) st.x[j] = al * u[j];
                for (int i = 0; i < s; ++i)
                    for (int el = 0; el < n2; ++el) st.y[i][el] = be * w[i][el];
            }
            f3_normalize(st);
            const double cur = f3_value(inst, st);
            if (std::abs(prev - cur) < 1e-13) {
                prev = cur;
                break;
            }
            prev = cur;
        }
        if (!model::check_feasible(inst, {st.x, st.y}, 1e-8).ok()) continue;
        best = std::min(best, prev);
    }
    return best;
}

OracleValue oracle(const StructuredQCQP& inst) {
    OracleValue out;
    switch (inst.family) {
        case Family::F1:
            if (inst.n1 + inst.S * inst.n2 <= 14) {
                out.value = oracle_f1(inst);
                out.kind = "exact-enumeration";
            } else {
                out.value = oracle_f1_multistart(inst);
                out.kind = "heuristic-multistart";
            }
            break;
        case Family::F2:
            out.value = oracle_f2(inst);
            out.kind = "exact-structure";
            break;
        case Family::F3:
            out.value = oracle_f3(inst);
            out.kind = "heuristic-multistart";
            break;
    }
    return out;
}

double gap_percent(double upper, double lower) {
    // Absolute fallback for vanishing lower bounds: dividing by a tiny
    // |lower| would turn solver noise into huge percentages.
    const double denom = std::abs(lower) < 1e-6 ? 1.0 : std::abs(lower);
    return 100.0 * (upper - lower) / denom;
}

InstanceReport gap_report(const StructuredQCQP& inst, const GapConfig& config) {
    InstanceReport rep;
    rep.instance_type = inst.instance_type();
    rep.family = inst.family;
    rep.seed = inst.source.seed;

    std::vector<LowerMethod> lowers = config.lowers;
    if (std::find(lowers.begin(), lowers.end(), LowerMethod::Cpi) == lowers.end())
        lowers.push_back(LowerMethod::Cpi);

    SolvedProgram cpi;
    for (LowerMethod m : lowers) {
        SolvedProgram sp = run_lower(inst, m, config.settings);
        const std::string name = lower_method_name(m);
        rep.lower[name] = sp.result.objective;
        rep.timings.push_back({name, sp.build_seconds, sp.solve_seconds});
        if (sp.result.status != solver::SolveStatus::Optimal)
            rep.notes.push_back(name + ": solver stopped at " +
                                std::to_string(sp.result.iterations) + " iterations");
        if (sp.result.objective <
            sp.result.dual_objective - 10.0 * config.settings.eps_gap *
                                           (1.0 + std::abs(sp.result.objective)))
            rep.notes.push_back(name + ": weak duality slack exceeded");
        if (m == LowerMethod::Cpi) cpi = std::move(sp);
    }
    rep.lb_cpi = rep.lower.at("cpi");

    try {
        const UpperValue ub = upper_bound(inst, cpi.program, cpi.result);
        rep.ub = ub.value;
        rep.gap_ub = gap_percent(ub.value, rep.lb_cpi);
        rep.solved_ub = *rep.gap_ub < kSolvedGapPercent;
    } catch (const std::exception& e) {
        rep.notes.push_back(std::string("ub: ") + e.what());
    }

    if (config.with_inner) {
        const InnerMethod im = default_inner(inst.family);
        SolvedProgram sp = run_inner(inst, im, config.settings);
        rep.inner_method = inner_method_name(im);
        rep.inner_value = sp.result.objective;
        rep.gap_inner = gap_percent(sp.result.objective, rep.lb_cpi);
        rep.timings.push_back({rep.inner_method, sp.build_seconds, sp.solve_seconds});
        if (sp.result.status != solver::SolveStatus::Optimal)
            rep.notes.push_back(rep.inner_method + ": solver stopped at " +
                                std::to_string(sp.result.iterations) + " iterations");
        if (sp.program.metadata.count("x")) {
            try {
                const UpperValue iub = upper_bound(inst, sp.program, sp.result);
                rep.iub = iub.value;
                rep.gap_iub = gap_percent(iub.value, rep.lb_cpi);
                rep.solved_iub = *rep.gap_iub < kSolvedGapPercent;
            } catch (const std::exception& e) {
                rep.notes.push_back(std::string("iub: ") + e.what());
            }
        }
    }

    if (config.with_oracle) {
        const auto t0 = std::chrono::steady_clock::now();
        const OracleValue ov = oracle(inst);
        const auto t1 = std::chrono::steady_clock::now();
        rep.oracle_value = ov.value;
        rep.oracle_kind = ov.kind;
        rep.gap_oracle = gap_percent(ov.value, rep.lb_cpi);
        rep.timings.push_back({"oracle", 0.0, now_between(t0, t1)});
    }
    return rep;
}

Aggregate aggregate_reports(const std::vector<InstanceReport>& rows) {
    Aggregate agg;
    if (rows.empty()) return agg;
    agg.instance_type = rows.front().instance_type;
    agg.count = static_cast<int>(rows.size());
    int n_ub = 0, n_i = 0, n_iub = 0, n_o = 0;
    for (const auto& r : rows) {
        if (r.gap_ub) {
            agg.mean_gap_ub += *r.gap_ub;
            ++n_ub;
        }
        if (r.gap_inner) {
            agg.mean_gap_inner += *r.gap_inner;
            ++n_i;
        }
        if (r.gap_iub) {
            agg.mean_gap_iub += *r.gap_iub;
            ++n_iub;
        }
        if (r.gap_oracle) {
            agg.mean_gap_oracle += *r.gap_oracle;
            ++n_o;
        }
        agg.solved_ub += r.solved_ub ? 1 : 0;
        agg.solved_iub += r.solved_iub ? 1 : 0;
        double build = 0.0, solve = 0.0;
        for (const auto& t : r.timings) {
            build += t.build_seconds;
            solve += t.solve_seconds;
        }
        agg.mean_build_seconds += build;
        agg.mean_solve_seconds += solve;
        agg.mean_total_seconds += build + solve;
    }
    if (n_ub) agg.mean_gap_ub /= n_ub;
    if (n_i) agg.mean_gap_inner /= n_i;
    if (n_iub) agg.mean_gap_iub /= n_iub;
    if (n_o) agg.mean_gap_oracle /= n_o;
    agg.mean_build_seconds /= agg.count;
    agg.mean_solve_seconds /= agg.count;
    agg.mean_total_seconds /= agg.count;
    return agg;
}

BenchResult run_bench(const std::vector<BenchSpec>& specs, const GapConfig& config,
                      int workers) {
    struct Job {
        size_t spec_index;
        uint64_t seed;
    };
    std::vector<Job> jobs;
    for (size_t si = 0; si < specs.size(); ++si)
        for (uint64_t seed : specs[si].seeds) jobs.push_back({si, seed});

    BenchResult out;
    out.rows.resize(jobs.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex err_mutex;

    auto work = [&]() {
        while (true) {
            const size_t idx = next.fetch_add(1);
            if (idx >= jobs.size() || failed.load()) break;
            const Job& job = jobs[idx];
            const BenchSpec& spec = specs[job.spec_index];
            try {
                const StructuredQCQP inst = model::make_instance(
                    spec.family, spec.scheme, spec.n1, spec.n2, spec.S, spec.eps, job.seed);
                out.rows[idx] = gap_report(inst, config);
            } catch (const std::exception& e) {
                std::scoped_lock lock(err_mutex);
                if (!failed.exchange(true))
                    first_error = "instance " + std::to_string(spec.n1) + "_" +
                                  std::to_string(spec.n2) + "_" + std::to_string(spec.S) + "_" +
                                  std::to_string(spec.scheme) + " seed " +
                                  std::to_string(job.seed) + ": " + e.what();
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failed.load()) throw std::runtime_error(first_error);

    size_t row = 0;
    for (const auto& spec : specs) {
        std::vector<InstanceReport> group(out.rows.begin() + row,
                                          out.rows.begin() + row + spec.seeds.size());
        out.aggregates.push_back(aggregate_reports(group));
        row += spec.seeds.size();
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

}  // namespace

std::string gaps_csv(const BenchResult& r) {
    std::ostringstream os;
    os << "instance_type,family,seed,lb_cpi,inner_method,inner,ub,iub,oracle,oracle_kind,"
          "gap_ub,gap_inner,gap_iub,gap_oracle,solved_ub,solved_iub,notes\n";
    for (const auto& row : r.rows) {
        os << row.instance_type << "," << model::family_name(row.family) << "," << row.seed
           << "," << fmt(row.lb_cpi) << "," << row.inner_method << ","
           << opt_fmt(row.inner_value) << "," << opt_fmt(row.ub) << "," << opt_fmt(row.iub)
           << "," << opt_fmt(row.oracle_value) << "," << row.oracle_kind << ","
           << opt_fmt(row.gap_ub) << "," << opt_fmt(row.gap_inner) << ","
           << opt_fmt(row.gap_iub) << "," << opt_fmt(row.gap_oracle) << ","
           << (row.solved_ub ? 1 : 0) << "," << (row.solved_iub ? 1 : 0) << ",";
        for (size_t i = 0; i < row.notes.size(); ++i)
            os << (i ? "; " : "") << row.notes[i];
        os << "\n";
    }
    os << "\n";
    os << "instance_type,count,UB,I,IUB,O,solved_UB,solved_IUB\n";
    for (const auto& agg : r.aggregates)
        os << agg.instance_type << "," << agg.count << "," << fmt(agg.mean_gap_ub) << ","
           << fmt(agg.mean_gap_inner) << "," << fmt(agg.mean_gap_iub) << ","
           << fmt(agg.mean_gap_oracle) << "," << agg.solved_ub << "," << agg.solved_iub << "\n";
    return os.str();
}

std::string times_csv(const BenchResult& r) {
    std::ostringstream os;
    os << "instance_type,seed,method,build_seconds,solve_seconds,total_seconds\n";
    for (const auto& row : r.rows)
        for (const auto& t : row.timings)
            os << row.instance_type << "," << row.seed << "," << t.method << ","
               << fmt(t.build_seconds) << "," << fmt(t.solve_seconds) << ","
               << fmt(t.total_seconds()) << "\n";
    os << "\n";
    os << "instance_type,count,mean_model_seconds,mean_solver_seconds,mean_total_seconds\n";
    for (const auto& agg : r.aggregates)
        os << agg.instance_type << "," << agg.count << "," << fmt(agg.mean_build_seconds) << ","
           << fmt(agg.mean_solve_seconds) << "," << fmt(agg.mean_total_seconds) << "\n";
    return os.str();
}

}  // namespace cmp::bounds
