#include "cmp/relax.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace cmp::relax {

using components::ConeKind;
using linalg::Matrix;
using linalg::SymMat;
using linalg::Vec;
using model::Family;
using model::StructuredQCQP;

namespace {
constexpr double kSqrt2 = 1.4142135623730951;

int sidx(int i, int j) { return SymMat::svec_index(i, j); }

std::string row_key(const Row& row, double rhs) {
    std::string key;
    key.reserve(row.size() * 12 + 8);
    for (const auto& [idx, coef] : row) {
        key.append(reinterpret_cast<const char*>(&idx), sizeof(idx));
        key.append(reinterpret_cast<const char*>(&coef), sizeof(coef));
    }
    key.append(reinterpret_cast<const char*>(&rhs), sizeof(rhs));
    return key;
}

}  // namespace

int ConicProgram::add_cone(ConeTag tag, const std::string& name) {
    const int start = num_vars;
    cone_offsets.push_back(start);
    num_vars += tag.length();
    objective.resize(num_vars, 0.0);
    if (!name.empty()) metadata[name] = {start, tag.length()};
    cones.push_back(std::move(tag));
    return start;
}

void ConicProgram::add_row(Row row, double b) {
    std::sort(row.begin(), row.end());
    Row merged;
    for (const auto& [idx, coef] : row) {
        if (!merged.empty() && merged.back().first == idx)
            merged.back().second += coef;
        else
            merged.emplace_back(idx, coef);
    }
    std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });

    const std::string key = row_key(merged, b);
    const size_t h = std::hash<std::string>{}(key);
    for (size_t prev : row_hashes_)
        if (prev == h) {
            // Hash hit: compare for a true duplicate.
            for (size_t r = 0; r < rows.size(); ++r)
                if (rows[r] == merged && rhs[r] == b) return;
            break;
        }
    row_hashes_.push_back(h);
    rows.push_back(std::move(merged));
    rhs.push_back(b);
}

int ConicProgram::psd_scalar_count() const {
    int n = 0;
    for (const auto& c : cones)
        if (c.kind == ConeTag::Kind::Psd) n += c.length();
    return n;
}

std::string ConicProgram::describe() const {
    std::ostringstream os;
    os << kind << ": " << num_vars << " vars, " << rows.size() << " rows";
    for (const auto& c : cones) {
        if (c.kind != ConeTag::Kind::Psd) continue;
        int masked = 0;
        for (uint8_t m : c.nonneg_mask) masked += m;
        os << "\n  psd block order " << c.dim << (c.exact ? " EXACT" : " OUTER");
        if (masked) os << " mask " << masked;
    }
    return os.str();
}

std::string ConicProgram::dump_json() const {
    nlohmann::json j;
    j["kind"] = kind;
    j["num_vars"] = num_vars;
    j["objective"] = objective;
    j["offset"] = offset;
    j["rhs"] = rhs;
    nlohmann::json rws = nlohmann::json::array();
    for (const auto& row : rows) {
        nlohmann::json r = nlohmann::json::array();
        for (const auto& [idx, coef] : row) r.push_back({idx, coef});
        rws.push_back(r);
    }
    j["rows"] = rws;
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : cones) {
        nlohmann::json cj;
        switch (c.kind) {
            case ConeTag::Kind::Zero: cj["kind"] = "zero"; break;
            case ConeTag::Kind::Free: cj["kind"] = "free"; break;
            case ConeTag::Kind::Nonneg: cj["kind"] = "nonneg"; break;
            case ConeTag::Kind::Psd: cj["kind"] = "psd"; break;
        }
        cj["dim"] = c.dim;
        cj["exact"] = c.exact;
        if (!c.nonneg_mask.empty()) cj["mask"] = c.nonneg_mask;
        cs.push_back(cj);
    }
    j["cones"] = cs;
    nlohmann::json md;
    for (const auto& [name, range] : metadata) md[name] = {range.begin, range.size};
    j["metadata"] = md;
    j["valid_lower_bound"] = valid_lower_bound();
    j["valid_upper_bound"] = valid_upper_bound();
    return j.dump(1);
}

ConeTag cone_represent(const std::vector<bool>& orthant_coords, bool use_mask) {
    const int d = static_cast<int>(orthant_coords.size());
    if (d <= 0) throw std::invalid_argument("cone_represent: empty coordinate list");
    int p = 0;
    for (bool o : orthant_coords) p += o ? 1 : 0;

    ConeTag tag;
    tag.kind = ConeTag::Kind::Psd;
    tag.dim = d;
    if (use_mask && p >= 2) {
        tag.nonneg_mask.assign(SymMat::svec_len(d), 0);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i <= j; ++i)
                if (orthant_coords[i] && orthant_coords[j]) tag.nonneg_mask[sidx(i, j)] = 1;
        tag.exact = p <= 4;
    } else {
        tag.exact = p <= 1;
    }
    return tag;
}

namespace {

std::vector<bool> coord_flags(bool homogenized, ConeKind cone0, int n1,
                              const std::vector<ConeKind>* scenario, int n2) {
    std::vector<bool> flags;
    if (homogenized) flags.push_back(true);
    for (int j = 0; j < n1; ++j) flags.push_back(cone0 == ConeKind::Nonneg);
    if (scenario)
        for (ConeKind ck : *scenario)
            for (int l = 0; l < n2; ++l) flags.push_back(ck == ConeKind::Nonneg);
    return flags;
}

/// Shared assembly state: named variables plus the standard row machinery
/// that every builder reuses.
struct Assembler {
    const StructuredQCQP& inst;
    const RelaxOptions& opts;
    ConicProgram p;
    int n1, n2, S;
    VarRange vx, vX;
    std::vector<VarRange> vy, vZ, vY;
    bool has_border = true;

    Assembler(const StructuredQCQP& instance, const RelaxOptions& options, std::string kind)
        : inst(instance), opts(options), n1(instance.n1), n2(instance.n2), S(instance.S) {
        p.kind = std::move(kind);
    }

    VarRange add_named(const std::string& name, int size) {
        ConeTag t;
        t.kind = ConeTag::Kind::Free;
        t.dim = size;
        const int start = p.add_cone(t, name);
        return {start, size};
    }

    void add_named_core(bool with_border) {
        has_border = with_border;
        if (with_border) vx = add_named("x", n1);
        vX = add_named("X", SymMat::svec_len(n1));
        for (int i = 0; i < S; ++i) {
            if (with_border) vy.push_back(add_named("y_" + std::to_string(i), n2));
            vZ.push_back(add_named("Z_" + std::to_string(i), n2 * n1));
            vY.push_back(add_named("Y_" + std::to_string(i), SymMat::svec_len(n2)));
        }
    }

    // Ties one homogenized block [1 x' y'; x X Z'; y Z Y] at cone offset bo
    // to the named variables; the corner row normalizes the lift.
    void link_homog_block(int bo, int i) {
        p.add_row({{bo + sidx(0, 0), 1.0}}, 1.0);
        for (int j = 0; j < n1; ++j)
            p.add_row({{bo + sidx(0, 1 + j), 1.0}, {vx.begin + j, -kSqrt2}}, 0.0);
        for (int l = 0; l < n2; ++l)
            p.add_row({{bo + sidx(0, 1 + n1 + l), 1.0}, {vy[i].begin + l, -kSqrt2}}, 0.0);
        link_block_xzy(bo, 1, i);
    }

    // Links the [X Z'; Z Y] part of a block whose X part starts at matrix
    // coordinate x_at.
    void link_block_xzy(int bo, int x_at, int i) {
        for (int j = 0; j < n1; ++j)
            for (int j2 = j; j2 < n1; ++j2)
                p.add_row({{bo + sidx(x_at + j, x_at + j2), 1.0},
                           {vX.begin + sidx(j, j2), -1.0}},
                          0.0);
        for (int l = 0; l < n2; ++l)
            for (int j = 0; j < n1; ++j)
                p.add_row({{bo + sidx(x_at + j, x_at + n1 + l), 1.0},
                           {vZ[i].begin + l * n1 + j, -kSqrt2}},
                          0.0);
        for (int l = 0; l < n2; ++l)
            for (int l2 = l; l2 < n2; ++l2)
                p.add_row({{bo + sidx(x_at + n1 + l, x_at + n1 + l2), 1.0},
                           {vY[i].begin + sidx(l, l2), -1.0}},
                          0.0);
    }

    void first_moment_rows() {
        for (int i = 0; i < S; ++i) {
            const Matrix& f = inst.F[i];
            const Matrix& g = inst.G[i];
            for (int t = 0; t < f.rows(); ++t) {
                Row row;
                for (int j = 0; j < n1; ++j)
                    if (f(t, j) != 0.0) row.emplace_back(vx.begin + j, f(t, j));
                for (int l = 0; l < n2; ++l)
                    if (g(t, l) != 0.0) row.emplace_back(vy[i].begin + l, g(t, l));
                p.add_row(std::move(row), inst.r[i][t]);
            }
        }
    }

    void squared_diag_rows() {
        for (int i = 0; i < S; ++i) {
            const Matrix& f = inst.F[i];
            const Matrix& g = inst.G[i];
            for (int t = 0; t < f.rows(); ++t) {
                Row row;
                SymMat qx(n1);
                for (int j = 0; j < n1; ++j)
                    for (int j2 = j; j2 < n1; ++j2) qx.set(j, j2, f(t, j) * f(t, j2));
                for (int idx = 0; idx < SymMat::svec_len(n1); ++idx)
                    if (qx.svec()[idx] != 0.0) row.emplace_back(vX.begin + idx, qx.svec()[idx]);
                for (int l = 0; l < n2; ++l)
                    for (int j = 0; j < n1; ++j) {
                        const double cz = 2.0 * f(t, j) * g(t, l);
                        if (cz != 0.0) row.emplace_back(vZ[i].begin + l * n1 + j, cz);
                    }
                SymMat qy(n2);
                for (int l = 0; l < n2; ++l)
                    for (int l2 = l; l2 < n2; ++l2) qy.set(l, l2, g(t, l) * g(t, l2));
                for (int idx = 0; idx < SymMat::svec_len(n2); ++idx)
                    if (qy.svec()[idx] != 0.0) row.emplace_back(vY[i].begin + idx, qy.svec()[idx]);
                p.add_row(std::move(row), inst.r[i][t] * inst.r[i][t]);
            }
        }
    }

    void lifted_rows() {
        for (const auto& q : inst.lifted) {
            Row row;
            if (!q.coef_x.empty()) {
                if (!has_border)
                    throw std::invalid_argument(p.kind + ": lifted constraint '" + q.name +
                                                "' touches x but the border is dropped");
                for (int j = 0; j < n1; ++j)
                    if (q.coef_x[j] != 0.0) row.emplace_back(vx.begin + j, q.coef_x[j]);
            }
            if (q.coef_X.order() == n1)
                for (int idx = 0; idx < SymMat::svec_len(n1); ++idx)
                    if (q.coef_X.svec()[idx] != 0.0)
                        row.emplace_back(vX.begin + idx, q.coef_X.svec()[idx]);
            for (int i = 0; i < S; ++i) {
                if (!q.coef_y.empty() && !q.coef_y[i].empty()) {
                    if (!has_border)
                        throw std::invalid_argument(p.kind + ": lifted constraint '" + q.name +
                                                    "' touches y but the border is dropped");
                    for (int l = 0; l < n2; ++l)
                        if (q.coef_y[i][l] != 0.0)
                            row.emplace_back(vy[i].begin + l, q.coef_y[i][l]);
                }
                if (!q.coef_Z.empty() && q.coef_Z[i].rows() == n2)
                    for (int l = 0; l < n2; ++l)
                        for (int j = 0; j < n1; ++j)
                            if (q.coef_Z[i](l, j) != 0.0)
                                row.emplace_back(vZ[i].begin + l * n1 + j, q.coef_Z[i](l, j));
                if (!q.coef_Y.empty() && q.coef_Y[i].order() == n2)
                    for (int idx = 0; idx < SymMat::svec_len(n2); ++idx)
                        if (q.coef_Y[i].svec()[idx] != 0.0)
                            row.emplace_back(vY[i].begin + idx, q.coef_Y[i].svec()[idx]);
            }
            p.add_row(std::move(row), q.rhs);
        }
        if (inst.family == Family::F2 && inst.f2_diag_x && has_border) {
            for (int j = 0; j < n1; ++j)
                p.add_row({{vX.begin + sidx(j, j), 1.0}, {vx.begin + j, -1.0}}, 0.0);
        }
    }

    void objective() {
        if (has_border) {
            for (int j = 0; j < n1; ++j) p.objective[vx.begin + j] = inst.a[j];
        } else {
            for (double v : inst.a)
                if (v != 0.0)
                    throw std::invalid_argument(p.kind + ": linear term a requires the border");
        }
        for (int idx = 0; idx < SymMat::svec_len(n1); ++idx)
            p.objective[vX.begin + idx] = inst.A.svec()[idx];
        for (int i = 0; i < S; ++i) {
            if (has_border) {
                for (int l = 0; l < n2; ++l)
                    p.objective[vy[i].begin + l] = inst.p[i] * inst.c[i][l];
            } else {
                for (double v : inst.c[i])
                    if (v != 0.0)
                        throw std::invalid_argument(p.kind +
                                                    ": linear term c requires the border");
            }
            for (int l = 0; l < n2; ++l)
                for (int j = 0; j < n1; ++j)
                    p.objective[vZ[i].begin + l * n1 + j] = inst.p[i] * inst.B[i](j, l);
            for (int idx = 0; idx < SymMat::svec_len(n2); ++idx)
                p.objective[vY[i].begin + idx] = inst.p[i] * inst.C[i].svec()[idx];
        }
        p.offset = inst.objective_offset;
    }
};

}  // namespace

ConicProgram build_full_burer(const StructuredQCQP& inst, const RelaxOptions& opts) {
    Assembler a(inst, opts, "full_burer");
    a.add_named_core(true);
    const int n1 = a.n1, n2 = a.n2, S = a.S;

    std::vector<bool> flags = coord_flags(true, inst.cone0, n1, &inst.cones, n2);
    ConeTag tag = cone_represent(flags, opts.dnn);
    a.p.all_cells_exact = tag.exact;
    const int bo = a.p.add_cone(tag, "block");

    a.p.add_row({{bo + sidx(0, 0), 1.0}}, 1.0);
    for (int j = 0; j < n1; ++j)
        a.p.add_row({{bo + sidx(0, 1 + j), 1.0}, {a.vx.begin + j, -kSqrt2}}, 0.0);
    for (int j = 0; j < n1; ++j)
        for (int j2 = j; j2 < n1; ++j2)
            a.p.add_row({{bo + sidx(1 + j, 1 + j2), 1.0}, {a.vX.begin + sidx(j, j2), -1.0}}, 0.0);
    for (int i = 0; i < S; ++i) {
        const int yo = 1 + n1 + i * n2;
        for (int l = 0; l < n2; ++l)
            a.p.add_row({{bo + sidx(0, yo + l), 1.0}, {a.vy[i].begin + l, -kSqrt2}}, 0.0);
        for (int l = 0; l < n2; ++l)
            for (int j = 0; j < n1; ++j)
                a.p.add_row({{bo + sidx(1 + j, yo + l), 1.0},
                             {a.vZ[i].begin + l * n1 + j, -kSqrt2}},
                            0.0);
        for (int l = 0; l < n2; ++l)
            for (int l2 = l; l2 < n2; ++l2)
                a.p.add_row({{bo + sidx(yo + l, yo + l2), 1.0},
                             {a.vY[i].begin + sidx(l, l2), -1.0}},
                            0.0);
        // Cross-scenario blocks Y_{ij} stay unlinked inside the cone.
    }

    a.first_moment_rows();
    a.squared_diag_rows();
    a.lifted_rows();
    a.objective();
    a.p.outer_pipeline = true;
    return std::move(a.p);
}

ConicProgram build_cpi(const StructuredQCQP& inst, const RelaxOptions& opts) {
    Assembler a(inst, opts, "cpi");
    a.add_named_core(true);

    bool exact = true;
    for (int i = 0; i < a.S; ++i) {
        std::vector<ConeKind> one{inst.cones[i]};
        std::vector<bool> flags = coord_flags(true, inst.cone0, a.n1, &one, a.n2);
        ConeTag tag = cone_represent(flags, opts.dnn);
        exact = exact && tag.exact;
        const int bo = a.p.add_cone(tag, "block_" + std::to_string(i));
        a.link_homog_block(bo, i);
    }
    a.p.all_cells_exact = exact;

    a.first_moment_rows();
    a.squared_diag_rows();
    a.lifted_rows();
    a.objective();
    a.p.outer_pipeline = true;
    return std::move(a.p);
}

ConicProgram build_cps(const StructuredQCQP& inst, const RelaxOptions& opts) {
    Assembler a(inst, opts, "cps");
    a.add_named_core(true);
    const int n1 = a.n1, n2 = a.n2, S = a.S;

    std::vector<VarRange> vW;
    for (int i = 0; i < S; ++i)
        vW.push_back(a.add_named("W_" + std::to_string(i), SymMat::svec_len(1 + n1)));

    bool exact = true;
    for (int i = 0; i < S; ++i) {
        std::vector<ConeKind> one{inst.cones[i]};
        std::vector<bool> flags = coord_flags(true, inst.cone0, n1, &one, n2);
        ConeTag tag = cone_represent(flags, opts.dnn);
        exact = exact && tag.exact;
        const int bo = a.p.add_cone(tag, "block_" + std::to_string(i));
        // North-west part of the block is this scenario's W_i.
        for (int u = 0; u < 1 + n1; ++u)
            for (int v = u; v < 1 + n1; ++v)
                a.p.add_row({{bo + sidx(u, v), 1.0}, {vW[i].begin + sidx(u, v), -1.0}}, 0.0);
        for (int l = 0; l < n2; ++l) {
            a.p.add_row({{bo + sidx(0, 1 + n1 + l), 1.0}, {a.vy[i].begin + l, -kSqrt2}}, 0.0);
            for (int j = 0; j < n1; ++j)
                a.p.add_row({{bo + sidx(1 + j, 1 + n1 + l), 1.0},
                             {a.vZ[i].begin + l * n1 + j, -kSqrt2}},
                            0.0);
            for (int l2 = l; l2 < n2; ++l2)
                a.p.add_row({{bo + sidx(1 + n1 + l, 1 + n1 + l2), 1.0},
                             {a.vY[i].begin + sidx(l, l2), -1.0}},
                            0.0);
        }
    }
    a.p.all_cells_exact = exact;

    // Coupling sum W_i = [1 x'; x X].
    {
        Row corner;
        for (int i = 0; i < S; ++i) corner.emplace_back(vW[i].begin + sidx(0, 0), 1.0);
        a.p.add_row(std::move(corner), 1.0);
    }
    for (int j = 0; j < n1; ++j) {
        Row row;
        for (int i = 0; i < S; ++i) row.emplace_back(vW[i].begin + sidx(0, 1 + j), 1.0);
        row.emplace_back(a.vx.begin + j, -kSqrt2);
        a.p.add_row(std::move(row), 0.0);
    }
    for (int j = 0; j < n1; ++j)
        for (int j2 = j; j2 < n1; ++j2) {
            Row row;
            for (int i = 0; i < S; ++i)
                row.emplace_back(vW[i].begin + sidx(1 + j, 1 + j2), 1.0);
            row.emplace_back(a.vX.begin + sidx(j, j2), -1.0);
            a.p.add_row(std::move(row), 0.0);
        }

    if (opts.cps_fix_yz_zero) {
        for (int i = 0; i < S; ++i) {
            for (int l = 0; l < n2; ++l) a.p.add_row({{a.vy[i].begin + l, 1.0}}, 0.0);
            for (int t = 0; t < n2 * n1; ++t) a.p.add_row({{a.vZ[i].begin + t, 1.0}}, 0.0);
            for (int t = 0; t < SymMat::svec_len(n2); ++t)
                a.p.add_row({{a.vY[i].begin + t, 1.0}}, 0.0);
        }
    }

    a.first_moment_rows();
    a.squared_diag_rows();
    a.lifted_rows();
    a.objective();
    a.p.inner_pipeline = true;
    return std::move(a.p);
}

ConicProgram build_ddc(const StructuredQCQP& inst, const RelaxOptions& opts) {
    Assembler a(inst, opts, "ddc");
    a.add_named_core(true);
    const int n1 = a.n1, n2 = a.n2, S = a.S;

    std::vector<std::pair<int, int>> cells = opts.ddc_cells;
    if (cells.empty())
        for (int s = 0; s < S; ++s)
            for (int k = 0; k < n2; ++k) cells.emplace_back(k, s);
    std::set<std::pair<int, int>> cell_set;
    for (auto [k, s] : cells) {
        if (k < 0 || k >= n2 || s < 0 || s >= S)
            throw std::invalid_argument("build_ddc: cell index out of range");
        cell_set.insert({k, s});
    }

    bool exact = true;
    std::vector<int> offsets;
    std::vector<std::pair<int, int>> order(cell_set.begin(), cell_set.end());
    for (auto [k, s] : order) {
        std::vector<bool> flags = coord_flags(true, inst.cone0, n1, nullptr, 0);
        flags.push_back(inst.cones[s] == ConeKind::Nonneg);
        ConeTag tag = cone_represent(flags, opts.dnn);
        exact = exact && tag.exact;
        offsets.push_back(a.p.add_cone(tag, "cell_" + std::to_string(k) + "_" + std::to_string(s)));
    }
    a.p.all_cells_exact = exact;

    // Aggregate homogenized north-west part over all cells.
    {
        Row corner;
        for (int b : offsets) corner.emplace_back(b + sidx(0, 0), 1.0);
        a.p.add_row(std::move(corner), 1.0);
    }
    for (int j = 0; j < n1; ++j) {
        Row row;
        for (int b : offsets) row.emplace_back(b + sidx(0, 1 + j), 1.0);
        row.emplace_back(a.vx.begin + j, -kSqrt2);
        a.p.add_row(std::move(row), 0.0);
    }
    for (int j = 0; j < n1; ++j)
        for (int j2 = j; j2 < n1; ++j2) {
            Row row;
            for (int b : offsets) row.emplace_back(b + sidx(1 + j, 1 + j2), 1.0);
            row.emplace_back(a.vX.begin + sidx(j, j2), -1.0);
            a.p.add_row(std::move(row), 0.0);
        }

    // Per-cell identification of the y coordinate, Z row and Y diagonal cell.
    for (size_t t = 0; t < order.size(); ++t) {
        const auto [k, s] = order[t];
        const int b = offsets[t];
        a.p.add_row({{b + sidx(0, 1 + n1), 1.0}, {a.vy[s].begin + k, -kSqrt2}}, 0.0);
        for (int j = 0; j < n1; ++j)
            a.p.add_row({{b + sidx(1 + j, 1 + n1), 1.0},
                         {a.vZ[s].begin + k * n1 + j, -kSqrt2}},
                        0.0);
        a.p.add_row({{b + sidx(1 + n1, 1 + n1), 1.0}, {a.vY[s].begin + sidx(k, k), -1.0}}, 0.0);
    }

    // Everything a cell does not provide is pinned to zero: off-diagonal Y
    // entries always, whole cells when a subset is selected.
    for (int s = 0; s < S; ++s)
        for (int l = 0; l < n2; ++l)
            for (int l2 = l; l2 < n2; ++l2) {
                if (l != l2) {
                    a.p.add_row({{a.vY[s].begin + sidx(l, l2), 1.0}}, 0.0);
                } else if (!cell_set.count({l, s})) {
                    a.p.add_row({{a.vY[s].begin + sidx(l, l), 1.0}}, 0.0);
                    a.p.add_row({{a.vy[s].begin + l, 1.0}}, 0.0);
                    for (int j = 0; j < n1; ++j)
                        a.p.add_row({{a.vZ[s].begin + l * n1 + j, 1.0}}, 0.0);
                }
            }

    a.first_moment_rows();
    a.squared_diag_rows();
    a.lifted_rows();
    a.objective();
    a.p.inner_pipeline = true;
    return std::move(a.p);
}

ConicProgram build_cbc(const StructuredQCQP& inst, const RelaxOptions& opts) {
    for (const auto& f : inst.F)
        if (f.rows() > 0)
            throw std::invalid_argument(
                "build_cbc: requires a homogeneous instance (no linear constraints); "
                "only family f3 qualifies");

    Assembler a(inst, opts, "cbc");
    a.add_named_core(false);
    const int n1 = a.n1, n2 = a.n2, S = a.S;

    VarRange vdiag = a.add_named("xdiag", n1);

    bool exact = true;
    std::vector<std::vector<int>> offsets(n1, std::vector<int>(S));
    for (int k = 0; k < n1; ++k)
        for (int i = 0; i < S; ++i) {
            std::vector<bool> flags{true};
            for (int l = 0; l < n2; ++l) flags.push_back(inst.cones[i] == ConeKind::Nonneg);
            ConeTag tag = cone_represent(flags, opts.dnn);
            exact = exact && tag.exact;
            offsets[k][i] =
                a.p.add_cone(tag, "cbc_" + std::to_string(k) + "_" + std::to_string(i));
        }
    a.p.all_cells_exact = exact;

    for (int k = 0; k < n1; ++k)
        for (int i = 0; i < S; ++i) {
            const int b = offsets[k][i];
            // Shared scalar of component k.
            a.p.add_row({{b + sidx(0, 0), 1.0}, {vdiag.begin + k, -1.0}}, 0.0);
            for (int l = 0; l < n2; ++l)
                a.p.add_row({{b + sidx(0, 1 + l), 1.0},
                             {a.vZ[i].begin + l * n1 + k, -kSqrt2}},
                            0.0);
        }
    // Y_i aggregates the scenario parts over the components.
    for (int i = 0; i < S; ++i)
        for (int l = 0; l < n2; ++l)
            for (int l2 = l; l2 < n2; ++l2) {
                Row row;
                for (int k = 0; k < n1; ++k)
                    row.emplace_back(offsets[k][i] + sidx(1 + l, 1 + l2), 1.0);
                row.emplace_back(a.vY[i].begin + sidx(l, l2), -1.0);
                a.p.add_row(std::move(row), 0.0);
            }
    // X is the diagonal assembled from the component scalars.
    for (int j = 0; j < n1; ++j)
        for (int j2 = j; j2 < n1; ++j2) {
            if (j == j2)
                a.p.add_row({{a.vX.begin + sidx(j, j), 1.0}, {vdiag.begin + j, -1.0}}, 0.0);
            else
                a.p.add_row({{a.vX.begin + sidx(j, j2), 1.0}}, 0.0);
        }

    a.lifted_rows();
    a.objective();
    a.p.inner_pipeline = true;
    return std::move(a.p);
}

ConicProgram build_f2_cmp(const StructuredQCQP& inst, F2Variant variant,
                          const RelaxOptions& opts) {
    if (inst.family != Family::F2)
        throw std::invalid_argument("build_f2_cmp: instance is not family f2");
    ConicProgram p = variant == F2Variant::Cpi ? build_cpi(inst, opts) : build_cps(inst, opts);
    p.kind = variant == F2Variant::Cpi ? "f2_cmp_cpi" : "f2_cmp_cps";
    return p;
}

Vec extract_vec(const ConicProgram& p, const Vec& primal, const std::string& name) {
    auto it = p.metadata.find(name);
    if (it == p.metadata.end())
        throw std::invalid_argument("program '" + p.kind + "' has no variable range '" + name +
                                    "'");
    Vec out(it->second.size);
    for (int t = 0; t < it->second.size; ++t) out[t] = primal[it->second.begin + t];
    return out;
}

SymMat extract_sym(const ConicProgram& p, const Vec& primal, const std::string& name,
                   int order) {
    Vec raw = extract_vec(p, primal, name);
    if (static_cast<int>(raw.size()) != SymMat::svec_len(order))
        throw std::invalid_argument("extract_sym: range size does not match order");
    SymMat m(order);
    m.svec() = std::move(raw);
    return m;
}

model::CandidateSolution extract_candidate(const ConicProgram& p, const Vec& primal,
                                           const StructuredQCQP& inst) {
    model::CandidateSolution cand;
    cand.x = extract_vec(p, primal, "x");
    for (int i = 0; i < inst.S; ++i)
        cand.y.push_back(extract_vec(p, primal, "y_" + std::to_string(i)));
    return cand;
}

namespace {

void put_range(Vec& v, const VarRange& r, const Vec& values) {
    for (int t = 0; t < r.size; ++t) v[r.begin + t] = values[t];
}

const VarRange& need(const ConicProgram& p, const std::string& name) {
    auto it = p.metadata.find(name);
    if (it == p.metadata.end())
        throw std::invalid_argument("program '" + p.kind + "' has no range '" + name + "'");
    return it->second;
}

}  // namespace

Vec point_from_candidate(const ConicProgram& p, const StructuredQCQP& inst,
                         const model::CandidateSolution& cand) {
    const int n1 = inst.n1, n2 = inst.n2, S = inst.S;
    Vec v(p.num_vars, 0.0);

    SymMat xx = linalg::rank_one(cand.x);
    std::vector<SymMat> yy;
    for (int i = 0; i < S; ++i) yy.push_back(linalg::rank_one(cand.y[i]));
    auto zfill = [&](int i) {
        Vec z(static_cast<size_t>(n2) * n1);
        for (int l = 0; l < n2; ++l)
            for (int j = 0; j < n1; ++j) z[l * n1 + j] = cand.y[i][l] * cand.x[j];
        return z;
    };

    const bool has_border = p.metadata.count("x") > 0;
    if (has_border) {
        put_range(v, need(p, "x"), cand.x);
        for (int i = 0; i < S; ++i) put_range(v, need(p, "y_" + std::to_string(i)), cand.y[i]);
    }
    put_range(v, need(p, "X"), xx.svec());
    for (int i = 0; i < S; ++i) {
        put_range(v, need(p, "Z_" + std::to_string(i)), zfill(i));
        put_range(v, need(p, "Y_" + std::to_string(i)), yy[i].svec());
    }

    auto lift_vec = [&](const std::vector<const Vec*>& parts, bool lead_one) {
        Vec w;
        if (lead_one) w.push_back(1.0);
        for (const Vec* part : parts) w.insert(w.end(), part->begin(), part->end());
        return w;
    };

    if (p.kind == "full_burer") {
        std::vector<const Vec*> parts{&cand.x};
        for (int i = 0; i < S; ++i) parts.push_back(&cand.y[i]);
        put_range(v, need(p, "block"), linalg::rank_one(lift_vec(parts, true)).svec());
    } else if (p.kind == "cpi" || p.kind == "f2_cmp_cpi") {
        for (int i = 0; i < S; ++i)
            put_range(v, need(p, "block_" + std::to_string(i)),
                      linalg::rank_one(lift_vec({&cand.x, &cand.y[i]}, true)).svec());
    } else if (p.kind == "cps" || p.kind == "f2_cmp_cps") {
        int active = -1;
        for (int i = 0; i < S; ++i)
            for (double y : cand.y[i])
                if (std::abs(y) > 1e-12) {
                    if (active != -1 && active != i)
                        throw std::invalid_argument(
                            "point_from_candidate: cps expresses at most one active scenario");
                    active = i;
                }
        if (active == -1) active = 0;
        put_range(v, need(p, "W_" + std::to_string(active)),
                  linalg::rank_one(lift_vec({&cand.x}, true)).svec());
        put_range(v, need(p, "block_" + std::to_string(active)),
                  linalg::rank_one(lift_vec({&cand.x, &cand.y[active]}, true)).svec());
    } else if (p.kind == "ddc") {
        int ck = -1, cs = -1;
        for (int s = 0; s < S; ++s)
            for (int k = 0; k < n2; ++k)
                if (std::abs(cand.y[s][k]) > 1e-12) {
                    if (cs != -1)
                        throw std::invalid_argument(
                            "point_from_candidate: ddc expresses at most one active cell");
                    ck = k;
                    cs = s;
                }
        if (cs == -1) {
            ck = 0;
            cs = 0;
        }
        Vec w = lift_vec({&cand.x}, true);
        w.push_back(cand.y[cs][ck]);
        put_range(v, need(p, "cell_" + std::to_string(ck) + "_" + std::to_string(cs)),
                  linalg::rank_one(w).svec());
    } else if (p.kind == "cbc") {
        int support = -1;
        for (int j = 0; j < n1; ++j)
            if (std::abs(cand.x[j]) > 1e-12) {
                if (support != -1)
                    throw std::invalid_argument(
                        "point_from_candidate: cbc expresses a single-support x only");
                support = j;
            }
        if (support == -1) support = 0;
        const double t = cand.x[support];
        if (t < 0)
            throw std::invalid_argument("point_from_candidate: cbc needs x >= 0 on its support");
        Vec diag(n1, 0.0);
        diag[support] = t * t;
        put_range(v, need(p, "xdiag"), diag);
        for (int i = 0; i < S; ++i) {
            Vec w{t};
            w.insert(w.end(), cand.y[i].begin(), cand.y[i].end());
            put_range(v, need(p, "cbc_" + std::to_string(support) + "_" + std::to_string(i)),
                      linalg::rank_one(w).svec());
        }
    } else {
        throw std::invalid_argument("point_from_candidate: unknown program kind " + p.kind);
    }
    return v;
}

double max_row_violation(const ConicProgram& p, const Vec& v) {
    double worst = 0.0;
    for (size_t r = 0; r < p.rows.size(); ++r) {
        double s = 0.0;
        for (const auto& [idx, coef] : p.rows[r]) s += coef * v[idx];
        worst = std::max(worst, std::abs(s - p.rhs[r]));
    }
    return worst;
}

double objective_value(const ConicProgram& p, const Vec& v) {
    return linalg::dot(p.objective, v) + p.offset;
}

}  // namespace cmp::relax
