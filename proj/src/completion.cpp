#include "cmp/completion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cmp::completion {

using components::ConeKind;
using components::ConnectedComponents;
using components::GroundCones;
using linalg::Matrix;
using linalg::SymMat;
using linalg::Vec;

linalg::SymMat psd_complete_arrowhead(const ConnectedComponents& cc) {
    const int k = cc.k(), m = cc.m(), s = cc.scenarios();

    for (int i = 0; i < s; ++i) {
        const SymMat b = cc.block(i);
        const auto e = linalg::sym_eig(b);
        const double lmax = e.eigenvalues.empty() ? 0.0 : std::abs(e.eigenvalues.front());
        const double lmin = e.eigenvalues.empty() ? 0.0 : e.eigenvalues.back();
        if (lmin < -1e-8 * std::max(1.0, lmax))
            throw std::invalid_argument("psd_complete_arrowhead: block " + std::to_string(i) +
                                        " not PSD, lambda_min = " + std::to_string(lmin));
    }

    const SymMat xpinv = linalg::pseudo_inverse(cc.x_block());
    SymMat out = gamma(cc);
    for (int a = 0; a < s; ++a) {
        const Matrix za_pinv = mat_mul(cc.z_mat(a), xpinv.dense());
        for (int b = a + 1; b < s; ++b) {
            const Matrix cross = mat_mul(za_pinv, cc.z_mat(b).transposed());  // Y_ab, m x m
            for (int r = 0; r < m; ++r)
                for (int c = 0; c < m; ++c)
                    if (k + a * m + r < k + b * m + c)
                        out.set(k + a * m + r, k + b * m + c, cross(r, c));
        }
    }
    return out;
}

linalg::SymMat cpp_complete_coordinated(const Matrix& xbar,
                                        const std::vector<Matrix>& ybars,
                                        const GroundCones& cones) {
    const int k = xbar.rows();
    const int s = static_cast<int>(ybars.size());
    if (s != cones.scenarios())
        throw std::invalid_argument("cpp_complete_coordinated: scenario count mismatch");
    const int r = xbar.cols();
    const int m = s > 0 ? ybars[0].rows() : 0;
    for (const auto& y : ybars)
        if (y.cols() != r || y.rows() != m)
            throw std::invalid_argument("cpp_complete_coordinated: factor shape mismatch");

    if (cones.cone0 == ConeKind::Nonneg)
        for (int col = 0; col < r; ++col)
            for (int row = 0; row < k; ++row)
                if (xbar(row, col) < -1e-12)
                    throw std::invalid_argument(
                        "cpp_complete_coordinated: Xbar column " + std::to_string(col) +
                        " coordinate " + std::to_string(row) + " violates the ground cone");
    for (int i = 0; i < s; ++i)
        if (cones.cones[i] == ConeKind::Nonneg)
            for (int col = 0; col < r; ++col)
                for (int row = 0; row < m; ++row)
                    if (ybars[i](row, col) < -1e-12)
                        throw std::invalid_argument(
                            "cpp_complete_coordinated: Ybar_" + std::to_string(i) + " column " +
                            std::to_string(col) + " coordinate " + std::to_string(row) +
                            " violates the ground cone");

    const int n = k + s * m;
    Matrix stacked(n, r);
    for (int row = 0; row < k; ++row)
        for (int col = 0; col < r; ++col) stacked(row, col) = xbar(row, col);
    for (int i = 0; i < s; ++i)
        for (int row = 0; row < m; ++row)
            for (int col = 0; col < r; ++col)
                stacked(k + i * m + row, col) = ybars[i](row, col);

    SymMat out(n);
    for (int a = 0; a < n; ++a)
        for (int b = a; b < n; ++b) {
            double v = 0.0;
            for (int col = 0; col < r; ++col) v += stacked(a, col) * stacked(b, col);
            out.set(a, b, v);
        }
    return out;
}

linalg::SymMat cbc_complete(double x0, const std::vector<CbcScenarioFactors>& factors,
                            const GroundCones& cones) {
    const int s = static_cast<int>(factors.size());
    if (s != cones.scenarios())
        throw std::invalid_argument("cbc_complete: scenario count mismatch");
    const int m = cones.m;
    if (x0 < 0) throw std::invalid_argument("cbc_complete: x0 must be nonnegative");

    for (int i = 0; i < s; ++i) {
        const auto& sf = factors[i];
        if (sf.f.size() != sf.f0.size() || sf.f.empty())
            throw std::invalid_argument("cbc_complete: scenario " + std::to_string(i) +
                                        " is missing its factorization");
        double sum_sq = 0.0;
        for (size_t l = 0; l < sf.f.size(); ++l) {
            if (static_cast<int>(sf.f[l].size()) != m)
                throw std::invalid_argument("cbc_complete: factor length mismatch");
            if (sf.f0[l] < -1e-12)
                throw std::invalid_argument("cbc_complete: scalar factor part negative");
            if (cones.cones[i] == ConeKind::Nonneg)
                for (double v : sf.f[l])
                    if (v < -1e-12)
                        throw std::invalid_argument(
                            "cbc_complete: factor violates ground cone in scenario " +
                            std::to_string(i));
            sum_sq += sf.f0[l] * sf.f0[l];
        }
        if (std::abs(sum_sq - x0) > 1e-8 * std::max(1.0, x0))
            throw std::invalid_argument("cbc_complete: scalar parts of scenario " +
                                        std::to_string(i) + " do not reproduce x0");
    }

    const int n = 1 + s * m;

    if (x0 <= 0.0) {
        // All z_i vanish with x0; the zero fill is block diagonal.
        for (int i = 0; i < s; ++i)
            for (size_t l = 0; l < factors[i].f0.size(); ++l)
                if (std::abs(factors[i].f0[l]) > 1e-10)
                    throw std::invalid_argument(
                        "cbc_complete: x0 = 0 with nonzero z is not completable by this "
                        "construction");
        SymMat out(n);
        for (int i = 0; i < s; ++i)
            for (const auto& f : factors[i].f)
                for (int r = 0; r < m; ++r)
                    for (int c = r; c < m; ++c)
                        out.add(1 + i * m + r, 1 + i * m + c, f[r] * f[c]);
        return out;
    }

    const double scale = 1.0 / std::sqrt(x0);

    // Accumulated factors (a_t; u_t) of the completed leading part, scalar
    // coordinate first. Seed with scenario 1, then append one scenario per
    // induction step via v_{tk} = (a_t g0_k; g0_k u_t; a_t g_k).
    std::vector<double> acc_a;
    std::vector<Vec> acc_u;
    for (size_t l = 0; l < factors[0].f.size(); ++l) {
        acc_a.push_back(factors[0].f0[l] * scale);
        Vec u(factors[0].f[l]);
        for (double& v : u) v *= scale;
        acc_u.push_back(std::move(u));
    }

    for (int j = 1; j < s; ++j) {
        std::vector<double> next_a;
        std::vector<Vec> next_u;
        const int prev_len = j * m;
        for (size_t t = 0; t < acc_a.size(); ++t)
            for (size_t kf = 0; kf < factors[j].f.size(); ++kf) {
                const double g0 = factors[j].f0[kf] * scale;
                next_a.push_back(acc_a[t] * g0);
                Vec u(prev_len + m);
                for (int r = 0; r < prev_len; ++r) u[r] = g0 * acc_u[t][r];
                for (int r = 0; r < m; ++r) u[prev_len + r] = acc_a[t] * factors[j].f[kf][r] * scale;
                next_u.push_back(std::move(u));
            }
        acc_a = std::move(next_a);
        acc_u = std::move(next_u);
    }

    SymMat out(n);
    for (size_t t = 0; t < acc_a.size(); ++t) {
        Vec w(n);
        w[0] = acc_a[t];
        for (int r = 0; r < n - 1; ++r) w[1 + r] = acc_u[t][r];
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) out.add(a, b, x0 * w[a] * w[b]);
    }
    return out;
}

linalg::SymMat ddc_complete(const ConnectedComponents& cc) {
    const int s = cc.scenarios();
    int active = -1;
    for (int i = 0; i < s; ++i) {
        bool nonzero = cc.y_block(i).norm_fro() > 1e-14;
        for (const double v : cc.z_raw(i).data()) nonzero = nonzero || std::abs(v) > 1e-14;
        if (!nonzero) continue;
        if (active != -1)
            throw std::invalid_argument(
                "ddc_complete: more than one active scenario (cells " + std::to_string(active) +
                " and " + std::to_string(i) + ")");
        active = i;
    }
    if (active >= 0) {
        // The active Y block must be a single diagonal cell y e_k e_k' and the
        // Z block supported on the same row.
        const auto& y = cc.y_block(active);
        int cell = -1;
        for (int r = 0; r < cc.m(); ++r)
            for (int c = r; c < cc.m(); ++c)
                if (std::abs(y.get(r, c)) > 1e-12) {
                    if (r != c || (cell != -1 && cell != r))
                        throw std::invalid_argument("ddc_complete: Y block is not a diagonal cell");
                    cell = r;
                }
        for (int r = 0; r < cc.m(); ++r) {
            if (r == cell) continue;
            for (int c = 0; c < cc.k(); ++c)
                if (std::abs(cc.z_entry(active, r, c)) > 1e-12)
                    throw std::invalid_argument(
                        "ddc_complete: Z block supported outside the diagonal cell");
        }
    }
    return gamma(cc);
}

CompletionReport verify_completion(const specgraph::PartialMatrix& p, const SymMat& m,
                                   VerifyMode mode) {
    CompletionReport rep;
    if (p.order() != m.order()) {
        rep.violations.push_back({"order mismatch", -1, -1,
                                  static_cast<double>(p.order() - m.order())});
        return rep;
    }
    const int n = m.order();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            if (!p.specified(i, j)) continue;
            const double d = std::abs(p.value(i, j) - m.get(i, j));
            rep.max_entry_mismatch = std::max(rep.max_entry_mismatch, d);
            if (d > 1e-9) rep.violations.push_back({"specified entry mismatch", i, j, d});
        }

    const auto e = linalg::sym_eig(m);
    const double lmax = e.eigenvalues.empty() ? 0.0 : std::max(e.eigenvalues.front(), 0.0);
    rep.lambda_min = e.eigenvalues.empty() ? 0.0 : e.eigenvalues.back();
    if (rep.lambda_min < -1e-7 * std::max(lmax, 1e-9))
        rep.violations.push_back({"not PSD", -1, -1, rep.lambda_min});

    rep.min_entry = 0.0;
    if (mode == VerifyMode::Dnn) {
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                const double v = m.get(i, j);
                rep.min_entry = std::min(rep.min_entry, v);
                if (v < -1e-9) rep.violations.push_back({"negative entry", i, j, v});
            }
    }
    return rep;
}

}  // namespace cmp::completion
