#include "cmp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cmp::linalg {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (int r = 0; r < rows_; ++r)
        for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix mat_mul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("mat_mul: shape mismatch");
    Matrix out(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

Vec mat_vec(const Matrix& a, const Vec& x) {
    if (a.cols() != static_cast<int>(x.size()))
        throw std::invalid_argument("mat_vec: shape mismatch");
    Vec out(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        out[i] = s;
    }
    return out;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

int SymMat::svec_index(int i, int j) { return j * (j + 1) / 2 + i; }

SymMat SymMat::from_dense(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SymMat: matrix not square");
    SymMat s(m.rows());
    for (int j = 0; j < m.cols(); ++j)
        for (int i = 0; i <= j; ++i) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return s;
}

SymMat SymMat::identity(int n) {
    SymMat s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
}

double SymMat::get(int i, int j) const {
    if (i > j) std::swap(i, j);
    const double v = s_[svec_index(i, j)];
    return i == j ? v : v / kSqrt2;
}

void SymMat::set(int i, int j, double v) {
    if (i > j) std::swap(i, j);
    s_[svec_index(i, j)] = (i == j) ? v : v * kSqrt2;
}

void SymMat::add(int i, int j, double v) {
    if (i > j) std::swap(i, j);
    s_[svec_index(i, j)] += (i == j) ? v : v * kSqrt2;
}

Matrix SymMat::dense() const {
    Matrix m(n_, n_);
    for (int j = 0; j < n_; ++j)
        for (int i = 0; i <= j; ++i) m(i, j) = m(j, i) = get(i, j);
    return m;
}

double SymMat::trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += s_[svec_index(i, i)];
    return t;
}

double SymMat::norm_fro() const { return std::sqrt(dot(s_, s_)); }

bool SymMat::all_finite() const {
    for (double v : s_)
        if (!std::isfinite(v)) return false;
    return true;
}

SymMat& SymMat::operator+=(const SymMat& o) {
    if (o.order() != n_) throw std::invalid_argument("SymMat +=: order mismatch");
    for (size_t i = 0; i < s_.size(); ++i) s_[i] += o.s_[i];
    return *this;
}

SymMat& SymMat::operator*=(double t) {
    for (double& v : s_) v *= t;
    return *this;
}

double frobenius(const SymMat& a, const SymMat& b) {
    if (a.order() != b.order()) throw std::invalid_argument("frobenius: order mismatch");
    return dot(a.svec(), b.svec());
}

SymMat congruence(const Matrix& a, const SymMat& m) {
    Matrix am = mat_mul(a, m.dense());
    Matrix full = mat_mul(am, a.transposed());
    return SymMat::from_dense(full);
}

SymMat rank_one(const Vec& v, double t) {
    SymMat s(static_cast<int>(v.size()));
    for (int j = 0; j < s.order(); ++j)
        for (int i = 0; i <= j; ++i) s.set(i, j, t * v[i] * v[j]);
    return s;
}

EigDecomposition sym_eig(const SymMat& m) {
    if (!m.all_finite()) throw std::invalid_argument("sym_eig: non-finite entries");
    const int n = m.order();
    Matrix a = m.dense();
    Matrix q = Matrix::identity(n);

    if (n == 0) return {Vec{}, q};

    double norm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) norm += a(i, j) * a(i, j);
    norm = std::sqrt(norm);
    const double target = 1e-13 * std::max(norm, 1e-300);

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
        if (std::sqrt(off) <= target) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int qi = p + 1; qi < n; ++qi) {
                const double apq = a(p, qi);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(qi, qi) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double app = a(p, p), aqq = a(qi, qi);
                a(p, p) = app - t * apq;
                a(qi, qi) = aqq + t * apq;
                a(p, qi) = a(qi, p) = 0.0;
                for (int r = 0; r < n; ++r) {
                    if (r != p && r != qi) {
                        const double arp = a(r, p), arq = a(r, qi);
                        a(r, p) = a(p, r) = arp - s * (arq + tau * arp);
                        a(r, qi) = a(qi, r) = arq + s * (arp - tau * arq);
                    }
                    const double qrp = q(r, p), qrq = q(r, qi);
                    q(r, p) = qrp - s * (qrq + tau * qrp);
                    q(r, qi) = qrq + s * (qrp - tau * qrq);
                }
            }
        }
    }

    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int l, int r) { return a(l, l) > a(r, r); });

    EigDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        out.eigenvalues[k] = a(idx[k], idx[k]);
        for (int r = 0; r < n; ++r) out.eigenvectors(r, k) = q(r, idx[k]);
    }
    return out;
}

double lambda_min(const SymMat& m) {
    const auto e = sym_eig(m);
    return e.eigenvalues.empty() ? 0.0 : e.eigenvalues.back();
}

double lambda_max(const SymMat& m) {
    const auto e = sym_eig(m);
    return e.eigenvalues.empty() ? 0.0 : e.eigenvalues.front();
}

namespace {

SymMat rebuild_with_spectrum(const EigDecomposition& e, const Vec& lam) {
    const int n = e.eigenvectors.rows();
    SymMat out(n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) {
            double v = 0.0;
            for (int k = 0; k < n; ++k)
                v += lam[k] * e.eigenvectors(i, k) * e.eigenvectors(j, k);
            out.set(i, j, v);
        }
    return out;
}

}  // namespace

SymMat project_psd(const SymMat& m) {
    auto e = sym_eig(m);
    Vec lam = e.eigenvalues;
    for (double& v : lam) v = std::max(v, 0.0);
    return rebuild_with_spectrum(e, lam);
}

SymMat pseudo_inverse(const SymMat& m, double tol) {
    auto e = sym_eig(m);
    double amax = 0.0;
    for (double v : e.eigenvalues) amax = std::max(amax, std::abs(v));
    Vec lam(e.eigenvalues.size(), 0.0);
    for (size_t k = 0; k < lam.size(); ++k) {
        const double v = e.eigenvalues[k];
        if (std::abs(v) > tol * amax) lam[k] = 1.0 / v;
    }
    return rebuild_with_spectrum(e, lam);
}

namespace {

// Flip sign so the first coordinate above the noise floor is positive.
void canonicalize_sign(Vec& v) {
    for (double x : v) {
        if (std::abs(x) > 1e-12) {
            if (x < 0)
                for (double& y : v) y = -y;
            return;
        }
    }
}

}  // namespace

SphereMin trust_region_sphere(const SymMat& c, const Vec& b) {
    const int n = c.order();
    if (static_cast<int>(b.size()) != n)
        throw std::invalid_argument("trust_region_sphere: dim(b) != order(C)");

    const auto e = sym_eig(c);
    // Ascending order is the natural frame for the secular equation.
    Vec mu(n);
    Matrix q(n, n);
    for (int k = 0; k < n; ++k) {
        mu[k] = e.eigenvalues[n - 1 - k];
        for (int r = 0; r < n; ++r) q(r, k) = e.eigenvectors(r, n - 1 - k);
    }
    Vec beta = mat_vec(q.transposed(), b);

    const double bnorm = norm2(b);
    const double spread = std::max(1.0, std::abs(mu[0]) + std::abs(mu[n - 1]));
    const double group_tol = 1e-9 * spread;

    Vec ycoef(n, 0.0);

    auto assemble = [&](const Vec& coef) {
        Vec y = mat_vec(q, coef);
        const double nn = norm2(y);
        if (nn > 0)
            for (double& v : y) v /= nn;
        SphereMin out;
        out.y = y;
        const Matrix cd = c.dense();
        out.value = dot(y, mat_vec(cd, y)) + dot(b, y);
        return out;
    };

    if (bnorm <= 1e-14 * spread) {
        ycoef[0] = 1.0;
        auto out = assemble(ycoef);
        canonicalize_sign(out.y);
        out.value = mu[0];
        return out;
    }

    // Component of b inside the bottom eigenspace decides the hard case.
    double bot2 = 0.0;
    for (int k = 0; k < n; ++k)
        if (mu[k] <= mu[0] + group_tol) bot2 += beta[k] * beta[k];

    const auto phi = [&](double lam) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            const double d = mu[k] + lam;
            s += beta[k] * beta[k] / (4.0 * d * d);
        }
        return s;
    };

    if (std::sqrt(bot2) <= 1e-12 * bnorm) {
        // phi at the left end, bottom eigenspace excluded.
        double s = 0.0;
        for (int k = 0; k < n; ++k) {
            if (mu[k] <= mu[0] + group_tol) continue;
            const double d = mu[k] - mu[0];
            s += beta[k] * beta[k] / (4.0 * d * d);
        }
        if (s <= 1.0) {
            // Hard case: boundary multiplier plus bottom-eigenspace correction.
            for (int k = 0; k < n; ++k) {
                if (mu[k] <= mu[0] + group_tol) continue;
                ycoef[k] = -beta[k] / (2.0 * (mu[k] - mu[0]));
            }
            double tau = std::sqrt(std::max(0.0, 1.0 - s));
            Vec bottom(n, 0.0);
            for (int r = 0; r < n; ++r) bottom[r] = q(r, 0);
            canonicalize_sign(bottom);
            Vec y = mat_vec(q, ycoef);
            for (int r = 0; r < n; ++r) y[r] += tau * bottom[r];
            const double nn = norm2(y);
            for (double& v : y) v /= nn;
            SphereMin out;
            out.y = y;
            const Matrix cd = c.dense();
            out.value = dot(y, mat_vec(cd, y)) + dot(b, y);
            return out;
        }
    }

    // Secular equation phi(lam) = 1 on (-mu_min, inf): phi is decreasing.
    double lo = -mu[0] + std::sqrt(std::max(bot2, 1e-300)) / 2.0;
    double hi = -mu[0] + bnorm / 2.0 + 1e-30;
    if (phi(lo) < 1.0) {
        // bot2 underestimates the left bracket; widen downward.
        lo = -mu[0] + 1e-300;
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (phi(mid) > 1.0)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-16 * std::max(1.0, std::abs(hi))) break;
    }
    const double lam = 0.5 * (lo + hi);
    for (int k = 0; k < n; ++k) ycoef[k] = -beta[k] / (2.0 * (mu[k] + lam));
    return assemble(ycoef);
}

}  // namespace cmp::linalg
