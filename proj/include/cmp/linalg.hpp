#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace cmp::linalg {

using Vec = std::vector<double>;

/// Dense row-major matrix. Sized for desk-scale problems (order <= ~200);
/// no sparse storage.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    Vec& data() { return data_; }
    const Vec& data() const { return data_; }

    Matrix transposed() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    Vec data_;
};

Matrix mat_mul(const Matrix& a, const Matrix& b);
Vec mat_vec(const Matrix& a, const Vec& x);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);

/// Symmetric matrix in svec storage: the upper triangle in column order
/// (0,0),(0,1),(1,1),(0,2),... with off-diagonal entries scaled by sqrt(2),
/// so that dot(svec(A), svec(B)) equals the trace inner product A o B.
/// The sqrt(2) convention is shared with the conic solver's PSD blocks.
class SymMat {
public:
    SymMat() = default;
    explicit SymMat(int order) : n_(order), s_(svec_len(order), 0.0) {}

    static int svec_len(int order) { return order * (order + 1) / 2; }
    static int svec_index(int i, int j);  // requires i <= j
    static SymMat from_dense(const Matrix& m);
    static SymMat identity(int n);

    int order() const { return n_; }

    double get(int i, int j) const;
    void set(int i, int j, double v);
    void add(int i, int j, double v);

    Vec& svec() { return s_; }
    const Vec& svec() const { return s_; }

    Matrix dense() const;
    double trace() const;
    double norm_fro() const;
    bool all_finite() const;

    SymMat& operator+=(const SymMat& o);
    SymMat& operator*=(double t);

private:
    int n_ = 0;
    Vec s_;
};

/// Frobenius inner product, computed directly on svec storage.
double frobenius(const SymMat& a, const SymMat& b);

/// A * M * A^T for dense A (rows x order(M)).
SymMat congruence(const Matrix& a, const SymMat& m);

/// Outer product v v^T scaled by t.
SymMat rank_one(const Vec& v, double t = 1.0);

struct EigDecomposition {
    Vec eigenvalues;       // sorted descending
    Matrix eigenvectors;   // columns, matching order
};

/// Cyclic Jacobi eigendecomposition of a dense symmetric matrix.
/// Throws std::invalid_argument on non-finite input.
EigDecomposition sym_eig(const SymMat& m);

double lambda_min(const SymMat& m);
double lambda_max(const SymMat& m);

/// Frobenius-nearest positive semidefinite matrix (eigenvalue clamp).
SymMat project_psd(const SymMat& m);

/// Moore-Penrose inverse through the eigendecomposition. Eigenvalues with
/// |lambda| <= tol * max|lambda| are treated as zero.
SymMat pseudo_inverse(const SymMat& m, double tol = 1e-10);

struct SphereMin {
    Vec y;
    double value = 0.0;
};

/// Global minimizer of y'Cy + b'y over the unit sphere ||y|| = 1, solved in
/// the eigenbasis of C through the secular equation. Handles the hard case
/// (b orthogonal to the bottom eigenspace) by an explicit eigenspace
/// correction. Antipodal ties are broken toward a nonnegative first nonzero
/// coordinate.
SphereMin trust_region_sphere(const SymMat& c, const Vec& b);

}  // namespace cmp::linalg
