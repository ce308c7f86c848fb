#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "diam/error.hpp"

namespace diam {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
struct Matrix {
    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), a(r * c, fill) {}

    static Matrix identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    bool square() const { return rows == cols; }
    std::size_t size() const { return a.size(); }

    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // row-major, rows*cols entries
};

/// Lower-triangular factor, stored as a full row-major square with the
/// strictly-upper part kept at zero.
struct LowerTriangular {
    LowerTriangular() = default;
    explicit LowerTriangular(std::size_t n) : dim(n), a(n * n, 0.0) {}

    static LowerTriangular identity(std::size_t n);

    double& operator()(std::size_t i, std::size_t j) { return a[i * dim + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * dim + j]; }

    std::size_t dim = 0;
    std::vector<double> a;
};

struct EigenDecomposition {
    Matrix vectors;  // eigenvectors as columns, same order as values
    Vector values;   // ascending
};

// All kernels use a fixed left-to-right summation order per row so that
// runs are reproducible bit-for-bit given a seed.

/// Unpivoted Cholesky factorization m = L·Lᵀ.
/// Throws NotPositiveDefinite when a pivot is <= 0.
LowerTriangular cholesky(const Matrix& m);

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
Matrix spd_invert(const Matrix& m);

/// y = m·v for symmetric dense m.
Vector sym_matvec(const Matrix& m, std::span<const double> v);

/// y = m·v for general dense m.
Vector matvec(const Matrix& m, std::span<const double> v);

/// y = l·v for lower-triangular l.
Vector tri_matvec(const LowerTriangular& l, std::span<const double> v);

/// Solve l·y = v by forward substitution. Throws SingularDiagonal on a zero pivot.
Vector tri_solve(const LowerTriangular& l, std::span<const double> v);

/// Solve lᵀ·y = v by back substitution.
Vector tri_solve_transposed(const LowerTriangular& l, std::span<const double> v);

/// result = m + scale·v·vᵀ.
Matrix rank1_update(const Matrix& m, std::span<const double> v, double scale);

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues ascending; eigenvector columns orthonormal with a
/// deterministic sign convention. Throws ConvergenceFailure past the sweep cap.
EigenDecomposition sym_eigen(const Matrix& m);

// Small dense helpers shared by targets and diagnostics.
double dot(std::span<const double> a, std::span<const double> b);
double frobenius_norm(const Matrix& m);
double euclidean_norm(std::span<const double> v);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);
/// v·diag(w)·vᵀ for eigenvector columns v.
Matrix scaled_eigen_product(const Matrix& v, std::span<const double> w);
/// l·lᵀ as a dense matrix.
Matrix factor_to_covariance(const LowerTriangular& l);

}  // namespace diam
