#include "diam/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace diam {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidDimension: return "InvalidDimension";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::SingularDiagonal: return "SingularDiagonal";
        case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
        case ErrorCode::DegenerateTrace: return "DegenerateTrace";
        case ErrorCode::ZeroWithinVariance: return "ZeroWithinVariance";
        case ErrorCode::UnequalBatchSizes: return "UnequalBatchSizes";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

LowerTriangular LowerTriangular::identity(std::size_t n) {
    LowerTriangular l(n);
    for (std::size_t i = 0; i < n; ++i) l(i, i) = 1.0;
    return l;
}

namespace {

// Dot products accumulate in four fixed interleaved lanes folded in a fixed
// order: deterministic bit-for-bit, but without the serial FMA dependency of
// a single running sum.
inline double lane_dot(const double* a, const double* b, std::size_t n) {
    double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        l0 += a[j] * b[j];
        l1 += a[j + 1] * b[j + 1];
        l2 += a[j + 2] * b[j + 2];
        l3 += a[j + 3] * b[j + 3];
    }
    for (; j < n; ++j) l0 += a[j] * b[j];
    return ((l0 + l1) + l2) + l3;
}

double max_abs_entry(const Matrix& m) {
    double v = 0.0;
    for (double x : m.a) v = std::max(v, std::abs(x));
    return v;
}

void check_symmetric(const Matrix& m, const char* op) {
    require(m.square(), ErrorCode::InvalidArgument, std::string(op) + ": matrix must be square");
    const double scale = max_abs_entry(m);
    const double tol = 1e-12 * std::max(scale, 1.0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = i + 1; j < m.cols; ++j)
            require(std::abs(m(i, j) - m(j, i)) <= tol, ErrorCode::InvalidArgument,
                    std::string(op) + ": matrix not symmetric");
}

}  // namespace

LowerTriangular cholesky(const Matrix& m) {
    check_symmetric(m, "cholesky");
    const std::size_t n = m.rows;
    LowerTriangular l(n);
    for (std::size_t j = 0; j < n; ++j) {
        double sum_sq = 0.0;
        for (std::size_t k = 0; k < j; ++k) sum_sq += l(j, k) * l(j, k);
        const double pivot = m(j, j) - sum_sq;
        if (pivot <= 0.0 || !std::isfinite(pivot))
            fail(ErrorCode::NotPositiveDefinite,
                 "cholesky: pivot " + std::to_string(pivot) + " at column " + std::to_string(j));
        l(j, j) = std::sqrt(pivot);
        for (std::size_t i = j + 1; i < n; ++i) {
            double sum = 0.0;
            for (std::size_t k = 0; k < j; ++k) sum += l(i, k) * l(j, k);
            l(i, j) = (m(i, j) - sum) / l(j, j);
        }
    }
    return l;
}

Matrix spd_invert(const Matrix& m) {
    const LowerTriangular l = cholesky(m);
    const std::size_t n = l.dim;
    Matrix inv(n, n);
    Vector e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vector y = tri_solve(l, e);
        Vector x = tri_solve_transposed(l, y);
        for (std::size_t i = 0; i < n; ++i) inv(i, j) = x[i];
        e[j] = 0.0;
    }
    // chase out the asymmetry left by the column-by-column solves
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = v;
            inv(j, i) = v;
        }
    return inv;
}

Vector sym_matvec(const Matrix& m, std::span<const double> v) {
    require(m.square(), ErrorCode::InvalidArgument, "sym_matvec: matrix must be square");
    require(m.cols == v.size(), ErrorCode::DimensionMismatch, "sym_matvec: size mismatch");
    const std::size_t n = m.rows;
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = lane_dot(&m.a[i * n], v.data(), n);
    return y;
}

Vector matvec(const Matrix& m, std::span<const double> v) {
    require(m.cols == v.size(), ErrorCode::DimensionMismatch, "matvec: size mismatch");
    Vector y(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) y[i] = lane_dot(&m.a[i * m.cols], v.data(), m.cols);
    return y;
}

Vector tri_matvec(const LowerTriangular& l, std::span<const double> v) {
    require(l.dim == v.size(), ErrorCode::DimensionMismatch, "tri_matvec: size mismatch");
    const std::size_t n = l.dim;
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = lane_dot(&l.a[i * n], v.data(), i + 1);
    return y;
}

Vector tri_solve(const LowerTriangular& l, std::span<const double> v) {
    require(l.dim == v.size(), ErrorCode::DimensionMismatch, "tri_solve: size mismatch");
    const std::size_t n = l.dim;
    Vector y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = &l.a[i * n];
        require(row[i] != 0.0, ErrorCode::SingularDiagonal, "tri_solve: zero diagonal");
        y[i] = (v[i] - lane_dot(row, y.data(), i)) / row[i];
    }
    return y;
}

Vector tri_solve_transposed(const LowerTriangular& l, std::span<const double> v) {
    require(l.dim == v.size(), ErrorCode::DimensionMismatch, "tri_solve_transposed: size mismatch");
    const std::size_t n = l.dim;
    Vector y(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        require(l(ii, ii) != 0.0, ErrorCode::SingularDiagonal, "tri_solve_transposed: zero diagonal");
        double sum = v[ii];
        for (std::size_t j = ii + 1; j < n; ++j) sum -= l(j, ii) * y[j];
        y[ii] = sum / l(ii, ii);
    }
    return y;
}

Matrix rank1_update(const Matrix& m, std::span<const double> v, double scale) {
    require(m.square(), ErrorCode::InvalidArgument, "rank1_update: matrix must be square");
    require(m.rows == v.size(), ErrorCode::DimensionMismatch, "rank1_update: size mismatch");
    Matrix out = m;
    const std::size_t n = m.rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double si = scale * v[i];
        for (std::size_t j = 0; j < n; ++j) out(i, j) += si * v[j];
    }
    return out;
}

EigenDecomposition sym_eigen(const Matrix& m) {
    check_symmetric(m, "sym_eigen");
    const std::size_t n = m.rows;
    Matrix a = m;
    Matrix v = Matrix::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double tol = 1e-14 * std::max(frobenius_norm(m), 1.0);
    const int max_sweeps = 64;
    int sweep = 0;
    while (off_norm() > tol) {
        if (++sweep > max_sweeps)
            fail(ErrorCode::ConvergenceFailure, "sym_eigen: Jacobi sweep cap exceeded");
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (std::size_t k = 0; k < n; ++k) {
                    if (k != p && k != q) {
                        const double akp = a(k, p), akq = a(k, q);
                        a(k, p) = c * akp - s * akq;
                        a(p, k) = a(k, p);
                        a(k, q) = s * akp + c * akq;
                        a(q, k) = a(k, q);
                    }
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t src = order[j];
        out.values[j] = a(src, src);
        std::size_t arg = 0;
        double best = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(v(i, src)) > best) {
                best = std::abs(v(i, src));
                arg = i;
            }
        }
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = sign * v(i, src);
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), ErrorCode::DimensionMismatch, "dot: size mismatch");
    return lane_dot(a.data(), b.data(), a.size());
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double x : m.a) s += x * x;
    return std::sqrt(s);
}

double euclidean_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, ErrorCode::DimensionMismatch, "matmul: size mismatch");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = &b.a[k * b.cols];
            double* orow = &out.a[i * out.cols];
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

Matrix scaled_eigen_product(const Matrix& v, std::span<const double> w) {
    require(v.square(), ErrorCode::InvalidArgument, "scaled_eigen_product: matrix must be square");
    require(v.cols == w.size(), ErrorCode::DimensionMismatch, "scaled_eigen_product: size mismatch");
    const std::size_t n = v.rows;
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += v(i, k) * w[k] * v(j, k);
            out(i, j) = s;
        }
    return out;
}

Matrix factor_to_covariance(const LowerTriangular& l) {
    const std::size_t n = l.dim;
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k <= std::min(i, j); ++k) s += l(i, k) * l(j, k);
            out(i, j) = s;
            out(j, i) = s;
        }
    return out;
}

}  // namespace diam
